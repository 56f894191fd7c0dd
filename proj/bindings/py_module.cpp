// python surface of the qwell core: model vocabulary, the five solvers'
// main operations, and the domain exceptions
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qwell/dmc.hpp"
#include "qwell/errors.hpp"
#include "qwell/exact_diag.hpp"
#include "qwell/meanfield.hpp"
#include "qwell/model.hpp"
#include "qwell/single_particle.hpp"
#include "qwell/tonks.hpp"

namespace py = pybind11;
using namespace qwell;

PYBIND11_MODULE(_core, m) {
  m.doc() = "1D bosons with contact interactions in a finite square well";

  // ---- exceptions ---------------------------------------------------------
  py::register_exception<UnboundError>(m, "UnboundError");
  py::register_exception<NonConvergedError>(m, "NonConvergedError");
  py::register_exception<BracketError>(m, "BracketError");
  py::register_exception<PopulationError>(m, "PopulationError");
  py::register_exception<ConfigError>(m, "ConfigError");

  // ---- model ---------------------------------------------------------------
  py::class_<WellSpec>(m, "WellSpec")
      .def(py::init<>())
      .def(py::init([](double V0, double L, double D) {
             WellSpec w;
             w.V0 = V0;
             w.L = L;
             w.D = D;
             w.validate();
             return w;
           }),
           py::arg("V0"), py::arg("L") = 1.0, py::arg("D") = 10.0)
      .def_readwrite("V0", &WellSpec::V0)
      .def_readwrite("L", &WellSpec::L)
      .def_readwrite("D", &WellSpec::D)
      .def("validate", &WellSpec::validate)
      .def("with_depth", &WellSpec::with_depth)
      .def("with_box", &WellSpec::with_box)
      .def("__repr__", [](const WellSpec& w) {
        std::ostringstream os;
        os << "WellSpec(V0=" << w.V0 << ", L=" << w.L << ", D=" << w.D << ")";
        return os.str();
      });

  py::enum_<RampShape>(m, "RampShape")
      .value("Exponential", RampShape::Exponential)
      .value("Linear", RampShape::Linear);

  py::class_<ScheduleSpec>(m, "ScheduleSpec")
      .def(py::init<>())
      .def_readwrite("V0", &ScheduleSpec::V0)
      .def_readwrite("tau", &ScheduleSpec::tau)
      .def_readwrite("rate", &ScheduleSpec::rate)
      .def_readwrite("shape", &ScheduleSpec::shape)
      .def("validate", &ScheduleSpec::validate)
      .def("depth_at", &ScheduleSpec::depth_at)
      .def("rate_at", &ScheduleSpec::rate_at);

  m.def("g_from_scattering", &g_from_scattering, py::arg("a_s"),
        py::arg("a_perp"));

  py::enum_<BoundaryMethod>(m, "BoundaryMethod")
      .value("Tonks", BoundaryMethod::Tonks)
      .value("TF", BoundaryMethod::TF)
      .value("Diag", BoundaryMethod::Diag)
      .value("Dmc", BoundaryMethod::Dmc);

  py::class_<BoundaryPoint>(m, "BoundaryPoint")
      .def(py::init<>())
      .def_readwrite("N", &BoundaryPoint::N)
      .def_readwrite("g", &BoundaryPoint::g)
      .def_readwrite("V0", &BoundaryPoint::V0)
      .def_readwrite("error", &BoundaryPoint::error)
      .def_readwrite("method", &BoundaryPoint::method)
      .def("__repr__", [](const BoundaryPoint& p) {
        std::ostringstream os;
        os << "BoundaryPoint(N=" << p.N << ", g=" << p.g << ", V0=" << p.V0
           << ", error=" << p.error << ", method=" << to_string(p.method)
           << ")";
        return os.str();
      });

  // ---- single-particle problem ---------------------------------------------
  py::enum_<Parity>(m, "Parity")
      .value("Even", Parity::Even)
      .value("Odd", Parity::Odd);

  py::class_<SingleParticleState>(m, "SingleParticleState")
      .def_readonly("k", &SingleParticleState::k)
      .def_readonly("kappa", &SingleParticleState::kappa)
      .def_readonly("bound", &SingleParticleState::bound)
      .def_readonly("parity", &SingleParticleState::parity)
      .def_readonly("E", &SingleParticleState::E)
      .def_readonly("index", &SingleParticleState::index)
      .def_readonly("in_box", &SingleParticleState::in_box);

  m.def("solve_bound_states", &solve_bound_states, py::arg("well"),
        py::arg("max_count") = 64);
  m.def("solve_box_states", &solve_box_states, py::arg("well"),
        py::arg("count"));
  m.def("evaluate_wavefunction", &evaluate_wavefunction, py::arg("state"),
        py::arg("x"));
  m.def("quartic_overlap", &quartic_overlap, py::arg("a"), py::arg("b"),
        py::arg("c"), py::arg("d"));

  // ---- Tonks-Girardeau (fermionization) limit -------------------------------
  py::class_<TonksLevel>(m, "TonksLevel")
      .def_readonly("N", &TonksLevel::N)
      .def_readonly("occupied", &TonksLevel::occupied)
      .def_readonly("energy", &TonksLevel::energy)
      .def_readonly("bound", &TonksLevel::bound);

  m.def("tonks_ground_energy", &tonks_ground_energy, py::arg("well"),
        py::arg("N"));
  m.def("tonks_threshold", &tonks_threshold, py::arg("N"), py::arg("L"));
  m.def("tonks_bound_spectrum", &tonks_bound_spectrum, py::arg("well"),
        py::arg("N"), py::arg("count") = 8);
  m.def("tonks_merge_depth", &tonks_merge_depth, py::arg("N"), py::arg("L"),
        py::arg("tol") = 1e-8);
  m.def("final_stage_gap_tonks", &final_stage_gap_tonks, py::arg("N"),
        py::arg("L"));
  m.def("final_stage_gap_tonks_exact", &final_stage_gap_tonks_exact,
        py::arg("N"), py::arg("L"));
  m.def("max_rate_tonks", &max_rate_tonks, py::arg("N"), py::arg("L"));
  m.def("tonks_interval", &tonks_interval, py::arg("N"), py::arg("L"));

  // ---- variational / coupled-orbital mean field -----------------------------
  py::class_<VariationalResult>(m, "VariationalResult")
      .def_readonly("kappa1", &VariationalResult::kappa1)
      .def_readonly("kappa2", &VariationalResult::kappa2)
      .def_readonly("energy", &VariationalResult::energy)
      .def_readonly("single_orbital_energy",
                    &VariationalResult::single_orbital_energy)
      .def_readonly("converged", &VariationalResult::converged);

  py::class_<OrbitalPair>(m, "OrbitalPair")
      .def_readonly("grid", &OrbitalPair::grid)
      .def_readonly("phi1", &OrbitalPair::phi1)
      .def_readonly("phi2", &OrbitalPair::phi2)
      .def_readonly("mu1", &OrbitalPair::mu1)
      .def_readonly("mu2", &OrbitalPair::mu2)
      .def_readonly("residual", &OrbitalPair::residual)
      .def_readonly("iterations", &OrbitalPair::iterations);

  m.def("two_orbital_energy", &two_orbital_energy, py::arg("kappa1"),
        py::arg("kappa2"), py::arg("N"), py::arg("g"), py::arg("well"));
  m.def("single_orbital_energy", &single_orbital_energy, py::arg("kappa"),
        py::arg("N"), py::arg("g"), py::arg("well"));
  m.def("minimize_two_orbital", &minimize_two_orbital, py::arg("N"),
        py::arg("g"), py::arg("well"));
  m.def("solve_coupled_orbitals", &solve_coupled_orbitals, py::arg("N"),
        py::arg("g"), py::arg("well"), py::arg("grid_n") = 600,
        py::arg("tol") = 1e-8);
  m.def("tf_threshold", &tf_threshold, py::arg("N"), py::arg("g"),
        py::arg("L"));
  m.def("gp_single_orbital_threshold", &gp_single_orbital_threshold,
        py::arg("N"), py::arg("g"), py::arg("L"));
  m.def("final_stage_gap_meanfield", &final_stage_gap_meanfield, py::arg("N"),
        py::arg("g"));
  m.def("meanfield_interval", &meanfield_interval, py::arg("g"), py::arg("L"));
  m.def("max_rate_meanfield", &max_rate_meanfield, py::arg("N"), py::arg("g"),
        py::arg("L"));

  // ---- exact diagonalization ------------------------------------------------
  py::class_<FockBasis>(m, "FockBasis")
      .def_readonly("N", &FockBasis::N)
      .def_readonly("M", &FockBasis::M)
      .def("__len__", [](const FockBasis& b) { return b.size(); });

  py::class_<ManyBodyHamiltonian>(m, "ManyBodyHamiltonian")
      .def_readonly("dim", &ManyBodyHamiltonian::dim);

  py::class_<ManyBodySpectrum>(m, "ManyBodySpectrum")
      .def_readonly("eigenvalues", &ManyBodySpectrum::eigenvalues)
      .def_readonly("residuals", &ManyBodySpectrum::residuals)
      .def_readonly("localization", &ManyBodySpectrum::localization)
      .def_property_readonly("eigenvectors",
                             [](const ManyBodySpectrum& s) {
                               return s.eigenvectors;
                             })
      .def_property_readonly("bound_flags",
                             [](const ManyBodySpectrum& s) {
                               std::vector<bool> f(s.bound_flags.begin(),
                                                   s.bound_flags.end());
                               return f;
                             })
      .def_property_readonly("ambiguous_flags", [](const ManyBodySpectrum& s) {
        std::vector<bool> f(s.ambiguous_flags.begin(),
                            s.ambiguous_flags.end());
        return f;
      });

  py::class_<BoundRule>(m, "BoundRule")
      .def(py::init<>())
      .def_readwrite("theta", &BoundRule::theta)
      .def_readwrite("box_factor", &BoundRule::box_factor)
      .def_readwrite("e_tol", &BoundRule::e_tol)
      .def_readwrite("w_tol", &BoundRule::w_tol);

  py::class_<DiagThreshold>(m, "DiagThreshold")
      .def_readonly("N", &DiagThreshold::N)
      .def_readonly("g", &DiagThreshold::g)
      .def_readonly("V0", &DiagThreshold::V0)
      .def_readonly("error", &DiagThreshold::error)
      .def_readonly("M", &DiagThreshold::M)
      .def_readonly("M2", &DiagThreshold::M2)
      .def_readonly("V0_M", &DiagThreshold::V0_M)
      .def_readonly("V0_M2", &DiagThreshold::V0_M2)
      .def_readonly("V0_loose", &DiagThreshold::V0_loose);

  py::class_<ThresholdScanOptions>(m, "ThresholdScanOptions")
      .def(py::init<>())
      .def_readwrite("M", &ThresholdScanOptions::M)
      .def_readwrite("xtol", &ThresholdScanOptions::xtol)
      .def_readwrite("geometry", &ThresholdScanOptions::geometry)
      .def_readwrite("rule", &ThresholdScanOptions::rule);

  m.def("build_basis", &build_basis, py::arg("N"), py::arg("M"),
        py::arg("cap") = std::size_t(200000));
  m.def(
      "build_hamiltonian",
      [](const FockBasis& basis, const std::vector<SingleParticleState>& modes,
         double g) { return build_hamiltonian(basis, modes, g); },
      py::arg("basis"), py::arg("modes"), py::arg("g"));
  m.def("diagonalize", &diagonalize, py::arg("H"), py::arg("k"));
  m.def("classify_bound", &classify_bound, py::arg("spectrum"),
        py::arg("well"), py::arg("rule") = BoundRule{});
  m.def("threshold_scan_diag", &threshold_scan_diag, py::arg("N"),
        py::arg("g"), py::arg("v0_lo"), py::arg("v0_hi"),
        py::arg("options") = ThresholdScanOptions{});

  // ---- diffusion Monte Carlo -------------------------------------------------
  py::class_<TrialParams>(m, "TrialParams")
      .def(py::init<>())
      .def_readwrite("envelope_decay", &TrialParams::envelope_decay)
      .def_readwrite("jastrow_cutoff", &TrialParams::jastrow_cutoff);

  py::class_<TrialWavefunction>(m, "TrialWavefunction")
      .def_readonly("N", &TrialWavefunction::N)
      .def_readonly("g", &TrialWavefunction::g)
      .def_readonly("alpha", &TrialWavefunction::alpha)
      .def_readonly("b", &TrialWavefunction::b)
      .def_readonly("kj", &TrialWavefunction::kj)
      .def_readonly("R", &TrialWavefunction::R);

  py::class_<TrialEval>(m, "TrialEval")
      .def_readonly("log_psi", &TrialEval::log_psi)
      .def_readonly("drift", &TrialEval::drift)
      .def_readonly("e_local", &TrialEval::e_local);

  m.def("make_trial", &make_trial, py::arg("N"), py::arg("g"), py::arg("well"),
        py::arg("params") = TrialParams{});
  m.def("evaluate_trial", &evaluate_trial, py::arg("trial"),
        py::arg("positions"));

  py::class_<DmcConfig>(m, "DmcConfig")
      .def(py::init<>())
      .def_readwrite("walkers", &DmcConfig::walkers)
      .def_readwrite("time_step", &DmcConfig::time_step)
      .def_readwrite("blocks", &DmcConfig::blocks)
      .def_readwrite("steps_per_block", &DmcConfig::steps_per_block)
      .def_readwrite("seed", &DmcConfig::seed)
      .def_readwrite("trial_params", &DmcConfig::trial_params);

  py::class_<DmcResult>(m, "DmcResult")
      .def_readonly("energy", &DmcResult::energy)
      .def_readonly("std_error", &DmcResult::std_error)
      .def_readonly("acceptance", &DmcResult::acceptance)
      .def_readonly("population_history", &DmcResult::population_history)
      .def_readonly("block_energies", &DmcResult::block_energies)
      .def_readonly("timestep_bias_estimate",
                    &DmcResult::timestep_bias_estimate)
      .def_readonly("equilibration_blocks", &DmcResult::equilibration_blocks)
      .def_readonly("walk_hash", &DmcResult::walk_hash)
      .def("json", [](const DmcResult& r) { return dmc_result_json(r); });

  py::class_<DmcThresholdOptions>(m, "DmcThresholdOptions")
      .def(py::init<>())
      .def_readwrite("geometry", &DmcThresholdOptions::geometry)
      .def_readwrite("v0_start", &DmcThresholdOptions::v0_start)
      .def_readwrite("v0_step", &DmcThresholdOptions::v0_step)
      .def_readwrite("v0_min", &DmcThresholdOptions::v0_min)
      .def_readwrite("tail_points", &DmcThresholdOptions::tail_points)
      .def_readwrite("config", &DmcThresholdOptions::config);

  m.def("run_dmc", &run_dmc, py::arg("N"), py::arg("g"), py::arg("well"),
        py::arg("config") = DmcConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("unbinding_threshold_dmc", &unbinding_threshold_dmc, py::arg("N"),
        py::arg("g"), py::arg("options") = DmcThresholdOptions{},
        py::call_guard<py::gil_scoped_release>());
}
