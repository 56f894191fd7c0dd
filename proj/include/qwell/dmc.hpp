#pragma once
// Diffusion Monte Carlo for N contact-interacting bosons in the boxed well.
//
// The walk is importance-sampled by a positive trial state
//     Psi_T = prod_i f1(x_i) * prod_{i<j} f2(x_i - x_j),
// with f1 a two-piece envelope (cosine core, sinh tail that vanishes at the
// hard walls) and f2 the truncated two-body scattering solution whose cusp
// carries the contact interaction: the relative-coordinate derivative jump at
// contact equals g times the value there (reduced mass 1/2), so the walkers
// never have to sample the delta itself. Branching uses integerized weights
// with a gentle trial-energy feedback holding the population near its target.
#include <cstdint>
#include <string>
#include <vector>

#include "qwell/model.hpp"

namespace qwell {

struct TrialParams {
  // envelope decay alpha of the sinh tail; <= 0 picks 1.1x the noninteracting
  // ground-state decay (deliberately detuned so the projector, not the trial,
  // fixes the energy and the estimator keeps a nonzero variance at g = 0)
  double envelope_decay = 0.0;
  // Jastrow range R: f2 bends below this separation and is exactly 1 beyond;
  // <= 0 picks L/2
  double jastrow_cutoff = 0.0;
};

// frozen, ready-to-evaluate trial state; build once per (N, g, well)
struct TrialWavefunction {
  int N = 0;
  double g = 0.0;
  WellSpec well;
  double alpha = 0.0;     // envelope tail decay
  double b = 0.0;         // envelope core wavenumber, b tan(bL/2) = a coth(aW)
  double edge_amp = 0.0;  // cos(bL/2)/sinh(alpha W), continuity at |x| = L/2
  double kj = 0.0;        // Jastrow wavenumber, kj tan(kj R) = g/2 (0 at g = 0)
  double R = 0.0;         // Jastrow cutoff
  double el_in = 0.0;     // envelope local energy inside the well: b^2/2 - V0
  double el_out = 0.0;    // and outside: -alpha^2/2
};

TrialWavefunction make_trial(int N, double g, const WellSpec& well,
                             const TrialParams& params = {});

struct TrialEval {
  double log_psi = 0.0;
  std::vector<double> drift;  // d log Psi_T / d x_i
  double e_local = 0.0;       // -1/2 (Lap Psi)/Psi + sum V(x_i), finite everywhere
};

// Positions must lie strictly inside the box (|x| < D/2); anything else is a
// domain violation and throws. Psi_T > 0 by construction, so no nodes.
TrialEval evaluate_trial(const TrialWavefunction& trial,
                         const std::vector<double>& x);

struct DmcConfig {
  int walkers = 1000;         // target population (>= 100)
  double time_step = 1e-3;    // imaginary-time step (> 0)
  int blocks = 50;            // measured blocks (>= 10)
  int steps_per_block = 2000;
  std::uint64_t seed = 1;     // master seed; per-walker streams derive from it
  TrialParams trial_params{};
};

struct DmcResult {
  double energy = 0.0;     // mixed-estimator ground-state energy
  double std_error = 0.0;  // blocked standard error over the measured blocks
  double acceptance = 0.0;  // mean Metropolis acceptance of the drifted moves
  std::vector<double> population_history;  // per-block mean population
  std::vector<double> block_energies;      // measured block means
  // E(2 dt) - E(dt) from an auxiliary half-resolution walk: the linear-model
  // estimate of the time-step bias remaining at dt
  double timestep_bias_estimate = 0.0;
  int equilibration_blocks = 0;       // extra blocks run and discarded up front
  std::uint64_t walk_hash = 0;        // digest of the full block/population stream
  struct Meta {
    int N = 0;
    double g = 0.0;
    WellSpec well;
    DmcConfig config;
  } meta;
};

// Importance-sampled branching walk; reproducible bit-for-bit for a given
// config and seed at any worker count. Throws PopulationError (collapse or
// explosion outside [0.5, 2]x target) and std::invalid_argument on a bad
// config. The auxiliary 2*dt walk for the bias estimate roughly halves its
// step count, so it adds ~50% to the runtime.
DmcResult run_dmc(int N, double g, const WellSpec& well, const DmcConfig& config);

// JSON record of one run: config, energy, stderr, acceptance, bias estimate,
// and the walk digest (population history enters only through the hash)
std::string dmc_result_json(const DmcResult& r);

struct DmcThresholdOptions {
  WellSpec geometry{};    // L and D of the scan; the V0 field is ignored
  double v0_start = 0.0;  // <= 0: 1.5 * min(Tonks, Thomas-Fermi threshold) + 1
  double v0_step = 0.0;   // <= 0: max(0.25, v0_start / 10)
  double v0_min = 0.05;   // grid floor, keeps V0 > 0
  int tail_points = 4;    // points entering the linear tail fit
  // per-point sampling; these runs skip the 2*dt auxiliary walk since the
  // time-step bias is far below the threshold scan's resolution
  DmcConfig config{.walkers = 500,
                   .time_step = 2e-3,
                   .blocks = 12,
                   .steps_per_block = 1500,
                   .seed = 7};
};

// Walks Delta E(V0) = E_N - E_{N-1} down a descending depth grid while the
// N-th particle stays bound (Delta E < 0), then extrapolates the
// near-threshold tail to Delta E = 0 with a linear fit; the quadratic-fit
// difference and the propagated statistical noise form the error bar.
// Throws BracketError("NO_BRACKET...") when no grid point has Delta E < 0.
BoundaryPoint unbinding_threshold_dmc(int N, double g,
                                      const DmcThresholdOptions& opts = {});

}  // namespace qwell
