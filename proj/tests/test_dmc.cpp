#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "qwell/dmc.hpp"
#include "qwell/errors.hpp"
#include "qwell/single_particle.hpp"

using namespace qwell;

namespace {

WellSpec well(double V0, double L = 1.0, double D = 10.0) {
  WellSpec w;
  w.V0 = V0;
  w.L = L;
  w.D = D;
  return w;
}

// ground-state energies of the interacting system in the V0 = 30 well,
// obtained by diagonalization in mode bases M = 20..90 and extrapolating
// the 1/M + 1/M^2 truncation tail to M -> infinity; good to ~2e-3
constexpr double kRef21 = -52.7443;   // N = 2, g = 1
constexpr double kRef205 = -53.2529;  // N = 2, g = 1/2
constexpr double kRef31 = -77.5465;   // N = 3, g = 1

double fd_local_energy(const TrialWavefunction& t, const std::vector<double>& x,
                       double eps) {
  auto ev0 = evaluate_trial(t, x);
  double lap = 0.0, pot = 0.0;
  for (double xi : x) pot += std::abs(xi) < 0.5 * t.well.L ? -t.well.V0 : 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto xp = x, xm = x;
    xp[i] += eps;
    xm[i] -= eps;
    double lp = evaluate_trial(t, xp).log_psi;
    double lm = evaluate_trial(t, xm).log_psi;
    lap += (std::exp(lp - ev0.log_psi) + std::exp(lm - ev0.log_psi) - 2.0) /
           (eps * eps);
  }
  return pot - 0.5 * lap;
}

}  // namespace

TEST_SUITE("dmc") {
  TEST_CASE("trial construction solves the matching conditions") {
    auto w = well(30.0);
    auto t = make_trial(2, 4.0, w);
    CHECK(t.alpha > 0.0);
    CHECK(t.b > 0.0);
    CHECK(t.b < 3.141592653589793 / w.L);
    // envelope log-derivative continuity at the well edge
    double W = 0.5 * (w.D - w.L);
    double lhs = t.b * std::tan(0.5 * t.b * w.L);
    double rhs = t.alpha / std::tanh(t.alpha * W);
    CHECK(std::abs(lhs - rhs) < 1e-8 * rhs);
    // pair-function cusp: k tan(k R) = g / 2
    CHECK(t.R == doctest::Approx(0.5 * w.L).epsilon(1e-14));
    CHECK(std::abs(t.kj * std::tan(t.kj * t.R) - 2.0) < 1e-8);
    CHECK(t.el_in == doctest::Approx(0.5 * t.b * t.b - w.V0).epsilon(1e-14));
    CHECK(t.el_out == doctest::Approx(-0.5 * t.alpha * t.alpha).epsilon(1e-14));

    // no interaction, no Jastrow bend
    auto t0 = make_trial(2, 0.0, w);
    CHECK(t0.kj == 0.0);

    // explicit parameters are taken as given
    TrialParams p;
    p.envelope_decay = 3.0;
    p.jastrow_cutoff = 0.8;
    auto tc = make_trial(2, 1.0, w, p);
    CHECK(tc.alpha == 3.0);
    CHECK(tc.R == 0.8);

    CHECK_THROWS_AS(make_trial(0, 1.0, w), std::invalid_argument);
    CHECK_THROWS_AS(make_trial(2, -1.0, w), std::invalid_argument);
    TrialParams bad;
    bad.jastrow_cutoff = 0.3 * w.D;  // R beyond D/4 cannot stay two-body
    CHECK_THROWS_AS(make_trial(2, 1.0, w, bad), std::invalid_argument);
  }

  TEST_CASE("free bosons: pair factor is inert and the local energy is a sum") {
    auto w = well(30.0);
    auto t = make_trial(3, 0.0, w);
    auto t1 = make_trial(1, 0.0, w);
    std::vector<double> x = {0.1, -0.3, 2.7};  // two inside, one outside
    auto ev = evaluate_trial(t, x);
    CHECK(ev.e_local ==
          doctest::Approx(2.0 * t.el_in + t.el_out).epsilon(1e-13));
    // with f2 == 1 the trial factorizes over particles exactly
    double lsum = 0.0, esum = 0.0;
    for (double xi : x) {
      auto e1 = evaluate_trial(t1, {xi});
      lsum += e1.log_psi;
      esum += e1.e_local;
    }
    CHECK(ev.log_psi == doctest::Approx(lsum).epsilon(1e-13));
    CHECK(ev.e_local == doctest::Approx(esum).epsilon(1e-13));
  }

  TEST_CASE("contact cusp: drift jump equals g and the local energy stays flat") {
    auto w = well(30.0);
    double g = 7.3;
    auto t = make_trial(2, g, w);
    double eps = 1e-4;
    auto evp = evaluate_trial(t, {0.2 + eps / 2, 0.2 - eps / 2});
    auto evm = evaluate_trial(t, {0.2 - eps / 2, 0.2 + eps / 2});
    double jump = evp.drift[0] - evm.drift[0];
    CHECK(std::abs(jump - g) < 5e-3 * g);  // O(eps) residual only
    // the delta is carried entirely by the cusp: no spike in E_L at contact
    CHECK(evp.e_local == doctest::Approx(evm.e_local).epsilon(1e-12));
    CHECK(std::isfinite(evp.e_local));
    CHECK(std::abs(evp.e_local) < 1e3);
  }

  TEST_CASE("local energy agrees with a finite-difference Laplacian") {
    auto t = make_trial(3, 2.5, well(30.0));
    std::vector<std::vector<double>> pts = {
        {0.31, -0.12, 0.44},      // all in the well
        {0.31, 0.3101, -2.2},     // pair almost at contact
        {0.9, -1.7, 3.3},         // all outside, one deep in the tail
        {0.2499, 0.2701, -0.1}};  // pair inside the Jastrow range
    for (auto& x : pts) {
      auto ev = evaluate_trial(t, x);
      double el_fd = fd_local_energy(t, x, 1e-6);
      CHECK(std::abs(ev.e_local - el_fd) < 1e-2);
    }
  }

  TEST_CASE("bosonic symmetry of the trial state") {
    auto t = make_trial(4, 2.0, well(30.0));
    std::vector<double> x = {0.1, -0.35, 1.8, 0.02};
    std::vector<double> y = {1.8, 0.02, 0.1, -0.35};  // a permutation
    auto ex = evaluate_trial(t, x);
    auto ey = evaluate_trial(t, y);
    CHECK(ex.log_psi == doctest::Approx(ey.log_psi).epsilon(1e-13));
    CHECK(ex.e_local == doctest::Approx(ey.e_local).epsilon(1e-13));
    CHECK(ex.drift[0] == doctest::Approx(ey.drift[2]).epsilon(1e-13));
    CHECK(ex.drift[1] == doctest::Approx(ey.drift[3]).epsilon(1e-13));
    CHECK(ex.drift[2] == doctest::Approx(ey.drift[0]).epsilon(1e-13));
  }

  TEST_CASE("positions outside the box are rejected") {
    auto t = make_trial(2, 1.0, well(30.0));
    CHECK_THROWS_AS(evaluate_trial(t, {0.1, 5.0}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_trial(t, {-6.0, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_trial(t, {0.1}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_trial(t, {0.1, 0.2, 0.3}), std::invalid_argument);
  }

  TEST_CASE("ground-state energies against diagonalization references") {
    auto w = well(30.0);
    DmcConfig c;
    c.walkers = 400;
    c.time_step = 1e-3;
    c.blocks = 16;
    c.steps_per_block = 600;
    c.seed = 21;

    struct Case {
      int N;
      double g, ref;
    } cases[] = {{2, 1.0, kRef21}, {2, 0.5, kRef205}, {3, 1.0, kRef31}};
    for (auto& cs : cases) {
      CAPTURE(cs.N);
      CAPTURE(cs.g);
      auto r = run_dmc(cs.N, cs.g, w, c);
      CHECK(r.std_error > 0.0);
      CHECK(std::abs(r.energy - cs.ref) < 3.0 * r.std_error);
      CHECK(r.acceptance > 0.95);
      CHECK(r.acceptance <= 1.0);
      CHECK(int(r.block_energies.size()) == c.blocks);
      CHECK(r.equilibration_blocks >= 2);
      CHECK(int(r.population_history.size()) ==
            c.blocks + r.equilibration_blocks);
      for (double p : r.population_history) {
        CHECK(p >= 0.5 * c.walkers);
        CHECK(p <= 2.0 * c.walkers);
      }
    }
  }

  TEST_CASE("free runs reproduce N times the one-body ground energy") {
    auto w = well(30.0);
    auto modes = solve_box_states(w, 1);
    DmcConfig c;
    c.walkers = 400;
    c.time_step = 1e-3;
    c.blocks = 16;
    c.steps_per_block = 600;
    c.seed = 21;
    for (int N : {2, 3}) {
      CAPTURE(N);
      auto r = run_dmc(N, 0.0, w, c);
      CHECK(std::abs(r.energy - N * modes[0].E) < 3.0 * r.std_error);
    }
  }

  TEST_CASE("the walk is reproducible bit for bit at any worker count") {
    auto w = well(30.0);
    DmcConfig c;
    c.walkers = 200;
    c.time_step = 1e-3;
    c.blocks = 10;
    c.steps_per_block = 300;
    c.seed = 17;
    auto r1 = run_dmc(2, 1.0, w, c);

    // same seed, same everything: identical stream
    auto r2 = run_dmc(2, 1.0, w, c);
    CHECK(r1.energy == r2.energy);
    CHECK(r1.std_error == r2.std_error);
    CHECK(r1.walk_hash == r2.walk_hash);
    REQUIRE(r1.block_energies.size() == r2.block_energies.size());
    for (std::size_t i = 0; i < r1.block_energies.size(); ++i)
      CHECK(r1.block_energies[i] == r2.block_energies[i]);

    // forcing a different thread layout must not change a single bit
    setenv("QWELL_WORKERS", "3", 1);
    auto r3 = run_dmc(2, 1.0, w, c);
    setenv("QWELL_WORKERS", "1", 1);
    auto r4 = run_dmc(2, 1.0, w, c);
    unsetenv("QWELL_WORKERS");
    CHECK(r3.walk_hash == r1.walk_hash);
    CHECK(r4.walk_hash == r1.walk_hash);
    CHECK(r3.energy == r1.energy);
    CHECK(r4.energy == r1.energy);

    // a different seed must explore a different stream
    c.seed = 18;
    auto r5 = run_dmc(2, 1.0, w, c);
    CHECK(r5.walk_hash != r1.walk_hash);
  }

  TEST_CASE("halving the time step is consistent with a linear bias model") {
    auto w = well(30.0);
    DmcConfig c;
    c.walkers = 500;
    c.time_step = 2e-3;
    c.blocks = 20;
    c.steps_per_block = 500;
    c.seed = 3;
    auto coarse = run_dmc(2, 1.0, w, c);
    c.time_step = 1e-3;
    c.steps_per_block = 1000;  // same total imaginary time
    auto fine = run_dmc(2, 1.0, w, c);
    // the direct E(2 dt) - E(dt) difference and the run's own companion-walk
    // estimate measure the same linear coefficient, up to sampling noise
    double direct = coarse.energy - fine.energy;
    double comb = std::sqrt(coarse.std_error * coarse.std_error +
                            fine.std_error * fine.std_error);
    CHECK(std::abs(direct - fine.timestep_bias_estimate) < 3.0 * comb);
    CHECK(std::isfinite(coarse.timestep_bias_estimate));
    CHECK(std::abs(coarse.timestep_bias_estimate) < 0.05);
  }

  TEST_CASE("blocked error bars shrink like one over root blocks") {
    auto w = well(30.0);
    const int B[4] = {10, 40, 160, 640};
    double lx[4], ly[4];
    for (int k = 0; k < 4; ++k) {
      DmcConfig c;
      c.walkers = 200;
      c.time_step = 2e-3;
      c.blocks = B[k];
      c.steps_per_block = 50;
      c.seed = 13;
      auto r = run_dmc(1, 0.0, w, c);
      lx[k] = std::log(double(B[k]));
      ly[k] = std::log(r.std_error);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < 4; ++k) {
      sx += lx[k];
      sy += ly[k];
      sxx += lx[k] * lx[k];
      sxy += lx[k] * ly[k];
    }
    double slope = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
    CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));  // -0.5 +- 0.1
  }

  TEST_CASE("runaway branching aborts with a population fault") {
    auto w = well(30.0);
    DmcConfig c;
    c.walkers = 100;
    c.blocks = 10;
    c.steps_per_block = 200;
    c.seed = 5;
    c.time_step = 0.15;  // branching outruns the feedback: death spiral
    CHECK_THROWS_WITH_AS(run_dmc(2, 1.0, w, c),
                         doctest::Contains("POPULATION_COLLAPSE"),
                         PopulationError);
    c.time_step = 0.30;  // even wilder weights blow the population up
    CHECK_THROWS_WITH_AS(run_dmc(2, 1.0, w, c),
                         doctest::Contains("POPULATION_EXPLOSION"),
                         PopulationError);
  }

  TEST_CASE("configuration validation") {
    auto w = well(30.0);
    DmcConfig c;
    c.walkers = 50;
    CHECK_THROWS_AS(run_dmc(2, 1.0, w, c), std::invalid_argument);
    c = {};
    c.time_step = 0.0;
    CHECK_THROWS_AS(run_dmc(2, 1.0, w, c), std::invalid_argument);
    c = {};
    c.blocks = 5;
    CHECK_THROWS_AS(run_dmc(2, 1.0, w, c), std::invalid_argument);
    c = {};
    c.steps_per_block = 0;
    CHECK_THROWS_AS(run_dmc(2, 1.0, w, c), std::invalid_argument);
    c = {};
    CHECK_THROWS_AS(run_dmc(0, 1.0, w, c), std::invalid_argument);
    CHECK_THROWS_AS(run_dmc(9, 1.0, w, c), std::invalid_argument);
  }

  TEST_CASE("JSON record carries the run and its identity") {
    DmcConfig c;
    c.walkers = 100;
    c.time_step = 2e-3;
    c.blocks = 10;
    c.steps_per_block = 50;
    c.seed = 42;
    auto r = run_dmc(2, 1.0, well(30.0), c);
    std::string js = dmc_result_json(r);
    CHECK(js.find("\"energy\":") != std::string::npos);
    CHECK(js.find("\"stderr\":") != std::string::npos);
    CHECK(js.find("\"acceptance\":") != std::string::npos);
    CHECK(js.find("\"walk_hash\":") != std::string::npos);
    CHECK(js.find("\"timestep_bias_estimate\":") != std::string::npos);
    CHECK(js.find("\"seed\":42") != std::string::npos);
    CHECK(js.find("\"walkers\":100") != std::string::npos);
    CHECK(js.find("\"V0\":30") != std::string::npos);
    char hashhex[32];
    std::snprintf(hashhex, sizeof hashhex, "%016llx",
                  (unsigned long long)r.walk_hash);
    CHECK(js.find(hashhex) != std::string::npos);
  }

  TEST_CASE("boundary CSV row for a sampled threshold point") {
    BoundaryPoint p;
    p.N = 2;
    p.g = 1.0;
    p.V0 = 0.75;
    p.error = 0.12;
    p.method = BoundaryMethod::Dmc;
    std::ostringstream os;
    os << boundary_csv_header() << "\n";
    append_boundary_csv(os, p);
    CHECK(os.str() == "g,N,V0,error,method\n1,2,0.75,0.12,dmc\n");
  }

  TEST_CASE("a scan that never finds binding reports the missing bracket") {
    DmcThresholdOptions o;
    o.v0_start = 0.2;  // the whole grid sits below the two-boson threshold
    o.v0_step = 0.1;
    o.v0_min = 0.09;
    o.config.walkers = 200;
    o.config.blocks = 10;
    o.config.steps_per_block = 400;
    CHECK_THROWS_WITH_AS(unbinding_threshold_dmc(2, 1.0, o),
                         doctest::Contains("NO_BRACKET"), BracketError);
    CHECK_THROWS_AS(unbinding_threshold_dmc(1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(unbinding_threshold_dmc(2, -1.0), std::invalid_argument);
  }
}
