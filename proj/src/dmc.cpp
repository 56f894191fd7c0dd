#include "qwell/dmc.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "qwell/errors.hpp"
#include "qwell/meanfield.hpp"
#include "qwell/numerics.hpp"
#include "qwell/single_particle.hpp"
#include "qwell/tonks.hpp"

namespace qwell {

namespace {

// ---- counter-derived RNG ----------------------------------------------------
// Every walker at every step opens a fresh splitmix64 stream keyed by
// (master seed, walker id, global step), so the walk is reproducible
// bit-for-bit no matter how the walkers are distributed over threads.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct CounterRng {
  std::uint64_t s;
  CounterRng(std::uint64_t seed, std::uint64_t id, std::uint64_t step)
      : s(mix64(seed ^ mix64(id) ^ (step * 0xD6E8FEB86659FD93ull))) {}
  std::uint64_t next() {
    s += 0x9E3779B97F4A7C15ull;
    return mix64(s);
  }
  double uniform() {  // in (0, 1]
    return double((next() >> 11) + 1) * 0x1.0p-53;
  }
  double normal() {
    double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }
};

inline double coth(double z) {
  // safe for large arguments; callers keep z > 0
  if (z > 350.0) return 1.0;
  return 1.0 + 2.0 / std::expm1(2.0 * z);
}

// rising function b tan(b L/2) on (0, pi/L), used by the envelope matching
double core_match(double b, double L) { return b * std::tan(0.5 * b * L); }

}  // namespace

// ---- trial state -------------------------------------------------------------

TrialWavefunction make_trial(int N, double g, const WellSpec& well,
                             const TrialParams& params) {
  if (N < 1) throw std::invalid_argument("make_trial: need N >= 1");
  if (g < 0) throw std::invalid_argument("make_trial: repulsive coupling only");
  well.validate();

  TrialWavefunction t;
  t.N = N;
  t.g = g;
  t.well = well;

  const double W = 0.5 * (well.D - well.L);  // tail length from well edge to wall

  double alpha = params.envelope_decay;
  if (alpha <= 0.0) {
    // 1.1x the noninteracting decay: close enough for good sampling, detuned
    // enough that the local energy genuinely fluctuates at g = 0
    auto ground = solve_box_states(well, 1);
    alpha = ground[0].E < 0.0 ? 1.1 * std::sqrt(-2.0 * ground[0].E) : 1.0 / W;
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("make_trial: envelope decay must be positive");
  t.alpha = alpha;

  // continuity of the log-derivative at the well edge fixes the core
  // wavenumber: b tan(bL/2) = alpha coth(alpha W), unique root in (0, pi/L)
  const double rhs = alpha * coth(alpha * W);
  double lo = 1e-12, hi = 3.141592653589793 / well.L * (1.0 - 1e-12);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (core_match(mid, well.L) < rhs ? lo : hi) = mid;
  }
  t.b = 0.5 * (lo + hi);
  t.edge_amp = std::cos(0.5 * t.b * well.L) / std::sinh(alpha * W);
  t.el_in = 0.5 * t.b * t.b - well.V0;
  t.el_out = -0.5 * alpha * alpha;

  double R = params.jastrow_cutoff;
  if (R <= 0.0) R = 0.5 * well.L;
  if (!(R > 0.0) || R > 0.25 * well.D)
    throw std::invalid_argument("make_trial: Jastrow cutoff outside (0, D/4]");
  t.R = R;

  if (g > 0.0) {
    // cusp condition k tan(kR) = g/2, unique root in (0, pi/(2R))
    double klo = 1e-12, khi = 0.5 * 3.141592653589793 / R * (1.0 - 1e-12);
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (klo + khi);
      (mid * std::tan(mid * R) < 0.5 * g ? klo : khi) = mid;
    }
    t.kj = 0.5 * (klo + khi);
  }
  return t;
}

namespace {

// envelope value pieces; s = |x|
inline double env_dlog(const TrialWavefunction& t, double x) {
  double s = std::abs(x);
  if (s <= 0.5 * t.well.L) return -t.b * std::tan(t.b * x);
  double u = 0.5 * t.well.D - s;
  return -(x > 0 ? 1.0 : -1.0) * t.alpha * coth(t.alpha * u);
}

inline double env_d2log(const TrialWavefunction& t, double x) {
  double s = std::abs(x);
  if (s <= 0.5 * t.well.L) {
    double c = std::cos(t.b * x);
    return -t.b * t.b / (c * c);
  }
  double sh = std::sinh(t.alpha * (0.5 * t.well.D - s));
  return -t.alpha * t.alpha / (sh * sh);
}

inline double env_log(const TrialWavefunction& t, double x) {
  double s = std::abs(x);
  if (s <= 0.5 * t.well.L) return std::log(std::cos(t.b * x));
  return std::log(t.edge_amp * std::sinh(t.alpha * (0.5 * t.well.D - s)));
}

// allocation-free evaluation core shared by the public wrapper and the walk;
// positions must already be strictly inside the box
void eval_core(const TrialWavefunction& t, const double* x, double* drift,
               double* log_psi, double* e_local) {
  double logpsi = 0.0, lap = 0.0, pot = 0.0;
  for (int i = 0; i < t.N; ++i) {
    logpsi += env_log(t, x[i]);
    drift[i] = env_dlog(t, x[i]);
    lap += env_d2log(t, x[i]);
    pot += std::abs(x[i]) < 0.5 * t.well.L ? -t.well.V0 : 0.0;
  }
  if (t.kj > 0.0) {
    for (int i = 0; i < t.N; ++i)
      for (int j = i + 1; j < t.N; ++j) {
        double r = x[i] - x[j], s = std::abs(r);
        if (s >= t.R) continue;
        double arg = t.kj * (s - t.R);
        double c = std::cos(arg);
        logpsi += std::log(c);
        double dl = -t.kj * std::tan(arg) * (r >= 0 ? 1.0 : -1.0);
        drift[i] += dl;
        drift[j] -= dl;
        lap += -2.0 * t.kj * t.kj / (c * c);  // both coordinates
      }
  }
  double drift2 = 0.0;
  for (int i = 0; i < t.N; ++i) drift2 += drift[i] * drift[i];
  *log_psi = logpsi;
  *e_local = pot - 0.5 * (lap + drift2);
}

}  // namespace

TrialEval evaluate_trial(const TrialWavefunction& t, const std::vector<double>& x) {
  if (int(x.size()) != t.N)
    throw std::invalid_argument("evaluate_trial: expected " + std::to_string(t.N) +
                                " positions");
  const double half_box = 0.5 * t.well.D;
  for (double xi : x)
    if (!(std::abs(xi) < half_box))
      throw std::invalid_argument("evaluate_trial: position outside the box");

  TrialEval out;
  out.drift.assign(x.size(), 0.0);
  eval_core(t, x.data(), out.drift.data(), &out.log_psi, &out.e_local);
  return out;
}

// ---- the walk ----------------------------------------------------------------

namespace {

// flat walker ensemble; all arrays are pop-indexed, positions pop x N
struct Ensemble {
  int N = 0;
  std::vector<double> x, drift;  // pop*N
  std::vector<double> logpsi, elocal;
  std::vector<std::uint64_t> id;
  std::size_t pop() const { return logpsi.size(); }
  void resize(std::size_t p) {
    x.resize(p * N);
    drift.resize(p * N);
    logpsi.resize(p);
    elocal.resize(p);
    id.resize(p);
  }
};

// per-walker step outputs, written by the workers, consumed serially
struct StepScratch {
  std::vector<double> x, drift;  // proposed/final, pop*N
  std::vector<double> logpsi, elocal, weight;
  std::vector<int> copies;
  std::vector<char> accepted;
  void resize(std::size_t p, int N) {
    x.resize(p * N);
    drift.resize(p * N);
    logpsi.resize(p);
    elocal.resize(p);
    weight.resize(p);
    copies.resize(p);
    accepted.resize(p);
  }
};

struct WalkStats {
  double energy = 0.0, std_error = 0.0, acceptance = 0.0;
  std::vector<double> block_energies;        // measured blocks only
  std::vector<double> population_history;    // every block, warmup first
  std::vector<double> all_block_energies;    // every block, for the digest
  int warmup_blocks = 0;
  std::uint64_t digest = 0;
};

// one importance-sampled branching walk; deterministic for (trial, cfg, seed)
WalkStats run_walk(const TrialWavefunction& trial, int target, double h,
                   int blocks, int steps_per_block, std::uint64_t seed) {
  const int N = trial.N;
  const double half_box = 0.5 * trial.well.D;
  const double sqrt_h = std::sqrt(h);
  const int warmup = std::max(2, blocks / 5);
  const int total_blocks = blocks + warmup;
  const double feedback = 1.0 / (100.0 * h);

  Ensemble cur;
  cur.N = N;
  cur.resize(std::size_t(target));
  for (int w = 0; w < target; ++w) {
    cur.id[w] = std::uint64_t(w) + 1;
    CounterRng rng(seed, cur.id[w], 0);
    double* xw = &cur.x[std::size_t(w) * N];
    for (int i = 0; i < N; ++i) xw[i] = (rng.uniform() - 0.5) * trial.well.L;
    eval_core(trial, xw, &cur.drift[std::size_t(w) * N], &cur.logpsi[w],
              &cur.elocal[w]);
  }
  double e_trial = 0.0;
  for (int w = 0; w < target; ++w) e_trial += cur.elocal[w];
  e_trial /= target;

  StepScratch scratch;
  WalkStats stats;
  stats.warmup_blocks = warmup;

  // accumulators owned by the serial phase
  double block_e = 0.0, block_pop = 0.0, block_acc = 0.0;
  int steps_done = 0, blocks_done = 0;
  std::atomic<bool> stop{false};
  std::string abort_msg;

  const int nthread =
      std::min(num::worker_count(), std::max(1, target / 128));
  std::vector<std::pair<std::size_t, std::size_t>> ranges(
      static_cast<std::size_t>(nthread));
  auto rechunk = [&]() {
    std::size_t p = cur.pop(), base = p / nthread, rem = p % nthread, at = 0;
    for (int r = 0; r < nthread; ++r) {
      std::size_t len = base + (std::size_t(r) < rem ? 1 : 0);
      ranges[r] = {at, at + len};
      at += len;
    }
    scratch.resize(p, N);
  };
  rechunk();

  // advances one walker for the current step; pure function of shared state
  auto advance = [&](std::size_t w, std::uint64_t step) {
    CounterRng rng(seed, cur.id[w], step);
    const double* xw = &cur.x[w * N];
    const double* fw = &cur.drift[w * N];
    double y[8];  // N is tiny (particle counts), cap guarded in run_dmc
    double lnG_fwd = 0.0;
    bool inside = true;
    for (int i = 0; i < N; ++i) {
      double z = rng.normal();
      y[i] = xw[i] + h * fw[i] + sqrt_h * z;
      lnG_fwd -= 0.5 * z * z;
      if (!(std::abs(y[i]) < half_box)) inside = false;
    }
    double u_acc = rng.uniform();
    double u_branch = rng.uniform();

    bool acc = false;
    double lp = cur.logpsi[w], el = cur.elocal[w];
    double* xo = &scratch.x[w * N];
    double* fo = &scratch.drift[w * N];
    if (inside) {
      double fy[8], lp_y, el_y;
      eval_core(trial, y, fy, &lp_y, &el_y);
      double lnG_rev = 0.0;
      for (int i = 0; i < N; ++i) {
        double d = xw[i] - y[i] - h * fy[i];
        lnG_rev -= d * d / (2.0 * h);
      }
      double lnA = 2.0 * (lp_y - lp) + lnG_rev - lnG_fwd;
      if (std::log(u_acc) < lnA) {
        acc = true;
        lp = lp_y;
        std::copy(y, y + N, xo);
        std::copy(fy, fy + N, fo);
        scratch.weight[w] = std::exp(-h * (0.5 * (el + el_y) - e_trial));
        el = el_y;
      }
    }
    if (!acc) {
      std::copy(xw, xw + N, xo);
      std::copy(fw, fw + N, fo);
      scratch.weight[w] = std::exp(-h * (el - e_trial));
    }
    scratch.logpsi[w] = lp;
    scratch.elocal[w] = el;
    scratch.accepted[w] = acc ? 1 : 0;
    scratch.copies[w] = std::min(int(scratch.weight[w] + u_branch), 5);
  };

  Ensemble next;
  next.N = N;

  // serial phase: estimator, branching, population control, bookkeeping
  auto settle = [&](std::uint64_t step) {
    double wsum = 0.0, wesum = 0.0, asum = 0.0;
    std::size_t p = cur.pop(), newpop = 0;
    for (std::size_t w = 0; w < p; ++w) {
      wsum += scratch.weight[w];
      wesum += scratch.weight[w] * scratch.elocal[w];
      asum += scratch.accepted[w];
      newpop += std::size_t(scratch.copies[w]);
    }
    if (newpop < std::size_t(target) / 2 || newpop == 0) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "POPULATION_COLLAPSE: step %llu, population %zu < 0.5 x %d",
                    (unsigned long long)step, newpop, target);
      abort_msg = buf;
      stop.store(true, std::memory_order_relaxed);
      return;
    }
    if (newpop > std::size_t(target) * 2) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "POPULATION_EXPLOSION: step %llu, population %zu > 2 x %d",
                    (unsigned long long)step, newpop, target);
      abort_msg = buf;
      stop.store(true, std::memory_order_relaxed);
      return;
    }

    next.resize(newpop);
    std::size_t at = 0;
    for (std::size_t w = 0; w < p; ++w)
      for (int c = 0; c < scratch.copies[w]; ++c, ++at) {
        std::copy(&scratch.x[w * N], &scratch.x[w * N] + N, &next.x[at * N]);
        std::copy(&scratch.drift[w * N], &scratch.drift[w * N] + N,
                  &next.drift[at * N]);
        next.logpsi[at] = scratch.logpsi[w];
        next.elocal[at] = scratch.elocal[w];
        next.id[at] = c == 0 ? cur.id[w]
                             : mix64(cur.id[w] ^ (step * 0xC2B2AE3D27D4EB4Full) ^
                                     std::uint64_t(c));
      }
    std::swap(cur, next);

    double e_step = wesum / wsum;  // weighted pre-branch mixed estimator
    e_trial = e_step - feedback * std::log(double(cur.pop()) / target);

    block_e += e_step;
    block_pop += double(cur.pop());
    block_acc += asum / double(p);
    if (++steps_done == steps_per_block) {
      double be = block_e / steps_done, bp = block_pop / steps_done,
             ba = block_acc / steps_done;
      stats.all_block_energies.push_back(be);
      stats.population_history.push_back(bp);
      if (blocks_done >= warmup) {
        stats.block_energies.push_back(be);
        stats.acceptance += ba;
      }
      block_e = block_pop = block_acc = 0.0;
      steps_done = 0;
      if (++blocks_done == total_blocks) stop.store(true, std::memory_order_relaxed);
      else rechunk();
    } else {
      rechunk();
    }
  };

  const std::uint64_t max_steps =
      std::uint64_t(total_blocks) * std::uint64_t(steps_per_block);
  if (nthread == 1) {
    for (std::uint64_t step = 1; step <= max_steps && !stop.load(); ++step) {
      auto [b0, b1] = ranges[0];
      for (std::size_t w = b0; w < b1; ++w) advance(w, step);
      settle(step);
    }
  } else {
    std::uint64_t step_now = 1;
    std::barrier sync(nthread, [&]() noexcept {
      settle(step_now);
      ++step_now;
    });
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(nthread));
    for (int r = 0; r < nthread; ++r)
      pool.emplace_back([&, r]() {
        while (!stop.load(std::memory_order_relaxed)) {
          auto [b0, b1] = ranges[std::size_t(r)];
          std::uint64_t step = step_now;
          for (std::size_t w = b0; w < b1; ++w) advance(w, step);
          sync.arrive_and_wait();
        }
      });
    for (auto& th : pool) th.join();
  }
  if (!abort_msg.empty()) throw PopulationError(abort_msg);

  const int B = int(stats.block_energies.size());
  double mean = 0.0;
  for (double e : stats.block_energies) mean += e;
  mean /= B;
  double var = 0.0;
  for (double e : stats.block_energies) var += (e - mean) * (e - mean);
  stats.energy = mean;
  stats.std_error = std::sqrt(var / (double(B) * (B - 1)));
  stats.acceptance /= B;

  std::uint64_t hsh = num::fnv1a(stats.all_block_energies.data(),
                                 stats.all_block_energies.size() * sizeof(double));
  hsh = num::fnv1a(stats.population_history.data(),
                   stats.population_history.size() * sizeof(double), hsh);
  stats.digest = num::fnv1a(&e_trial, sizeof e_trial, hsh);
  return stats;
}

}  // namespace

DmcResult run_dmc(int N, double g, const WellSpec& well, const DmcConfig& config) {
  if (N < 1 || N > 8)
    throw std::invalid_argument("run_dmc: particle count outside [1, 8]");
  if (config.walkers < 100)
    throw std::invalid_argument("run_dmc: need at least 100 walkers");
  if (!(config.time_step > 0.0))
    throw std::invalid_argument("run_dmc: time step must be positive");
  if (config.blocks < 10)
    throw std::invalid_argument("run_dmc: need at least 10 blocks");
  if (config.steps_per_block < 1)
    throw std::invalid_argument("run_dmc: need at least 1 step per block");

  auto trial = make_trial(N, g, well, config.trial_params);
  auto main_walk = run_walk(trial, config.walkers, config.time_step,
                            config.blocks, config.steps_per_block, config.seed);
  // half-resolution companion: twice the step, half the steps, same span of
  // imaginary time; the energy difference estimates the linear-in-dt bias
  auto coarse = run_walk(trial, config.walkers, 2.0 * config.time_step,
                         config.blocks, std::max(1, config.steps_per_block / 2),
                         mix64(config.seed ^ 0xB1A5ED5EEDull));

  DmcResult r;
  r.energy = main_walk.energy;
  r.std_error = main_walk.std_error;
  r.acceptance = main_walk.acceptance;
  r.population_history = std::move(main_walk.population_history);
  r.block_energies = std::move(main_walk.block_energies);
  r.timestep_bias_estimate = coarse.energy - main_walk.energy;
  r.equilibration_blocks = main_walk.warmup_blocks;
  r.walk_hash = num::fnv1a(&coarse.digest, sizeof coarse.digest, main_walk.digest);
  r.meta = {N, g, well, config};
  return r;
}

std::string dmc_result_json(const DmcResult& r) {
  std::ostringstream os;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "{\"N\":%d,\"g\":%.12g,\"well\":{\"V0\":%.12g,\"L\":%.12g,"
                "\"D\":%.12g},\"config\":{\"walkers\":%d,\"time_step\":%.12g,"
                "\"blocks\":%d,\"steps_per_block\":%d,\"seed\":%llu},",
                r.meta.N, r.meta.g, r.meta.well.V0, r.meta.well.L, r.meta.well.D,
                r.meta.config.walkers, r.meta.config.time_step,
                r.meta.config.blocks, r.meta.config.steps_per_block,
                (unsigned long long)r.meta.config.seed);
  os << buf;
  std::snprintf(buf, sizeof buf,
                "\"energy\":%.12g,\"stderr\":%.12g,\"acceptance\":%.6f,"
                "\"timestep_bias_estimate\":%.12g,\"equilibration_blocks\":%d,"
                "\"walk_hash\":\"%016llx\"}",
                r.energy, r.std_error, r.acceptance, r.timestep_bias_estimate,
                r.equilibration_blocks, (unsigned long long)r.walk_hash);
  os << buf;
  return os.str();
}

BoundaryPoint unbinding_threshold_dmc(int N, double g,
                                      const DmcThresholdOptions& opts) {
  if (N < 2 || N > 8)
    throw std::invalid_argument("unbinding_threshold_dmc: need N in [2, 8]");
  if (g < 0) throw std::invalid_argument("unbinding_threshold_dmc: g >= 0");
  WellSpec geom = opts.geometry;
  geom.validate();

  double start = opts.v0_start;
  if (start <= 0.0) {
    double guess = std::min(tonks_threshold(N, geom.L), tf_threshold(N, g, geom.L));
    start = 1.5 * guess + 1.0;
  }
  double step = opts.v0_step > 0.0 ? opts.v0_step : std::max(0.25, start / 10.0);

  struct Point {
    double v0, de, sigma;
  };
  std::vector<Point> pts;
  // the (N-1)-atom reference walk reuses the same sampling settings; seeds are
  // decorrelated per grid point and per particle count
  auto energy_at = [&](int n, double v0, int k) {
    WellSpec w = geom.with_depth(v0);
    auto trial = make_trial(n, g, w, opts.config.trial_params);
    auto cfg = opts.config;
    auto st = run_walk(trial, cfg.walkers, cfg.time_step, cfg.blocks,
                       cfg.steps_per_block,
                       mix64(cfg.seed ^ (std::uint64_t(k) * 1315423911ull) ^
                             (std::uint64_t(n) << 40)));
    return std::pair<double, double>{st.energy, st.std_error};
  };

  for (int k = 0;; ++k) {
    double v0 = start - k * step;
    if (v0 < opts.v0_min) break;
    auto [eN, sN] = energy_at(N, v0, k);
    auto [eM, sM] = energy_at(N - 1, v0, k);
    double de = eN - eM;
    pts.push_back({v0, de, std::sqrt(sN * sN + sM * sM)});
    if (de >= 0.0) break;
  }
  bool any_bound = false;
  for (auto& p : pts) any_bound |= p.de < 0.0;
  if (!any_bound)
    throw BracketError("NO_BRACKET: Delta E >= 0 over the whole depth grid",
                       pts.empty() ? start : pts.back().v0, start);

  // near-threshold tail: the last points of the descent (smallest depths)
  int K = std::min<int>(opts.tail_points, int(pts.size()));
  std::vector<Point> tail(pts.end() - K, pts.end());

  // weighted linear fit de = a + b v0, root at -a/b with propagated noise
  auto fit_linear = [](const std::vector<Point>& q, double* root, double* sig) {
    double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& p : q) {
      double wgt = 1.0 / (p.sigma * p.sigma);
      s += wgt;
      sx += wgt * p.v0;
      sy += wgt * p.de;
      sxx += wgt * p.v0 * p.v0;
      sxy += wgt * p.v0 * p.de;
    }
    double det = s * sxx - sx * sx;
    double a = (sxx * sy - sx * sxy) / det;
    double b = (s * sxy - sx * sy) / det;
    *root = -a / b;
    // covariance of (a, b) for the weighted fit
    double caa = sxx / det, cbb = s / det, cab = -sx / det;
    double var = (caa + 2.0 * (*root) * cab + (*root) * (*root) * cbb) / (b * b);
    *sig = std::sqrt(std::max(var, 0.0));
    return b;
  };
  double root = 0.0, sig = 0.0;
  double slope = fit_linear(tail, &root, &sig);
  if (!(slope < 0.0) || !std::isfinite(root))
    throw BracketError("NO_BRACKET: near-threshold tail has no downward slope",
                       tail.front().v0, tail.back().v0);

  // quadratic sensitivity: refit with one more point and a curvature term
  double root_q = root;
  int Kq = std::min<int>(K + 1, int(pts.size()));
  if (Kq >= 3) {
    std::vector<Point> tq(pts.end() - Kq, pts.end());
    double s = 0, sx = 0, sx2 = 0, sx3 = 0, sx4 = 0, sy = 0, sxy = 0, sx2y = 0;
    for (auto& p : tq) {
      double wgt = 1.0 / (p.sigma * p.sigma), v = p.v0;
      s += wgt;
      sx += wgt * v;
      sx2 += wgt * v * v;
      sx3 += wgt * v * v * v;
      sx4 += wgt * v * v * v * v;
      sy += wgt * p.de;
      sxy += wgt * v * p.de;
      sx2y += wgt * v * v * p.de;
    }
    double A[9] = {s, sx, sx2, sx, sx2, sx3, sx2, sx3, sx4};
    double rhs[3] = {sy, sxy, sx2y};
    // 3x3 Gaussian elimination
    for (int c = 0; c < 3; ++c) {
      int piv = c;
      for (int rr = c + 1; rr < 3; ++rr)
        if (std::abs(A[rr * 3 + c]) > std::abs(A[piv * 3 + c])) piv = rr;
      for (int cc = 0; cc < 3; ++cc) std::swap(A[c * 3 + cc], A[piv * 3 + cc]);
      std::swap(rhs[c], rhs[piv]);
      for (int rr = c + 1; rr < 3; ++rr) {
        double f = A[rr * 3 + c] / A[c * 3 + c];
        for (int cc = c; cc < 3; ++cc) A[rr * 3 + cc] -= f * A[c * 3 + cc];
        rhs[rr] -= f * rhs[c];
      }
    }
    double q2 = rhs[2] / A[8];
    double q1 = (rhs[1] - A[5] * q2) / A[4];
    double q0 = (rhs[0] - A[1] * q1 - A[2] * q2) / A[0];
    if (std::abs(q2) > 1e-12) {
      double disc = q1 * q1 - 4.0 * q2 * q0;
      if (disc >= 0.0) {
        double r1 = (-q1 + std::sqrt(disc)) / (2.0 * q2);
        double r2 = (-q1 - std::sqrt(disc)) / (2.0 * q2);
        root_q = std::abs(r1 - root) < std::abs(r2 - root) ? r1 : r2;
      }
    } else if (std::abs(q1) > 0.0) {
      root_q = -q0 / q1;
    }
    if (!std::isfinite(root_q) || std::abs(root_q - root) > 4.0 * step)
      root_q = root;  // degenerate curvature fit; fall back to linear
  }

  BoundaryPoint out;
  out.N = N;
  out.g = g;
  out.V0 = root;
  out.error = sig + std::abs(root_q - root);
  out.method = BoundaryMethod::Dmc;
  return out;
}

}  // namespace qwell
