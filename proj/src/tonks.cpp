#include "qwell/tonks.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

namespace qwell {

double tonks_ground_energy(const WellSpec& well, int N) {
  if (N < 1) throw std::invalid_argument("tonks_ground_energy: N >= 1");
  auto st = solve_bound_states(well, N);
  if ((int)st.size() < N) throw UnboundError(N);
  double e = 0.0;
  for (int i = 0; i < N; ++i) e += st[i].E;
  return e;
}

double tonks_threshold(int N, double L) {
  if (N < 1) throw std::invalid_argument("tonks_threshold: N >= 1");
  double x = M_PI * (N - 1) / L;
  return 0.5 * x * x;
}

double tonks_interval(int N, double L) {
  return M_PI * M_PI * (N - 0.5) / (L * L);
}

std::vector<TonksLevel> tonks_bound_spectrum(const WellSpec& well, int N,
                                             int max_levels) {
  if (N < 1) throw std::invalid_argument("tonks_bound_spectrum: N >= 1");
  auto st = solve_bound_states(well);
  const int nb = (int)st.size();
  std::vector<TonksLevel> out;
  if (nb < N) return out;

  // best-first enumeration of N-subsets of {1..nb} by energy sum: pop the
  // cheapest configuration, push its single-index successors
  auto energy_of = [&](const std::vector<int>& occ) {
    double e = 0.0;
    for (int j : occ) e += st[j - 1].E;
    return e;
  };
  using Item = std::pair<double, std::vector<int>>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  std::set<std::vector<int>> seen;
  std::vector<int> ground(N);
  for (int i = 0; i < N; ++i) ground[i] = i + 1;
  heap.emplace(energy_of(ground), ground);
  seen.insert(ground);

  while (!heap.empty() && (int)out.size() < max_levels) {
    auto [e, occ] = heap.top();
    heap.pop();
    TonksLevel lv;
    lv.N = N;
    lv.occupied = occ;
    lv.energy = e;
    lv.bound = true;
    out.push_back(lv);
    for (int i = 0; i < N; ++i) {
      std::vector<int> nxt = occ;
      nxt[i] += 1;
      if (nxt[i] > nb) continue;
      if (i + 1 < N && nxt[i] >= nxt[i + 1]) continue;  // keep indices distinct/sorted
      if (seen.insert(nxt).second) heap.emplace(energy_of(nxt), nxt);
    }
  }
  return out;
}

double tonks_merge_depth(int N, double L, double tol) {
  if (N < 2) return 0.0;  // one particle is always bound
  WellSpec w;
  w.L = L;
  w.D = 10.0 * L;
  auto count_at = [&](double V0) {
    return (int)solve_bound_states(w.with_depth(V0)).size();
  };
  // bracket the appearance of the N-th level around the analytic threshold
  double guess = tonks_threshold(N, L);
  double lo = 0.5 * guess, hi = 1.5 * guess + 1.0;
  while (count_at(lo) >= N) lo *= 0.5;
  while (count_at(hi) < N) hi *= 1.5;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    (count_at(mid) >= N ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

double final_stage_gap_tonks_exact(int N, double L) {
  if (N < 1) throw std::invalid_argument("final_stage_gap_tonks: N >= 1");
  WellSpec w;
  w.L = L;
  w.D = 10.0 * L;
  w.V0 = tonks_threshold(N + 1, L);  // depth where N+1 just unbind
  auto st = solve_bound_states(w, N);
  if ((int)st.size() < N) throw UnboundError(N);
  return -st[N - 1].E;  // binding energy of the N-th level
}

double final_stage_gap_tonks(int N, double L) {
  if (N < 1) throw std::invalid_argument("final_stage_gap_tonks: N >= 1");
  // the pi^2 (N + 1/2) level-spacing estimate overshoots badly for the first
  // couple of levels; solve those exactly and use the estimate from N = 3 on
  if (N <= 2) return final_stage_gap_tonks_exact(N, L);
  return M_PI * M_PI * (N + 0.5) / (L * L);
}

double max_rate_tonks(int N, double L) {
  return final_stage_gap_tonks(N, L) * tonks_interval(N, L);
}

}  // namespace qwell
