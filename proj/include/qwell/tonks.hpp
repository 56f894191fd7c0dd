#pragma once
// Impenetrable bosons via the Bose-Fermi mapping: the N-boson ground state
// energy is the sum of the N lowest single-particle energies, bound many-body
// levels are sets of N distinct bound modes, and thresholds are the depths
// where the N-th single-particle state just appears.
#include <vector>

#include "qwell/model.hpp"
#include "qwell/single_particle.hpp"

namespace qwell {

struct TonksLevel {
  int N = 0;
  std::vector<int> occupied;  // distinct 1-based mode indices, ascending
  double energy = 0.0;        // sum of occupied single-particle energies
  bool bound = true;          // all occupied modes bound (E_j < 0)
};

// sum of the N lowest bound single-particle energies; throws UnboundError
// when the well holds fewer than N bound modes
double tonks_ground_energy(const WellSpec& well, int N);

// depth above which N impenetrable bosons are bound: (pi (N-1) / L)^2 / 2
double tonks_threshold(int N, double L);

// all bound N-particle levels (choices of N distinct bound modes), sorted by
// energy; at most max_levels of them (lowest first)
std::vector<TonksLevel> tonks_bound_spectrum(const WellSpec& well, int N,
                                             int max_levels = 50);

// depth at which the N-th single-particle level detaches, located numerically
// from the sign change of its energy (equals tonks_threshold analytically)
double tonks_merge_depth(int N, double L, double tol = 1e-8);

// energy difference E(N) - E(N-1) at the depth where N+1 particles just
// unbind, as a positive gap. Exact transcendental solve for N <= 2 where the
// large-N estimate is far off; pi^2 (N + 1/2) / L^2 beyond.
double final_stage_gap_tonks(int N, double L);
// the transcendental value for any N (binding energy of the N-th level at
// V0 = pi^2 N^2 / (2 L^2))
double final_stage_gap_tonks_exact(int N, double L);

// E_gap * (V_{0,N+1} - V_{0,N}); the ramp must stay well below this
double max_rate_tonks(int N, double L);
// the depth interval itself, pi^2 (N - 1/2) / L^2
double tonks_interval(int N, double L);

}  // namespace qwell
