#pragma once
// Weak-interaction treatments: a two-orbital variational ansatz with
// non-orthogonal exponential orbitals (N-1 particles in the first, one in
// the second), the coupled nonlinear orbital equations solved on a grid,
// and the Thomas-Fermi unbinding thresholds and mean-field-limit gap/rate
// formulas they imply.
#include <vector>

#include "qwell/model.hpp"

namespace qwell {

struct VariationalResult {
  double kappa1 = 0.0;  // inverse decay length of the majority orbital
  double kappa2 = 0.0;  // minority orbital; 0 flags a delocalized particle
  double energy = 0.0;
  double single_orbital_energy = 0.0;  // one-parameter minimum, all N in one orbital
  bool converged = false;
};

struct OrbitalPair {
  std::vector<double> grid;  // uniform mesh over the box interior
  std::vector<double> phi1, phi2;  // unit-normalized (sum phi^2 dx = 1)
  double mu1 = 0.0, mu2 = 0.0;
  double residual = 0.0;  // max of the two final residual norms
  std::vector<double> residual_history;  // sampled every few sweeps
  int iterations = 0;
};

// <H> in the symmetrized product of N-1 copies of sqrt(k1) e^{-k1|x|} and one
// sqrt(k2) e^{-k2|x|}, overlap included; closed exponential integrals, with
// the cusp kinetic term k^2/2 per orbital handled analytically
double two_orbital_energy(double kappa1, double kappa2, int N, double g,
                          const WellSpec& well);

// same ansatz with all N particles in one orbital of decay kappa
double single_orbital_energy(double kappa, int N, double g,
                             const WellSpec& well);

// minimize over (kappa1, kappa2); the kappa2 -> 0 edge is reported as a
// delocalization verdict (kappa2 = 0, energy from the limit), not a failure
VariationalResult minimize_two_orbital(int N, double g, const WellSpec& well);

// self-consistent solution of the coupled orbital equations
//   (h + g (N-2) |phi1|^2 + 2 g |phi2|^2) phi1 = mu1 phi1
//   (h + 2 g (N-1) |phi1|^2)             phi2 = mu2 phi2
// by damped imaginary-time iteration on a uniform grid over the box;
// throws NonConvergedError if the residuals fail to reach tol
OrbitalPair solve_coupled_orbitals(int N, double g, const WellSpec& well,
                                   int grid_n = 600, double tol = 1e-8);

// depth below which the Thomas-Fermi cloud cannot hold the N-th particle
inline double tf_threshold(int N, double g, double L) {
  return 2.0 * g * (N - 1) / L;
}

// single-orbital variant: the chemical potential reaches the well top at
// half the two-orbital value
inline double gp_single_orbital_threshold(int N, double g, double L) {
  return g * (N - 1) / L;
}

// mean-field-limit gap protecting the last culling stage, 3 g N^2 / 2
inline double final_stage_gap_meanfield(int N, double g) {
  return 1.5 * g * N * N;
}

// width of the depth window supporting exactly N particles (N-independent)
inline double meanfield_interval(double g, double L) { return 2.0 * g / L; }

// gap times interval: the ramp-rate ceiling, 3 g^2 N^2 / L by construction
inline double max_rate_meanfield(int N, double g, double L) {
  return final_stage_gap_meanfield(N, g) * meanfield_interval(g, L);
}

}  // namespace qwell
