#pragma once
// One particle in the finite square well: true bound states on the infinite
// line, and the box-quantized modes (hard walls at +-D/2) that serve as the
// many-body basis. Inside the well psi ~ cos(kx) or sin(kx) with
// E = k^2/2 - V0; outside, bound states decay with kappa = sqrt(2 V0 - k^2)
// and extended box modes oscillate with q = sqrt(k^2 - 2 V0).
#include <vector>

#include "qwell/model.hpp"
#include "qwell/numerics.hpp"

namespace qwell {

enum class Parity { Even, Odd };

struct SingleParticleState {
  double k = 0.0;       // inside-well wavenumber
  double kappa = 0.0;   // decay constant (bound) or outside wavenumber (extended)
  bool bound = false;   // E < 0  <=>  k^2 < 2 V0
  Parity parity = Parity::Even;
  double E = 0.0;       // k^2/2 - V0; zero of energy at the top of the well
  double A_in = 0.0;    // inside amplitude of cos(kx)/sin(kx)
  double A_out = 0.0;   // outside amplitude (see evaluate_wavefunction)
  int index = 0;        // 1-based ordinal within its family, sorted by energy
  bool in_box = false;  // box-quantized (vanishes at +-D/2) vs infinite line
  double L = 1.0, D = 10.0;
};

// All bound states of the well on the infinite line (at most max_count),
// sorted by energy. Count always equals floor(sqrt(2 V0) L / pi) + 1.
std::vector<SingleParticleState> solve_bound_states(const WellSpec& well,
                                                    int max_count = 1 << 20);

// Lowest `count` modes of the well embedded in the hard-wall box: bound-like
// and extended together, sorted by energy, unit-normalized over the box.
std::vector<SingleParticleState> solve_box_states(const WellSpec& well, int count);

// Piecewise-analytic wavefunction value. Box states reject |x| > D/2; line
// states evaluate anywhere (their tails extend past any box).
double evaluate_wavefunction(const SingleParticleState& st, double x);

// integral psi_a psi_b psi_c psi_d over the box (states from one box basis);
// fully symmetric in its arguments, zero when the parities multiply to odd
double quartic_overlap(const SingleParticleState& a, const SingleParticleState& b,
                       const SingleParticleState& c, const SingleParticleState& d);

// quadrature nodes resolving products of modes from this basis (shared by the
// quartic tables and density integrals)
num::Quadrature box_quadrature(const std::vector<SingleParticleState>& modes);

}  // namespace qwell
