#include "qwell/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qwell/errors.hpp"
#include "qwell/numerics.hpp"

namespace qwell {

namespace {

double overlap(double a, double b) { return 2.0 * std::sqrt(a * b) / (a + b); }

// <phi_a| -1/2 d^2/dx^2 + V_well |phi_b> for unit-norm exponentials; the
// cusp at the origin contributes through the derivative form, giving the
// kappa_a kappa_b / 2 * s prefactor exactly
double one_body(double a, double b, const WellSpec& w) {
  double s = overlap(a, b);
  double T = 0.5 * a * b * s;
  double V = -w.V0 * s * (1.0 - std::exp(-0.5 * (a + b) * w.L));
  return T + V;
}

// int phi1^a phi2^b dx
double contact(double k1, double k2, int a, int b) {
  return std::pow(k1, 0.5 * a) * std::pow(k2, 0.5 * b) * 2.0 /
         (a * k1 + b * k2);
}

}  // namespace

double single_orbital_energy(double kappa, int N, double g,
                             const WellSpec& well) {
  if (kappa <= 0.0)
    throw std::invalid_argument("single_orbital_energy: kappa must be > 0");
  if (N < 1) throw std::invalid_argument("single_orbital_energy: N >= 1");
  double h = one_body(kappa, kappa, well);
  return N * h + g * (0.5 * N * (N - 1)) * (0.5 * kappa);
}

double two_orbital_energy(double k1, double k2, int N, double g,
                          const WellSpec& well) {
  if (k1 <= 0.0 || k2 <= 0.0)
    throw std::invalid_argument("two_orbital_energy: kappa must be > 0");
  if (N < 2) throw std::invalid_argument("two_orbital_energy: N >= 2");
  double n = N;
  double s = overlap(k1, k2);
  double h11 = one_body(k1, k1, well);
  double h22 = one_body(k2, k2, well);
  double h12 = one_body(k1, k2, well);
  double J40 = contact(k1, k2, 4, 0);
  double J22 = contact(k1, k2, 2, 2);
  double J31 = contact(k1, k2, 3, 1);

  // N-term symmetrization (which particle sits in phi2), bra x ket:
  // diagonal terms carry no overlap factor, off-diagonal ones pick up s
  // per exchanged particle
  double norm = n * (1.0 + (n - 1.0) * s * s);
  double one = n * (h22 + (n - 1.0) * h11) +
               n * (n - 1.0) * ((n - 2.0) * s * s * h11 + 2.0 * s * h12);
  double pairs11 = 0.5 * (n - 1.0) * (n - 2.0);   // phi1-phi1 pairs, diagonal
  double pairs11x = 0.5 * (n - 2.0) * (n - 3.0);  // same, both spectators
  double two = n * (pairs11 * J40 + (n - 1.0) * J22) +
               n * (n - 1.0) *
                   (pairs11x * s * s * J40 + J22 + 2.0 * (n - 2.0) * s * J31);
  return (one + g * two) / norm;
}

namespace {

struct Min1D {
  double x = 0.0, f = 0.0;
};

// coarse log-spaced scan then golden refinement on the bracketing cell
Min1D minimize_log1d(const std::function<double(double)>& f, double lo,
                     double hi, int coarse = 56) {
  double best = std::numeric_limits<double>::infinity();
  int bi = 0;
  std::vector<double> xs(coarse);
  for (int i = 0; i < coarse; ++i) {
    xs[i] = lo * std::pow(hi / lo, i / (coarse - 1.0));
    double fi = f(xs[i]);
    if (fi < best) {
      best = fi;
      bi = i;
    }
  }
  double a = xs[std::max(bi - 1, 0)];
  double b = xs[std::min(bi + 1, coarse - 1)];
  Min1D m;
  m.x = num::golden_min(f, a, b, 1e-11 * (a + b));
  m.f = f(m.x);
  if (best < m.f) {
    m.x = xs[bi];
    m.f = best;
  }
  return m;
}

}  // namespace

VariationalResult minimize_two_orbital(int N, double g, const WellSpec& well) {
  if (N < 2) throw std::invalid_argument("minimize_two_orbital: N >= 2");
  if (!(g > 0.0)) throw std::invalid_argument("minimize_two_orbital: g > 0");
  double klo = 1e-4;
  double khi = 10.0 * std::sqrt(2.0 * well.V0);
  if (!(khi > 10.0 * klo)) khi = 1.0;

  auto e2 = [&](double a, double b) {
    return two_orbital_energy(a, b, N, g, well);
  };

  // nested golden: inner minimum over kappa2 at fixed kappa1
  auto inner = [&](double k1) {
    return minimize_log1d([&](double k2) { return e2(k1, k2); }, klo, khi);
  };
  Min1D outer =
      minimize_log1d([&](double k1) { return inner(k1).f; }, klo, khi);
  double k1 = outer.x;
  double k2 = inner(k1).x;

  // simplex polish in log coordinates
  Eigen::VectorXd x0(2);
  x0 << std::log(k1), std::log(k2);
  auto nmf = [&](const Eigen::VectorXd& u) {
    return e2(std::exp(std::max(u[0], -230.0)),
              std::exp(std::max(u[1], -230.0)));
  };
  auto nm = num::nelder_mead(nmf, x0, 0.12, 1e-13, 4000);
  if (!nm.converged) throw NonConvergedError("minimize_two_orbital", nm.f);
  k1 = std::exp(std::max(nm.x[0], -230.0));
  k2 = std::exp(std::max(nm.x[1], -230.0));
  double e_int = nm.f;

  // the kappa2 -> 0 edge: one particle leaves, N-1 stay in one orbital
  Min1D deloc = minimize_log1d(
      [&](double k) { return single_orbital_energy(k, N - 1, g, well); }, klo,
      khi);

  VariationalResult r;
  r.converged = true;
  Min1D solo = minimize_log1d(
      [&](double k) { return single_orbital_energy(k, N, g, well); }, klo,
      khi);
  r.single_orbital_energy = solo.f;

  double scale = std::max(1.0, std::abs(e_int));
  if (deloc.f < e_int - 1e-9 * scale) {
    r.kappa1 = deloc.x;
    r.kappa2 = 0.0;
    r.energy = deloc.f;
  } else if (std::min(k1, k2) <= 2.0 * klo) {
    // an orbital collapsed onto the domain floor: particle(s) delocalize
    r.kappa1 = std::max(k1, k2);
    r.kappa2 = 0.0;
    r.energy = std::min(e_int, deloc.f);
  } else {
    // report the tighter orbital first
    r.kappa1 = std::max(k1, k2);
    r.kappa2 = std::min(k1, k2);
    r.energy = e_int;
  }
  return r;
}

OrbitalPair solve_coupled_orbitals(int N, double g, const WellSpec& well,
                                   int grid_n, double tol) {
  if (N < 2) throw std::invalid_argument("solve_coupled_orbitals: N >= 2");
  well.validate();
  int n = grid_n;
  double D = well.D;
  double dx = D / (n + 1);

  OrbitalPair out;
  out.grid.resize(n);
  std::vector<double> V(n);
  for (int i = 0; i < n; ++i) {
    double x = -0.5 * D + (i + 1) * dx;
    out.grid[i] = x;
    V[i] = (std::abs(x) <= 0.5 * well.L) ? -well.V0 : 0.0;
  }

  auto normalize = [&](std::vector<double>& p) {
    double s2 = 0.0;
    for (double v : p) s2 += v * v;
    double c = 1.0 / std::sqrt(s2 * dx);
    for (double& v : p) v *= c;
  };

  // concentrated, even, nodeless start
  std::vector<double> p1(n), p2(n);
  for (int i = 0; i < n; ++i) {
    double x = out.grid[i];
    p1[i] = std::exp(-x * x / (0.5 * well.L * well.L));
    p2[i] = p1[i];
  }
  normalize(p1);
  normalize(p2);

  double inv2 = 0.5 / (dx * dx);
  // effective potentials of the two coupled equations
  auto veff1 = [&](int i) {
    return V[i] + g * (N - 2) * p1[i] * p1[i] + 2.0 * g * p2[i] * p2[i];
  };
  auto veff2 = [&](int i) { return V[i] + 2.0 * g * (N - 1) * p1[i] * p1[i]; };

  auto rayleigh = [&](const std::vector<double>& p,
                      const std::function<double(int)>& ve) {
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
      double lap = -inv2 * ((i > 0 ? p[i - 1] : 0.0) - 2.0 * p[i] +
                            (i + 1 < n ? p[i + 1] : 0.0));
      e += p[i] * (lap + ve(i) * p[i]);
    }
    return e * dx;
  };
  auto resid = [&](const std::vector<double>& p,
                   const std::function<double(int)>& ve, double mu) {
    double r = 0.0;
    for (int i = 0; i < n; ++i) {
      double lap = -inv2 * ((i > 0 ? p[i - 1] : 0.0) - 2.0 * p[i] +
                            (i + 1 < n ? p[i + 1] : 0.0));
      double d = lap + ve(i) * p[i] - mu * p[i];
      r += d * d;
    }
    return std::sqrt(r * dx);
  };

  // ground state of the frozen effective Hamiltonian: Sturm bisection for
  // the lowest eigenvalue of the tridiagonal, then shifted inverse
  // iteration (Thomas solves) for its vector, warm-started from p
  std::vector<double> b(n), rhs(n), tmp(n);
  double off = -inv2;
  auto sturm_below = [&](const std::function<double(int)>& ve, double lam) {
    int cnt = 0;
    double q = 1.0;
    for (int i = 0; i < n; ++i) {
      double d = 2.0 * inv2 + ve(i) - lam;
      q = (i == 0) ? d : d - off * off / q;
      if (q == 0.0) q = -1e-300;
      if (q < 0.0) ++cnt;
    }
    return cnt;
  };
  auto solve_ground = [&](std::vector<double>& p,
                          const std::function<double(int)>& ve) {
    double lo = 2.0 * inv2, hi = -2.0 * inv2;
    for (int i = 0; i < n; ++i) {
      lo = std::min(lo, ve(i));
      hi = std::max(hi, 4.0 * inv2 + ve(i));
    }
    for (int k = 0; k < 80 && hi - lo > 1e-13 * (std::abs(lo) + 1.0); ++k) {
      double mid = 0.5 * (lo + hi);
      (sturm_below(ve, mid) >= 1 ? hi : lo) = mid;
    }
    double sigma = lo - 1e-10 * (std::abs(lo) + 1.0);
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < n; ++i) {
        b[i] = 2.0 * inv2 + ve(i) - sigma;
        rhs[i] = p[i];
      }
      tmp[0] = off / b[0];
      rhs[0] /= b[0];
      for (int i = 1; i < n; ++i) {
        double m = 1.0 / (b[i] - off * tmp[i - 1]);
        tmp[i] = off * m;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) * m;
      }
      for (int i = n - 2; i >= 0; --i) rhs[i] -= tmp[i] * rhs[i + 1];
      normalize(rhs);
      p = rhs;
    }
  };

  // damped self-consistency: exact orbital update with linear mixing,
  // backing off the mixing factor whenever the residual grows
  double mix = 0.3;
  const int maxit = 4000;
  double r1 = 1.0, r2 = 1.0, r_prev = std::numeric_limits<double>::infinity();
  int it = 0, streak = 0;
  std::vector<double> q1(n), q2(n);
  for (; it < maxit; ++it) {
    q1 = p1;
    solve_ground(q1, veff1);
    for (int i = 0; i < n; ++i) p1[i] = (1.0 - mix) * p1[i] + mix * q1[i];
    normalize(p1);
    q2 = p2;
    solve_ground(q2, veff2);
    for (int i = 0; i < n; ++i) p2[i] = (1.0 - mix) * p2[i] + mix * q2[i];
    normalize(p2);
    double mu1 = rayleigh(p1, veff1);
    double mu2 = rayleigh(p2, veff2);
    r1 = resid(p1, veff1, mu1);
    r2 = resid(p2, veff2, mu2);
    double r = std::max(r1, r2);
    if (r > 1.2 * r_prev) {
      mix = std::max(0.5 * mix, 0.02);
      streak = 0;
    } else if (r < r_prev && ++streak >= 25) {
      mix = std::min(1.6 * mix, 0.3);
      streak = 0;
    }
    r_prev = r;
    out.residual_history.push_back(r);
    if (r1 <= tol && r2 <= tol) break;
  }
  if (r1 > tol || r2 > tol)
    throw NonConvergedError("solve_coupled_orbitals", std::max(r1, r2));

  // sign convention: nodeless and positive
  auto fix_sign = [&](std::vector<double>& p) {
    double s = 0.0;
    for (double v : p) s += v;
    if (s < 0.0)
      for (double& v : p) v = -v;
  };
  fix_sign(p1);
  fix_sign(p2);

  out.mu1 = rayleigh(p1, veff1);
  out.mu2 = rayleigh(p2, veff2);
  out.residual =
      std::max(resid(p1, veff1, out.mu1), resid(p2, veff2, out.mu2));
  out.iterations = it + 1;
  out.phi1 = std::move(p1);
  out.phi2 = std::move(p2);
  return out;
}

}  // namespace qwell
