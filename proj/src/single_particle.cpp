#include "qwell/single_particle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qwell {

// sinh(sqrt(u) t)/sqrt(u) and cosh(sqrt(u) t), continued through u <= 0 where
// they turn into sin/cos; entire in u, so matching stays smooth across the
// bound/extended transition
static double S_fn(double u, double t) {
  double z = u * t * t;
  if (std::abs(z) < 1e-8) return t * (1.0 + z / 6.0 + z * z / 120.0);
  if (u > 0.0) {
    double s = std::sqrt(u);
    return std::sinh(s * t) / s;
  }
  double s = std::sqrt(-u);
  return std::sin(s * t) / s;
}

static double C_fn(double u, double t) {
  double z = u * t * t;
  if (std::abs(z) < 1e-8) return 1.0 + z / 2.0 + z * z / 24.0;
  if (u > 0.0) return std::cosh(std::sqrt(u) * t);
  return std::cos(std::sqrt(-u) * t);
}

// int_0^t S(u,s)^2 ds, used for box-state normalization
static double Q_fn(double u, double t) {
  double z = u * t * t;
  if (std::abs(z) < 1e-6) return t * t * t * (1.0 / 3.0 + z / 15.0);
  return (S_fn(u, t) * C_fn(u, t) - t) / (2.0 * u);
}

// ---- infinite-line bound states ---------------------------------------------

// matching conditions k tan(kL/2) = kappa (even), -k cot(kL/2) = kappa (odd),
// written in product form so they stay finite at the tan/cot poles
static double line_match(double k, Parity p, double V0, double L) {
  double kap = std::sqrt(std::max(0.0, 2.0 * V0 - k * k));
  double sh = std::sin(0.5 * k * L), ch = std::cos(0.5 * k * L);
  return p == Parity::Even ? k * sh - kap * ch : k * ch + kap * sh;
}

static SingleParticleState make_line_state(double k, Parity p, const WellSpec& w) {
  SingleParticleState st;
  st.k = k;
  st.kappa = std::sqrt(std::max(0.0, 2.0 * w.V0 - k * k));
  st.bound = true;
  st.parity = p;
  st.E = 0.5 * k * k - w.V0;
  st.in_box = false;
  st.L = w.L;
  st.D = w.D;
  double sh = std::sin(0.5 * k * w.L), ch = std::cos(0.5 * k * w.L);
  double B = (p == Parity::Even) ? ch : sh;  // outside amplitude before normalization
  double n_in = 0.5 * w.L + (p == Parity::Even ? 1.0 : -1.0) * std::sin(k * w.L) / (2.0 * k);
  double n_out = B * B / st.kappa;
  double scale = 1.0 / std::sqrt(n_in + n_out);
  st.A_in = scale;
  st.A_out = B * scale;
  return st;
}

std::vector<SingleParticleState> solve_bound_states(const WellSpec& well, int max_count) {
  well.validate();
  std::vector<SingleParticleState> out;
  if (!(well.V0 > 0.0)) return out;
  const double kmax = std::sqrt(2.0 * well.V0);
  const double step = std::min(M_PI / (4.0 * std::max(well.L, 1.0)), kmax / 64.0);
  const int ngrid = std::max(65, (int)std::ceil(kmax / step) + 1);

  for (Parity p : {Parity::Even, Parity::Odd}) {
    auto f = [&](double k) { return line_match(k, p, well.V0, well.L); };
    for (auto [a, b] : num::bracket_roots(f, kmax * 1e-12, kmax, ngrid)) {
      double k = (a == b) ? a : num::bisect(f, a, b, 1e-13 * std::max(1.0, kmax));
      double kap2 = 2.0 * well.V0 - k * k;
      if (kap2 <= 0.0 || std::sqrt(kap2) < 1e-3) {
        // barely bound: re-solve in kappa to dodge the k-space cancellation
        auto g = [&](double kap) {
          double kk = std::sqrt(std::max(0.0, 2.0 * well.V0 - kap * kap));
          double sh = std::sin(0.5 * kk * well.L), ch = std::cos(0.5 * kk * well.L);
          return p == Parity::Even ? kk * sh - kap * ch : kk * ch + kap * sh;
        };
        double hi = std::min(2e-3, kmax);
        if (g(1e-15) * g(hi) < 0.0) {
          double kap = num::bisect(g, 1e-15, hi, 1e-16);
          if (kap <= 1e-14) continue;  // marginal state at E = 0: not bound
          k = std::sqrt(2.0 * well.V0 - kap * kap);
        } else if (kap2 <= 0.0) {
          continue;
        }
      }
      out.push_back(make_line_state(k, p, well));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& x, const auto& y) { return x.E < y.E; });
  if ((int)out.size() > max_count) out.resize(max_count);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].index = (int)i + 1;
  return out;
}

// ---- box-quantized modes -----------------------------------------------------

// matching of the interior cos/sin solution onto the outside solution that
// vanishes at the wall x = D/2; u = 2 V0 - k^2 changes sign at the well top
static double box_match(double k, Parity p, double V0, double L, double D) {
  double u = 2.0 * V0 - k * k;
  double dlt = 0.5 * (D - L);
  double sh = std::sin(0.5 * k * L), ch = std::cos(0.5 * k * L);
  if (u > 0.0 && u * dlt * dlt > 1e-8) {
    // scaled by cosh to stay bounded for deep wells
    double T = std::tanh(std::sqrt(u) * dlt) / std::sqrt(u);
    return p == Parity::Even ? k * sh * T - ch : k * ch * T + sh;
  }
  double S = S_fn(u, dlt), C = C_fn(u, dlt);
  return p == Parity::Even ? k * sh * S - ch * C : k * ch * S + sh * C;
}

static SingleParticleState make_box_state(double k, Parity p, const WellSpec& w) {
  SingleParticleState st;
  double u = 2.0 * w.V0 - k * k;
  double dlt = 0.5 * (w.D - w.L);
  st.k = k;
  st.kappa = std::sqrt(std::abs(u));
  st.bound = u > 0.0;
  st.parity = p;
  st.E = 0.5 * k * k - w.V0;
  st.in_box = true;
  st.L = w.L;
  st.D = w.D;
  double sh = std::sin(0.5 * k * w.L), ch = std::cos(0.5 * k * w.L);
  double S = S_fn(u, dlt), C = C_fn(u, dlt);
  // outside amplitude from value matching, or from slope matching when the
  // outside solution nearly vanishes at the well edge
  double B;
  if (std::abs(S) > 1e-4 * (std::abs(dlt) + 1.0)) {
    B = (p == Parity::Even ? ch : sh) / S;
  } else {
    B = (p == Parity::Even ? k * sh : -k * ch) / C;
  }
  double n_in = 0.5 * w.L + (p == Parity::Even ? 1.0 : -1.0) * std::sin(k * w.L) / (2.0 * k);
  double n_out = 2.0 * B * B * Q_fn(u, dlt);
  double scale = 1.0 / std::sqrt(n_in + n_out);
  st.A_in = scale;
  st.A_out = B * scale;
  return st;
}

std::vector<SingleParticleState> solve_box_states(const WellSpec& well, int count) {
  well.validate();
  if (count < 1) throw std::invalid_argument("solve_box_states: count >= 1");
  if (!(well.D > well.L)) throw std::invalid_argument("solve_box_states: D > L required");

  std::vector<SingleParticleState> out;
  double kmax = std::sqrt(2.0 * well.V0) + M_PI * (count + 6) / well.D;
  for (int attempt = 0; attempt < 8 && (int)out.size() < count; ++attempt) {
    out.clear();
    double step = M_PI / (8.0 * std::max(well.D, well.L));
    int ngrid = std::max(64, (int)std::ceil(kmax / step) + 1);
    for (Parity p : {Parity::Even, Parity::Odd}) {
      auto f = [&](double k) { return box_match(k, p, well.V0, well.L, well.D); };
      double klo = M_PI / (1000.0 * well.D);  // skip the spurious k = 0 zero
      for (auto [a, b] : num::bracket_roots(f, klo, kmax, ngrid)) {
        double k = (a == b) ? a : num::bisect(f, a, b, 1e-13 * std::max(1.0, kmax));
        out.push_back(make_box_state(k, p, well));
      }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& x, const auto& y) { return x.E < y.E; });
    if ((int)out.size() < count) kmax *= 1.4;
  }
  if ((int)out.size() < count)
    throw BracketError("solve_box_states: bracketing found only " +
                           std::to_string(out.size()) + " of " +
                           std::to_string(count) + " modes in k <= " +
                           std::to_string(kmax),
                       0.0, kmax);
  out.resize(count);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].index = (int)i + 1;
  return out;
}

// ---- evaluation and overlaps --------------------------------------------------

double evaluate_wavefunction(const SingleParticleState& st, double x) {
  if (st.in_box && std::abs(x) > 0.5 * st.D * (1.0 + 1e-12))
    throw std::domain_error("evaluate_wavefunction: position outside the box");
  double ax = std::abs(x);
  double sgn = (x < 0.0) ? -1.0 : 1.0;
  if (ax <= 0.5 * st.L) {
    return st.parity == Parity::Even ? st.A_in * std::cos(st.k * x)
                                     : st.A_in * std::sin(st.k * x);
  }
  double psi;
  if (st.in_box) {
    double u = -2.0 * st.E;  // = 2 V0 - k^2
    psi = st.A_out * S_fn(u, 0.5 * st.D - ax);
  } else {
    psi = st.A_out * std::exp(-st.kappa * (ax - 0.5 * st.L));
  }
  return st.parity == Parity::Even ? psi : sgn * psi;
}

num::Quadrature box_quadrature(const std::vector<SingleParticleState>& modes) {
  if (modes.empty()) throw std::invalid_argument("box_quadrature: no modes");
  double L = modes[0].L, D = modes[0].D;
  double kmax = 0.0;
  for (const auto& m : modes) {
    if (m.L != L || m.D != D)
      throw std::invalid_argument("box_quadrature: modes from different geometries");
    kmax = std::max({kmax, m.k, m.bound ? 0.0 : m.kappa});
  }
  // resolves products of up to four modes
  return num::composite_gl_auto({-0.5 * D, -0.5 * L, 0.5 * L, 0.5 * D}, 4.0 * kmax, 16, 4);
}

double quartic_overlap(const SingleParticleState& a, const SingleParticleState& b,
                       const SingleParticleState& c, const SingleParticleState& d) {
  const SingleParticleState* st[4] = {&a, &b, &c, &d};
  for (const auto* s : st)
    if (!s->in_box || s->L != a.L || s->D != a.D)
      throw std::invalid_argument("quartic_overlap: states must share one box basis");
  auto q = box_quadrature({a, b, c, d});
  double sum = 0.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    double x = q.x[i];
    sum += q.w[i] * evaluate_wavefunction(a, x) * evaluate_wavefunction(b, x) *
           evaluate_wavefunction(c, x) * evaluate_wavefunction(d, x);
  }
  return sum;
}

}  // namespace qwell
