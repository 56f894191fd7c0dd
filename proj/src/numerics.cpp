#include "qwell/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace qwell::num {

const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n) {
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");

  std::vector<double> x(n), w(n);
  // Newton on P_n with the usual Chebyshev-like initial guess
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

double Quadrature::integrate(const std::function<double(double)>& f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(x[i]);
  return s;
}

Quadrature composite_gl(const std::vector<double>& breaks,
                        const std::vector<int>& panels, int pts) {
  if (breaks.size() < 2 || panels.size() + 1 != breaks.size())
    throw std::invalid_argument("composite_gl: bad segment description");
  const auto& [gx, gw] = gauss_legendre(pts);
  Quadrature q;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    double a = breaks[s], b = breaks[s + 1];
    int np = std::max(1, panels[s]);
    double h = (b - a) / np;
    for (int p = 0; p < np; ++p) {
      double pa = a + p * h;
      for (int i = 0; i < pts; ++i) {
        q.x.push_back(pa + 0.5 * h * (gx[i] + 1.0));
        q.w.push_back(0.5 * h * gw[i]);
      }
    }
  }
  return q;
}

Quadrature composite_gl_auto(const std::vector<double>& breaks, double kmax,
                             int pts, int min_panels) {
  std::vector<int> panels;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    double len = breaks[s + 1] - breaks[s];
    // >= 8 nodes per wavelength 2*pi/kmax
    double need = (kmax > 0 ? len * kmax * 8.0 / (2.0 * M_PI * pts) : 0.0);
    panels.push_back(std::max(min_panels, (int)std::ceil(need)));
  }
  return composite_gl(breaks, panels, pts);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 int panels, int pts) {
  return composite_gl({a, b}, {panels}, pts).integrate(f);
}

std::vector<std::pair<double, double>> bracket_roots(
    const std::function<double(double)>& f, double a, double b, int ngrid) {
  std::vector<std::pair<double, double>> out;
  if (ngrid < 2) throw std::invalid_argument("bracket_roots: ngrid >= 2");
  double fp = f(a), xp = a;
  for (int i = 1; i < ngrid; ++i) {
    double x = a + (b - a) * i / (ngrid - 1);
    double fx = f(x);
    if (fp == 0.0) out.emplace_back(xp, xp);
    else if (std::isfinite(fp) && std::isfinite(fx) && fp * fx < 0.0)
      out.emplace_back(xp, x);
    xp = x;
    fp = fx;
  }
  if (fp == 0.0) out.emplace_back(xp, xp);
  return out;
}

double bisect(const std::function<double(double)>& f, double a, double b,
              double xtol, int maxit) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw std::invalid_argument("bisect: endpoints do not bracket a root");
  for (int i = 0; i < maxit && (b - a) > xtol; ++i) {
    double m = 0.5 * (a + b), fm = f(m);
    if (fm == 0.0) return m;
    if (fa * fm < 0.0) { b = m; fb = fm; } else { a = m; fa = fm; }
  }
  return 0.5 * (a + b);
}

double golden_min(const std::function<double(double)>& f, double a, double b,
                  double xtol, int maxit) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);  // 0.618...
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < maxit && (b - a) > xtol; ++i) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - r * (b - a); f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + r * (b - a); f2 = f(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& x0, double step, double ftol,
                          int maxit) {
  const int n = (int)x0.size();
  std::vector<Eigen::VectorXd> v(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (int i = 0; i < n; ++i) v[i + 1](i) += step;
  for (int i = 0; i <= n; ++i) fv[i] = f(v[i]);

  auto order = [&] {
    for (int i = 0; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j)
        if (fv[j] < fv[i]) { std::swap(fv[i], fv[j]); std::swap(v[i], v[j]); }
  };

  SimplexResult res;
  int it = 0;
  for (; it < maxit; ++it) {
    order();
    if (std::abs(fv[n] - fv[0]) <= ftol * (std::abs(fv[0]) + ftol)) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) c += v[i];
    c /= n;
    Eigen::VectorXd xr = c + (c - v[n]);
    double fr = f(xr);
    if (fr < fv[0]) {
      Eigen::VectorXd xe = c + 2.0 * (c - v[n]);
      double fe = f(xe);
      if (fe < fr) { v[n] = xe; fv[n] = fe; } else { v[n] = xr; fv[n] = fr; }
    } else if (fr < fv[n - 1]) {
      v[n] = xr; fv[n] = fr;
    } else {
      Eigen::VectorXd xc = c + 0.5 * (v[n] - c);
      double fc = f(xc);
      if (fc < fv[n]) { v[n] = xc; fv[n] = fc; }
      else {
        for (int i = 1; i <= n; ++i) {
          v[i] = v[0] + 0.5 * (v[i] - v[0]);
          fv[i] = f(v[i]);
        }
      }
    }
  }
  order();
  res.x = v[0];
  res.f = fv[0];
  res.iterations = it;
  return res;
}

LanczosResult lanczos_lowest(const std::function<void(const double*, double*)>& apply,
                             int dim, int k, double tol, int maxit,
                             std::uint64_t seed) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  LanczosResult res;
  k = std::min(k, dim);
  const int m_cap = std::min(dim, std::max(maxit, 4 * k + 40));
  const int check_every = 20;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  VectorXd v = VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return uni(rng); });
  v.normalize();

  MatrixXd V(dim, m_cap);          // Lanczos basis, fully reorthogonalized
  std::vector<double> alpha, beta; // tridiagonal entries
  VectorXd w(dim);
  int m = 0;
  bool exhausted = false;

  auto ritz_ok = [&](int mm) {
    // cheap residual estimate |beta_m * y_last|; exact check happens at the end
    MatrixXd T = MatrixXd::Zero(mm, mm);
    for (int i = 0; i < mm; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < mm) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
    if (mm < k) return false;
    double bl = (mm <= (int)beta.size()) ? std::abs(beta[mm - 1]) : 0.0;
    for (int i = 0; i < k; ++i)
      if (bl * std::abs(es.eigenvectors()(mm - 1, i)) > 0.1 * tol) return false;
    return true;
  };

  while (m < m_cap) {
    V.col(m) = v;
    apply(v.data(), w.data());
    double a = v.dot(w);
    alpha.push_back(a);
    w -= a * v;
    if (m > 0) w -= beta.back() * V.col(m - 1);
    for (int pass = 0; pass < 2; ++pass)  // two-pass full reorthogonalization
      w -= V.leftCols(m + 1) * (V.leftCols(m + 1).transpose() * w);
    double b = w.norm();
    ++m;
    if (b < 1e-13) {  // invariant subspace; continue in a fresh random direction
      VectorXd r = VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return uni(rng); });
      r -= V.leftCols(m) * (V.leftCols(m).transpose() * r);
      if (r.norm() < 1e-13) { exhausted = true; break; }
      beta.push_back(0.0);  // decoupled block boundary in T
      v = r.normalized();
    } else {
      beta.push_back(b);
      v = w / b;
    }
    if (m >= std::max(k + 2, 2 * k) && (m % check_every == 0) && ritz_ok(m)) break;
  }

  const int mm = m;
  MatrixXd T = MatrixXd::Zero(mm, mm);
  for (int i = 0; i < mm; ++i) {
    T(i, i) = alpha[i];
    if (i + 1 < mm) T(i, i + 1) = T(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
  const int kk = std::min(k, mm);
  MatrixXd Y = V.leftCols(mm) * es.eigenvectors().leftCols(kk);
  for (int i = 0; i < kk; ++i) Y.col(i).normalize();
  res.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + kk);
  res.vectors = Y;
  res.residuals.resize(kk);
  res.iterations = mm;
  res.converged = (kk == k);
  for (int i = 0; i < kk; ++i) {
    apply(Y.col(i).data(), w.data());
    res.residuals[i] = (w - res.values[i] * Y.col(i)).norm();
    if (res.residuals[i] > tol) res.converged = false;
  }
  (void)exhausted;
  return res;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

int worker_count() {
  if (const char* env = std::getenv("QWELL_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? (int)hc : 1;
}

}  // namespace qwell::num
