#pragma once
// Small numerical toolbox shared by the solvers: composite Gauss-Legendre
// quadrature, root bracketing/bisection, derivative-free minimization and a
// full-reorthogonalization Lanczos for lowest eigenpairs.
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qwell::num {

// nodes/weights of the n-point Gauss-Legendre rule on [-1,1]; cached per n
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n);

struct Quadrature {
  std::vector<double> x, w;
  double integrate(const std::function<double(double)>& f) const;
};

// composite rule over consecutive segments [breaks[i], breaks[i+1]], each cut
// into panels[i] panels carrying a pts-point GL rule
Quadrature composite_gl(const std::vector<double>& breaks,
                        const std::vector<int>& panels, int pts = 16);

// panel count chosen so integrands oscillating up to wavenumber kmax are
// resolved with >= 8 nodes per wavelength (and at least min_panels per segment)
Quadrature composite_gl_auto(const std::vector<double>& breaks, double kmax,
                             int pts = 16, int min_panels = 2);

double integrate(const std::function<double(double)>& f, double a, double b,
                 int panels = 8, int pts = 16);

// sign-change brackets of f on a uniform ngrid-point scan of [a,b]
std::vector<std::pair<double, double>> bracket_roots(
    const std::function<double(double)>& f, double a, double b, int ngrid);

double bisect(const std::function<double(double)>& f, double a, double b,
              double xtol = 1e-12, int maxit = 200);

double golden_min(const std::function<double(double)>& f, double a, double b,
                  double xtol = 1e-10, int maxit = 400);

struct SimplexResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& x0, double step,
                          double ftol = 1e-12, int maxit = 2000);

struct LanczosResult {
  std::vector<double> values;    // k lowest Ritz values, ascending
  Eigen::MatrixXd vectors;       // dim x k
  std::vector<double> residuals; // ||A v - lambda v|| per pair
  int iterations = 0;
  bool converged = false;
};
// apply(in, out): out = A*in, A symmetric of size dim
LanczosResult lanczos_lowest(const std::function<void(const double*, double*)>& apply,
                             int dim, int k, double tol = 1e-10, int maxit = 800,
                             std::uint64_t seed = 12345);

std::uint64_t fnv1a(const void* data, std::size_t n,
                    std::uint64_t h = 1469598103934665603ull);

// worker pool size: QWELL_WORKERS env var if set, else hardware concurrency
int worker_count();

}  // namespace qwell::num
