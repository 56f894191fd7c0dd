#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "qwell/errors.hpp"
#include "qwell/exact_diag.hpp"
#include "qwell/single_particle.hpp"
#include "qwell/tonks.hpp"

using namespace qwell;

namespace {

WellSpec well(double V0, double L = 1.0, double D = 10.0) {
  WellSpec w;
  w.V0 = V0;
  w.L = L;
  w.D = D;
  return w;
}

ManyBodyHamiltonian assembled(const WellSpec& w, int N, int M, double g) {
  auto modes = solve_box_states(w, M);
  auto basis = build_basis(N, M);
  return build_hamiltonian(basis, modes, g);
}

// hand-built dense matrix wrapped as a Hamiltonian (no mode/basis metadata)
ManyBodyHamiltonian wrap_dense(const Eigen::MatrixXd& A) {
  ManyBodyHamiltonian h;
  h.dim = int(A.rows());
  h.dense_storage = true;
  h.H = A;
  return h;
}

// the same matrix in the lower-triangle sparse layout, to force the
// iterative solver path independent of the dense eigensolver
ManyBodyHamiltonian wrap_sparse(const Eigen::MatrixXd& A) {
  ManyBodyHamiltonian h;
  h.dim = int(A.rows());
  h.dense_storage = false;
  h.col_ptr.assign(std::size_t(h.dim) + 1, 0);
  for (int c = 0; c < h.dim; ++c) {
    for (int r = c; r < h.dim; ++r)
      if (A(r, c) != 0.0) {
        h.row.push_back(r);
        h.val.push_back(A(r, c));
      }
    h.col_ptr[std::size_t(c) + 1] = h.row.size();
  }
  return h;
}

// composite Simpson on [a, b]; n must be even
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_SUITE_BEGIN("exact_diag");

TEST_CASE("occupation basis: dimensions, order, ranking, cap") {
  CHECK(build_basis(2, 2).size() == 3);
  CHECK(build_basis(3, 3).size() == 10);
  CHECK(build_basis(3, 4).size() == 20);
  CHECK(build_basis(2, 30).size() == 465);

  auto b = build_basis(3, 5);
  REQUIRE(b.size() == 35);
  // first and last states of the lexicographic enumeration
  CHECK(b.states.front().occupations == std::vector<int>{0, 0, 0, 0, 3});
  CHECK(b.states.back().occupations == std::vector<int>{3, 0, 0, 0, 0});
  for (std::size_t i = 0; i < b.size(); ++i) {
    CHECK(b.index_of(b.states[i].occupations) == i);
    int total = 0;
    for (int n : b.states[i].occupations) total += n;
    CHECK(total == 3);
  }

  auto b3 = build_basis(2, 3);
  int o1[3] = {1, 0, 1};
  int o2[3] = {2, 0, 0};
  int o3[3] = {0, 0, 2};
  CHECK(b3.index_of(o1) == 3);
  CHECK(b3.index_of(o2) == 5);
  CHECK(b3.index_of(o3) == 0);

  CHECK_THROWS_AS(build_basis(3, 200), DimensionCapError);
  CHECK_THROWS_AS(build_basis(2, 30, 464), DimensionCapError);
  CHECK(build_basis(2, 30, 465).size() == 465);
  CHECK_THROWS_AS(build_basis(0, 5), std::invalid_argument);
}

TEST_CASE("quartic table matches direct overlap integrals") {
  auto w = well(15.0);
  auto modes = solve_box_states(w, 12);
  auto U = quartic_table(modes);
  const int M = 12;
  REQUIRE(U.rows() == M * (M + 1) / 2);

  std::mt19937 rng(911);
  std::uniform_int_distribution<int> pick(0, M - 1);
  for (int t = 0; t < 60; ++t) {
    int a = pick(rng), b = pick(rng), c = pick(rng), d = pick(rng);
    if (a > b) std::swap(a, b);
    if (c > d) std::swap(c, d);
    double direct = quartic_overlap(modes[a], modes[b], modes[c], modes[d]);
    double tab = U(pair_index(a, b, M), pair_index(c, d, M));
    CHECK(std::abs(tab - direct) < 1e-9);
  }

  // independent oracle for one element: piecewise Simpson of phi_0^4
  auto f = [&](double x) {
    double p = evaluate_wavefunction(modes[0], x);
    return p * p * p * p;
  };
  double half = 0.5 * w.D - 1e-13;  // stay inside the walls
  double ref = simpson(f, -half, -0.5, 4000) + simpson(f, -0.5, 0.5, 4000) +
               simpson(f, 0.5, half, 4000);
  CHECK(std::abs(U(pair_index(0, 0, M), pair_index(0, 0, M)) - ref) < 1e-9);
}

TEST_CASE("interaction elements: permutation symmetry and parity selection") {
  auto modes = solve_box_states(well(9.0), 12);
  auto U = quartic_table(modes);
  const int M = 12;
  auto odd = [&](int j) { return modes[j].parity == Parity::Odd; };

  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> pick(0, M - 1);
  int violations = 0;
  for (int t = 0; t < 200; ++t) {
    int a = pick(rng), b = pick(rng), c = pick(rng), d = pick(rng);
    if (a > b) std::swap(a, b);
    if (c > d) std::swap(c, d);
    int p = pair_index(a, b, M), q = pair_index(c, d, M);
    // bra-ket exchange must be exact after symmetrization
    if (std::abs(U(p, q) - U(q, p)) > 1e-12) ++violations;
    // odd total parity integrates to zero exactly
    if ((odd(a) ^ odd(b) ^ odd(c) ^ odd(d)) && U(p, q) != 0.0) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("two particles in two modes: closed-form matrix elements") {
  auto w = well(15.0);
  auto all = solve_box_states(w, 2);
  double g = 0.7;
  auto basis = build_basis(2, 2);
  auto h = build_hamiltonian(basis, all, g);
  REQUIRE(h.dim == 3);

  double u1111 = quartic_overlap(all[0], all[0], all[0], all[0]);
  double u1122 = quartic_overlap(all[0], all[0], all[1], all[1]);
  double u2222 = quartic_overlap(all[1], all[1], all[1], all[1]);

  // basis order: (0,2), (1,1), (2,0)
  CHECK(h.coeff(2, 2) == doctest::Approx(2 * all[0].E + g * u1111).epsilon(1e-12));
  CHECK(h.coeff(1, 1) ==
        doctest::Approx(all[0].E + all[1].E + 2 * g * u1122).epsilon(1e-12));
  CHECK(h.coeff(0, 0) == doctest::Approx(2 * all[1].E + g * u2222).epsilon(1e-12));
  CHECK(h.coeff(0, 2) == doctest::Approx(g * u1122).epsilon(1e-12));
  // even-odd pair creation out of an even-even pair is parity forbidden
  CHECK(h.coeff(1, 2) == 0.0);
  CHECK(h.coeff(1, 0) == 0.0);
  // assembled from either side, elements agree bit for bit
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(h.coeff(r, c) == h.coeff(c, r));

  auto four = solve_box_states(w, 4);
  CHECK_THROWS_AS(build_hamiltonian(basis, four, g), std::invalid_argument);
}

TEST_CASE("g = 0 collapses to occupation sums; single particle is exact") {
  auto w = well(15.0);
  auto modes = solve_box_states(w, 10);

  auto b1 = build_basis(1, 10);
  auto h1 = build_hamiltonian(b1, modes, 3.7);
  auto s1 = diagonalize(h1, 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(s1.eigenvalues[i] == modes[i].E);  // bit for bit
    CHECK(s1.residuals[i] == 0.0);
  }
  // two bound modes at V0 = 15: localized low levels, box-filling high ones
  CHECK(s1.localization[0] > 0.9);
  CHECK(s1.localization[7] < 0.1);

  auto m6 = solve_box_states(w, 6);
  auto b2 = build_basis(2, 6);
  auto h2 = build_hamiltonian(b2, m6, 0.0);
  auto s2 = diagonalize(h2, 3);
  CHECK(s2.eigenvalues[0] == 2 * m6[0].E);
  CHECK(s2.eigenvalues[1] == m6[0].E + m6[1].E);
  // ground eigenvector sits on the (2,0,...,0) occupation
  int occ[6] = {2, 0, 0, 0, 0, 0};
  CHECK(s2.eigenvectors(Eigen::Index(b2.index_of(occ)), 0) == 1.0);
}

TEST_CASE("diagonalize: diagonal, closed-form and random-matrix checks") {
  // diagonal input: sorted diagonal, exactly
  Eigen::MatrixXd Dm = Eigen::MatrixXd::Zero(8, 8);
  double vals[8] = {3.5, -1.25, 7.0, 0.5, -4.75, 2.0, -4.5, 11.0};
  for (int i = 0; i < 8; ++i) Dm(i, i) = vals[i];
  auto sd = diagonalize(wrap_dense(Dm), 8);
  std::vector<double> sorted(vals, vals + 8);
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 8; ++i) CHECK(sd.eigenvalues[i] == sorted[i]);

  // 2x2 closed form
  double a = 1.3, b = -0.6, c = -2.1;
  Eigen::MatrixXd A(2, 2);
  A << a, b, b, c;
  auto s2 = diagonalize(wrap_dense(A), 2);
  double mid = 0.5 * (a + c), rad = std::hypot(0.5 * (a - c), b);
  CHECK(s2.eigenvalues[0] == doctest::Approx(mid - rad).epsilon(1e-14));
  CHECK(s2.eigenvalues[1] == doctest::Approx(mid + rad).epsilon(1e-14));

  // random symmetric 50x50 through the sparse (Lanczos) path vs dense oracle
  std::mt19937 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd R(50, 50);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j <= i; ++j) R(i, j) = R(j, i) = gauss(rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
  auto sr = diagonalize(wrap_sparse(R), 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(sr.eigenvalues[i] - es.eigenvalues()[i]) < 1e-10);
    CHECK(sr.residuals[i] <= 1e-8);
  }
  // orthonormal eigenvectors
  Eigen::MatrixXd G = sr.eigenvectors.transpose() * sr.eigenvectors;
  CHECK((G - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-8);

  // random tridiagonal 40x40 vs the Sturm-bisection oracle
  std::vector<double> d(40), e(39);
  for (auto& x : d) x = gauss(rng);
  for (auto& x : e) x = gauss(rng);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(40, 40);
  for (int i = 0; i < 40; ++i) T(i, i) = d[i];
  for (int i = 0; i < 39; ++i) T(i + 1, i) = T(i, i + 1) = e[i];
  auto st = diagonalize(wrap_sparse(T), 3);
  auto ref = oracle::tridiag_lowest(d, e, 3);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(st.eigenvalues[i] - ref[i]) < 1e-11);
}

TEST_CASE("perturbative regime: first order in g with quadratic remainder") {
  auto w = well(15.0);
  auto modes = solve_box_states(w, 20);
  auto basis = build_basis(2, 20);
  double u1111 = quartic_overlap(modes[0], modes[0], modes[0], modes[0]);

  double r[2];
  double gs[2] = {1e-3, 1e-2};
  for (int i = 0; i < 2; ++i) {
    auto h = build_hamiltonian(basis, modes, gs[i]);
    auto s = diagonalize(h, 1);
    r[i] = s.eigenvalues[0] - (2 * modes[0].E + gs[i] * u1111);
    CHECK(r[i] < 0.0);  // second order lowers the energy
    CHECK(std::abs(r[i]) > 1e-9);
    CHECK(std::abs(r[i]) < 1e-4);
  }
  double slope = std::log10(std::abs(r[1] / r[0]));
  CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("ground energy is non-increasing in basis size") {
  auto w = well(30.0);
  double prev = 1e300;
  for (int M : {20, 30, 40}) {
    auto s = diagonalize(assembled(w, 2, M, 1.0), 1);
    CHECK(s.eigenvalues[0] <= prev + 1e-9);
    prev = s.eigenvalues[0];
  }
}

TEST_CASE("fermionization: strong repulsion approaches the impenetrable limit") {
  auto w = well(50.0);
  double hard = tonks_ground_energy(w, 2);
  auto s = diagonalize(assembled(w, 2, 40, 100.0), 1);
  CHECK(std::abs(s.eigenvalues[0] - hard) < 0.03 * std::abs(hard));
  // from above: the finite-g ground lies above the impenetrable-limit energy
  CHECK(s.eigenvalues[0] > hard);
}

TEST_CASE("bound classification: deep well, free box, near threshold") {
  // deep well: lowest levels bound and strongly localized
  auto w = well(30.0);
  auto s = classify_bound(diagonalize(assembled(w, 2, 20, 1.0), 4), w);
  CHECK(s.localization[0] > 0.9);
  for (int i = 0; i < 4; ++i) {
    CHECK(s.bound_flags[i] == 1);
    CHECK(s.ambiguous_flags[i] == 0);
  }

  // V0 = 0: repulsive atoms in a free box, nothing is bound
  auto z = well(0.0);
  auto sz = classify_bound(diagonalize(assembled(z, 2, 12, 1.0), 6), z);
  for (int i = 0; i < 6; ++i) {
    CHECK(sz.eigenvalues[i] > 0.0);
    CHECK(sz.bound_flags[i] == 0);
    CHECK(sz.ambiguous_flags[i] == 0);
  }

  // two-body ground across its unbinding region
  auto wb = well(1.6);
  auto sb = classify_bound(diagonalize(assembled(wb, 2, 20, 1.0), 2), wb);
  CHECK(sb.bound_flags[0] == 1);
  auto wu = well(0.5);
  auto su = classify_bound(diagonalize(assembled(wu, 2, 20, 1.0), 2), wu);
  CHECK(su.bound_flags[0] == 0);

  // three-body bound excitation switches on between V0 = 6 and V0 = 12
  auto w6 = well(6.0);
  auto s6 = classify_bound(diagonalize(assembled(w6, 3, 20, 1.0), 2), w6);
  CHECK(s6.bound_flags[0] == 1);
  CHECK(s6.bound_flags[1] == 0);
  auto w12 = well(12.0);
  auto s12 = classify_bound(diagonalize(assembled(w12, 3, 20, 1.0), 2), w12);
  CHECK(s12.bound_flags[1] == 1);
}

TEST_CASE("threshold scans: single-particle bias, bracket errors, g-monotone") {
  ThresholdScanOptions o;
  o.M = 20;
  o.xtol = 0.02;
  auto t1 = threshold_scan_diag(1, 0.0, 0.05, 3.0, o);
  CHECK(t1.V0 > 0.05);
  CHECK(t1.V0 < 0.6);  // small positive discretization bias
  CHECK(t1.error >= o.xtol);
  CHECK(t1.V0_loose <= t1.V0_M2 + o.xtol);

  CHECK_THROWS_AS(threshold_scan_diag(1, 0.0, 3.0, 6.0, o), BracketError);
  CHECK_THROWS_AS(threshold_scan_diag(2, 1.0, 0.01, 0.05, o), BracketError);
  CHECK_THROWS_AS(threshold_scan_diag(2, 1.0, 2.0, 1.0, o), std::invalid_argument);

  ThresholdScanOptions of;
  of.M = 16;
  of.xtol = 0.1;
  auto ta = threshold_scan_diag(2, 0.5, 0.1, 6.0, of);
  auto tb = threshold_scan_diag(2, 4.0, 0.1, 6.0, of);
  CHECK(ta.V0 < tb.V0);  // repulsion pushes the threshold deeper
  CHECK(ta.V0 > 0.0);
  CHECK(tb.V0 < tonks_threshold(2, 1.0));
}

TEST_CASE("quartic table cache: roundtrip, key check, transparent wrapper") {
  namespace fs = std::filesystem;
  auto w = well(7.0);
  auto modes = solve_box_states(w, 6);
  auto U = quartic_table(modes);

  fs::path dir = fs::temp_directory_path() / "qwell_qtab_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string file = (dir / "t.json").string();

  save_quartic_table(file, w, 6, U);
  Eigen::MatrixXd back;
  REQUIRE(load_quartic_table(file, w, 6, &back));
  CHECK((back - U).cwiseAbs().maxCoeff() == 0.0);  // exact double roundtrip

  Eigen::MatrixXd scratch;
  CHECK_FALSE(load_quartic_table(file, w.with_depth(7.5), 6, &scratch));
  CHECK_FALSE(load_quartic_table(file, w, 8, &scratch));
  CHECK_FALSE(load_quartic_table((dir / "missing.json").string(), w, 6, &scratch));

  // wrapper computes, stores, then serves the stored copy
  auto c1 = quartic_table_cached(w, modes, dir.string());
  CHECK((c1 - U).cwiseAbs().maxCoeff() == 0.0);
  bool wrote = false;
  for (auto& p : fs::directory_iterator(dir))
    if (p.path().filename().string().rfind("qtab_", 0) == 0) wrote = true;
  CHECK(wrote);
  auto c2 = quartic_table_cached(w, modes, dir.string());
  CHECK((c2 - U).cwiseAbs().maxCoeff() == 0.0);

  // corrupt cache entries are recomputed, not trusted
  for (auto& p : fs::directory_iterator(dir))
    if (p.path().filename().string().rfind("qtab_", 0) == 0) {
      std::ofstream os(p.path());
      os << "{ not json";
    }
  auto c3 = quartic_table_cached(w, modes, dir.string());
  CHECK((c3 - U).cwiseAbs().maxCoeff() == 0.0);
  fs::remove_all(dir);
}

TEST_CASE("level curves serialize to the documented CSV schema") {
  CHECK(levels_csv_header() == "V0,N,level,energy,bound");
  auto w = well(30.0);
  auto s = classify_bound(diagonalize(assembled(w, 2, 12, 1.0), 3), w);
  std::ostringstream os;
  append_levels_csv(os, s);
  std::istringstream is(os.str());
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    double v0, energy;
    int n, level, bound;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%d,%d,%lf,%d", &v0, &n, &level, &energy,
                        &bound) == 5);
    CHECK(v0 == 30.0);
    CHECK(n == 2);
    CHECK(level == rows);
    CHECK(energy == doctest::Approx(s.eigenvalues[rows]).epsilon(1e-10));
    CHECK(bound == 1);
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_SUITE_END();
