#include "qwell/exact_diag.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qwell/numerics.hpp"

namespace qwell {

// ---- occupation basis --------------------------------------------------------

FockBasis build_basis(int N, int M, std::size_t cap) {
  if (N < 1 || M < 1) throw std::invalid_argument("build_basis: need N >= 1 and M >= 1");
  // dimension gate in floating point, so absurd (N, M) cannot overflow anything
  double fdim = 1.0;
  for (int i = 1; i <= N; ++i) fdim *= double(M - 1 + i) / double(i);
  if (fdim > double(cap)) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "build_basis: C(%d,%d) = %.4g basis states exceeds the cap %zu; "
                  "reduce M or N",
                  N + M - 1, N, fdim, cap);
    throw DimensionCapError(msg);
  }

  FockBasis b;
  b.N = N;
  b.M = M;
  // dist(K, r) = ways to put r particles into K modes = C(r+K-1, K-1); every
  // entry is bounded by dist(M, N) = dim <= cap, so the table cannot overflow
  b.dist_.assign(std::size_t(M + 1) * (N + 1), 0);
  for (int r = 0; r <= N; ++r) b.dist_[r] = (r == 0) ? 1 : 0;
  for (int K = 1; K <= M; ++K) {
    b.dist_[std::size_t(K) * (N + 1)] = 1;
    for (int r = 1; r <= N; ++r)
      b.dist_[std::size_t(K) * (N + 1) + r] =
          b.dist_[std::size_t(K) * (N + 1) + r - 1] +
          b.dist_[std::size_t(K - 1) * (N + 1) + r];
  }

  b.states.reserve(std::size_t(std::llround(fdim)));
  std::vector<int> cur(M, 0);
  cur[M - 1] = N;
  for (;;) {
    b.states.push_back({cur});
    // lexicographic successor: bump the rightmost slot that has mass strictly
    // to its right, then push the leftover mass all the way to the end
    int j = M - 2;
    int after = cur[M - 1];
    while (j >= 0 && after == 0) {
      after += cur[j];
      --j;
    }
    if (j < 0) break;
    cur[j] += 1;
    for (int i = j + 1; i < M; ++i) cur[i] = 0;
    cur[M - 1] = after - 1;
  }
  return b;
}

std::size_t FockBasis::index_of(const int* occ) const {
  // count vectors that branch lower at each occupied slot; the partial sums
  // over a < occ[j] telescope into two distribution counts
  unsigned long long r = 0;
  int rem = N;
  for (int j = 0; j < M && rem > 0; ++j) {
    int nj = occ[j];
    if (!nj) continue;
    int K = M - j;
    r += dist(K, rem) - dist(K, rem - nj);
    rem -= nj;
  }
  return std::size_t(r);
}

// ---- quartic mode-overlap table -----------------------------------------------

Eigen::MatrixXd quartic_table(const std::vector<SingleParticleState>& modes) {
  const int M = int(modes.size());
  if (M < 1) throw std::invalid_argument("quartic_table: no modes");
  auto q = box_quadrature(modes);
  const int nq = int(q.x.size());
  Eigen::MatrixXd phi(nq, M);
  for (int j = 0; j < M; ++j)
    for (int i = 0; i < nq; ++i) phi(i, j) = evaluate_wavefunction(modes[j], q.x[i]);

  const int P = M * (M + 1) / 2;
  Eigen::VectorXd sqw(nq);
  for (int i = 0; i < nq; ++i) sqw[i] = std::sqrt(q.w[i]);
  Eigen::MatrixXd G(nq, P);
  for (int a = 0; a < M; ++a)
    for (int b = a; b < M; ++b)
      G.col(pair_index(a, b, M)) =
          phi.col(a).array() * phi.col(b).array() * sqw.array();

  Eigen::MatrixXd U = G.transpose() * G;
  U = 0.5 * (U + U.transpose()).eval();  // exact symmetry regardless of GEMM order

  // odd total parity integrates to zero; enforce it exactly
  std::vector<int> cls(P);
  for (int a = 0; a < M; ++a)
    for (int b = a; b < M; ++b)
      cls[pair_index(a, b, M)] =
          (modes[a].parity == Parity::Odd) ^ (modes[b].parity == Parity::Odd);
  for (int p = 0; p < P; ++p)
    for (int qq = 0; qq < P; ++qq)
      if (cls[p] != cls[qq]) U(p, qq) = 0.0;
  return U;
}

void save_quartic_table(const std::string& path, const WellSpec& well, int M,
                        const Eigen::MatrixXd& table) {
  const int P = M * (M + 1) / 2;
  if (table.rows() != P || table.cols() != P)
    throw std::invalid_argument("save_quartic_table: table size does not match M");
  nlohmann::json j;
  j["v0"] = well.V0;
  j["l"] = well.L;
  j["d"] = well.D;
  j["m"] = M;
  std::vector<double> upper;
  upper.reserve(std::size_t(P) * (P + 1) / 2);
  for (int p = 0; p < P; ++p)
    for (int q = p; q < P; ++q) upper.push_back(table(p, q));
  j["upper"] = std::move(upper);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_quartic_table: cannot write " + path);
  os << j.dump();
}

bool load_quartic_table(const std::string& path, const WellSpec& well, int M,
                        Eigen::MatrixXd* table) {
  std::ifstream is(path);
  if (!is) return false;
  nlohmann::json j;
  try {
    is >> j;
    if (j.at("m").get<int>() != M) return false;
    if (j.at("v0").get<double>() != well.V0) return false;
    if (j.at("l").get<double>() != well.L) return false;
    if (j.at("d").get<double>() != well.D) return false;
    const int P = M * (M + 1) / 2;
    auto upper = j.at("upper").get<std::vector<double>>();
    if (upper.size() != std::size_t(P) * (P + 1) / 2) return false;
    Eigen::MatrixXd U(P, P);
    std::size_t i = 0;
    for (int p = 0; p < P; ++p)
      for (int q = p; q < P; ++q) {
        U(p, q) = U(q, p) = upper[i];
        ++i;
      }
    *table = std::move(U);
    return true;
  } catch (...) {
    return false;
  }
}

Eigen::MatrixXd quartic_table_cached(const WellSpec& well,
                                     const std::vector<SingleParticleState>& modes,
                                     const std::string& cache_dir) {
  if (cache_dir.empty()) return quartic_table(modes);
  const int M = int(modes.size());
  char key[128];
  std::snprintf(key, sizeof key, "%.17g|%.17g|%.17g|%d", well.V0, well.L, well.D, M);
  char name[64];
  std::snprintf(name, sizeof name, "qtab_%016llx.json",
                (unsigned long long)num::fnv1a(key, std::strlen(key)));
  std::filesystem::create_directories(cache_dir);
  std::string path = cache_dir + "/" + name;
  Eigen::MatrixXd U;
  if (load_quartic_table(path, well, M, &U)) return U;
  U = quartic_table(modes);
  save_quartic_table(path, well, M, U);
  return U;
}

// ---- Hamiltonian assembly ------------------------------------------------------

namespace {

// small sorted (mode, count) list: an occupation vector touched in <= 4 slots.
// The dimension cap keeps distinct occupied modes <= 10, so 16 slots suffice.
struct EditList {
  int j[16];
  int n[16];
  int len = 0;
};

inline void bump(EditList& e, int mode, int d) {
  int i = 0;
  while (i < e.len && e.j[i] < mode) ++i;
  if (i < e.len && e.j[i] == mode) {
    e.n[i] += d;
    return;
  }
  for (int t = e.len; t > i; --t) {
    e.j[t] = e.j[t - 1];
    e.n[t] = e.n[t - 1];
  }
  e.j[i] = mode;
  e.n[i] = d;
  ++e.len;
}

// rank of the occupation vector an EditList describes (entries ascending)
inline std::size_t rank_of(const FockBasis& b, const EditList& e) {
  unsigned long long r = 0;
  int rem = b.N;
  for (int i = 0; i < e.len && rem > 0; ++i) {
    int nj = e.n[i];
    if (nj <= 0) continue;
    int K = b.M - e.j[i];
    r += b.dist(K, rem) - b.dist(K, rem - nj);
    rem -= nj;
  }
  return std::size_t(r);
}

struct PairEnt {
  int a, b, idx;
  double mult;  // 2 - delta_ab: unordered pair standing for both orderings
};

// one thread's share of sparse columns, concatenated in column order later
struct ColChunk {
  std::vector<std::size_t> counts;
  std::vector<int> rows;
  std::vector<double> vals;
};

}  // namespace

ManyBodyHamiltonian build_hamiltonian(const FockBasis& basis,
                                      const std::vector<SingleParticleState>& modes,
                                      double g,
                                      const Eigen::MatrixXd* table) {
  if (int(modes.size()) != basis.M)
    throw std::invalid_argument("build_hamiltonian: mode-basis mismatch (" +
                                std::to_string(modes.size()) + " modes for M = " +
                                std::to_string(basis.M) + ")");
  const int M = basis.M;
  const int dim = int(basis.size());
  const int P = M * (M + 1) / 2;

  ManyBodyHamiltonian h;
  h.dim = dim;
  h.g = g;
  h.well.L = modes[0].L;
  h.well.D = modes[0].D;
  h.well.V0 = 0.5 * modes[0].k * modes[0].k - modes[0].E;
  h.basis = basis;
  h.modes = modes;
  h.dense_storage = dim <= kDenseStorageMax;

  Eigen::MatrixXd local;
  const Eigen::MatrixXd* U = table;
  if (g != 0.0) {
    if (!U) {
      local = quartic_table(modes);
      U = &local;
    } else if (U->rows() != P || U->cols() != P) {
      throw std::invalid_argument("build_hamiltonian: quartic table size does not match M");
    }
  }

  // creator pairs grouped by parity class; only the class matching the
  // annihilated pair contributes (odd total parity integrates to zero)
  std::vector<PairEnt> pairs_by_cls[2];
  for (int a = 0; a < M; ++a)
    for (int b = a; b < M; ++b) {
      int cls = (modes[a].parity == Parity::Odd) ^ (modes[b].parity == Parity::Odd);
      pairs_by_cls[cls].push_back({a, b, pair_index(a, b, M), a == b ? 1.0 : 2.0});
    }

  if (h.dense_storage) h.H = Eigen::MatrixXd::Zero(dim, dim);

  // one column of H per basis state: diagonal mode energies plus every way of
  // moving a particle pair (j3, j4) -> (j1, j2) weighted by the quartic overlap
  auto column = [&](int s, std::vector<double>* scratch, std::vector<int>* touched,
                    ColChunk* chunk) {
    const auto& occ = basis.states[s].occupations;
    EditList base;
    double diag = 0.0;
    for (int j = 0; j < M; ++j)
      if (occ[j]) {
        base.j[base.len] = j;
        base.n[base.len] = occ[j];
        ++base.len;
        diag += occ[j] * modes[j].E;
      }

    auto emit_dense = [&](std::size_t t, double v) { h.H(Eigen::Index(t), s) += v; };
    auto emit_sparse = [&](std::size_t t, double v) {
      if (int(t) < s) return;  // lower triangle only; the mirror comes from column t
      if ((*scratch)[t] == 0.0) touched->push_back(int(t));
      (*scratch)[t] += v;
    };

    if (h.dense_storage)
      emit_dense(std::size_t(s), diag);
    else
      emit_sparse(std::size_t(s), diag);

    if (g != 0.0) {
      for (int ia = 0; ia < base.len; ++ia)
        for (int ib = ia; ib < base.len; ++ib) {
          const int j3 = base.j[ia], j4 = base.j[ib];
          double famp;
          double multq;
          if (ia == ib) {
            if (base.n[ia] < 2) continue;
            famp = std::sqrt(double(base.n[ia]) * (base.n[ia] - 1));
            multq = 1.0;
          } else {
            famp = std::sqrt(double(base.n[ia]) * base.n[ib]);
            multq = 2.0;
          }
          EditList eq = base;
          bump(eq, j3, -1);
          bump(eq, j4, -1);
          const int qidx = pair_index(j3, j4, M);
          const int qcls =
              (modes[j3].parity == Parity::Odd) ^ (modes[j4].parity == Parity::Odd);
          const double wq = 0.5 * g * multq;
          for (const PairEnt& pr : pairs_by_cls[qcls]) {
            const double u = (*U)(pr.idx, qidx);
            if (u == 0.0) continue;
            const int c1 = occ[pr.a] - (pr.a == j3) - (pr.a == j4);
            const int c2 = occ[pr.b] - (pr.b == j3) - (pr.b == j4);
            const double gamp = (pr.a == pr.b)
                                    ? std::sqrt(double(c1 + 1) * (c1 + 2))
                                    : std::sqrt(double(c1 + 1) * (c2 + 1));
            // multq/mult are powers of two, so this product is bit-identical
            // from either side of the matrix element
            const double v = (wq * pr.mult * u) * (famp * gamp);
            EditList ep = eq;
            bump(ep, pr.a, +1);
            bump(ep, pr.b, +1);
            const std::size_t t = rank_of(basis, ep);
            if (h.dense_storage)
              emit_dense(t, v);
            else
              emit_sparse(t, v);
          }
        }
    }

    if (!h.dense_storage) {
      std::sort(touched->begin(), touched->end());
      chunk->counts.push_back(touched->size());
      for (int t : *touched) {
        chunk->rows.push_back(t);
        chunk->vals.push_back((*scratch)[t]);
        (*scratch)[t] = 0.0;
      }
      touched->clear();
    }
  };

  const int nthread = dim >= 512 ? std::min(num::worker_count(), std::max(1, dim / 64)) : 1;
  std::vector<ColChunk> chunks(nthread);
  {
    std::vector<std::thread> pool;
    const int step = (dim + nthread - 1) / nthread;
    for (int t = 0; t < nthread; ++t) {
      const int s0 = t * step, s1 = std::min(dim, s0 + step);
      if (s0 >= s1) continue;
      pool.emplace_back([&, t, s0, s1]() {
        std::vector<double> scratch;
        std::vector<int> touched;
        if (!h.dense_storage) {
          scratch.assign(dim, 0.0);
          touched.reserve(4096);
        }
        for (int s = s0; s < s1; ++s) column(s, &scratch, &touched, &chunks[t]);
      });
    }
    for (auto& th : pool) th.join();
  }

  if (!h.dense_storage) {
    std::size_t nnz = 0;
    for (const auto& c : chunks) nnz += c.rows.size();
    h.col_ptr.assign(std::size_t(dim) + 1, 0);
    h.row.reserve(nnz);
    h.val.reserve(nnz);
    int s = 0;
    for (const auto& c : chunks) {
      std::size_t off = 0;
      for (std::size_t cnt : c.counts) {
        h.col_ptr[std::size_t(s) + 1] = h.col_ptr[s] + cnt;
        ++s;
        off += cnt;
      }
      h.row.insert(h.row.end(), c.rows.begin(), c.rows.end());
      h.val.insert(h.val.end(), c.vals.begin(), c.vals.end());
      (void)off;
    }
  }
  return h;
}

void ManyBodyHamiltonian::apply(const double* in, double* out) const {
  if (dense_storage) {
    Eigen::Map<const Eigen::VectorXd> x(in, dim);
    Eigen::Map<Eigen::VectorXd> y(out, dim);
    y.noalias() = H * x;
    return;
  }
  std::fill(out, out + dim, 0.0);
  for (int s = 0; s < dim; ++s) {
    const double xs = in[s];
    double acc = 0.0;
    for (std::size_t i = col_ptr[s]; i < col_ptr[std::size_t(s) + 1]; ++i) {
      const int t = row[i];
      const double v = val[i];
      out[t] += v * xs;
      if (t != s) acc += v * in[t];
    }
    out[s] += acc;
  }
}

double ManyBodyHamiltonian::coeff(int r, int c) const {
  if (dense_storage) return H(r, c);
  if (r < c) std::swap(r, c);  // stored triangle has row >= col
  for (std::size_t i = col_ptr[c]; i < col_ptr[std::size_t(c) + 1]; ++i)
    if (row[i] == r) return val[i];
  return 0.0;
}

// ---- diagonalization -----------------------------------------------------------

namespace {

// full dense solve below this dimension; Lanczos with dense matvec above
constexpr int kDenseSolveMax = 1200;

bool exactly_diagonal(const ManyBodyHamiltonian& h) {
  if (h.dense_storage) {
    for (int c = 0; c < h.dim; ++c)
      for (int r = 0; r < h.dim; ++r)
        if (r != c && h.H(r, c) != 0.0) return false;
    return true;
  }
  for (int s = 0; s < h.dim; ++s)
    for (std::size_t i = h.col_ptr[s]; i < h.col_ptr[std::size_t(s) + 1]; ++i)
      if (h.row[i] != s && h.val[i] != 0.0) return false;
  return true;
}

// sin(d h)/d, safe through d -> 0
double sinc_half(double d, double h) {
  const double z = d * h;
  if (std::abs(z) < 1e-6) return h * (1.0 - z * z / 6.0);
  return std::sin(z) / d;
}

// overlaps of the trigonometric mode interiors over |x| <= L/2
Eigen::MatrixXd well_overlaps(const std::vector<SingleParticleState>& modes) {
  const int M = int(modes.size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(M, M);
  const double h = 0.5 * modes[0].L;
  for (int a = 0; a < M; ++a)
    for (int b = a; b < M; ++b) {
      if (modes[a].parity != modes[b].parity) continue;
      const double dm = sinc_half(modes[a].k - modes[b].k, h);
      const double dp = sinc_half(modes[a].k + modes[b].k, h);
      const double v = (modes[a].parity == Parity::Even) ? dm + dp : dm - dp;
      S(a, b) = S(b, a) = modes[a].A_in * modes[b].A_in * v;
    }
  return S;
}

// density weight of one eigenvector inside |x| <= L/2, from the one-body
// density matrix <a+_j a_j'> contracted with the interior overlaps
double localization_of(const ManyBodyHamiltonian& h, const Eigen::MatrixXd& S,
                       const Eigen::VectorXd& c) {
  const FockBasis& basis = h.basis;
  const int M = basis.M;
  double w = 0.0;
  for (int s = 0; s < h.dim; ++s) {
    const double cs = c[s];
    if (cs == 0.0) continue;
    const auto& occ = basis.states[std::size_t(s)].occupations;
    EditList base;
    for (int j = 0; j < M; ++j)
      if (occ[j]) {
        base.j[base.len] = j;
        base.n[base.len] = occ[j];
        ++base.len;
      }
    for (int i = 0; i < base.len; ++i) {
      const int jp = base.j[i];
      EditList e1 = base;
      bump(e1, jp, -1);
      for (int j = 0; j < M; ++j) {
        if (h.modes[j].parity != h.modes[jp].parity) continue;  // S vanishes
        const double amp = (j == jp)
                               ? double(occ[jp])
                               : std::sqrt(double(occ[jp]) * (occ[j] + 1));
        EditList e2 = e1;
        bump(e2, j, +1);
        const std::size_t t = rank_of(basis, e2);
        w += cs * c[Eigen::Index(t)] * amp * S(j, jp);
      }
    }
  }
  w /= double(basis.N);
  return std::clamp(w, 0.0, 1.0);
}

}  // namespace

ManyBodySpectrum diagonalize(const ManyBodyHamiltonian& h, int k) {
  if (h.dim < 1) throw std::invalid_argument("diagonalize: empty Hamiltonian");
  k = std::clamp(k, 1, h.dim);

  ManyBodySpectrum out;
  out.meta.N = h.basis.N;
  out.meta.M = h.basis.M;
  out.meta.g = h.g;
  out.meta.well = h.well;

  if (exactly_diagonal(h)) {
    // sorted diagonal, bit-for-bit; covers g = 0 and the single-particle case
    std::vector<double> d(h.dim);
    for (int i = 0; i < h.dim; ++i) d[i] = h.coeff(i, i);
    std::vector<int> ord(h.dim);
    for (int i = 0; i < h.dim; ++i) ord[i] = i;
    std::stable_sort(ord.begin(), ord.end(),
                     [&](int a, int b) { return d[a] < d[b]; });
    out.eigenvalues.resize(k);
    out.eigenvectors = Eigen::MatrixXd::Zero(h.dim, k);
    out.residuals.assign(k, 0.0);
    for (int i = 0; i < k; ++i) {
      out.eigenvalues[i] = d[ord[i]];
      out.eigenvectors(ord[i], i) = 1.0;
    }
  } else if (h.dense_storage && (h.dim <= kDenseSolveMax || k > 64)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.H);
    out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + k);
    out.eigenvectors = es.eigenvectors().leftCols(k);
    out.residuals.resize(k);
    Eigen::VectorXd r(h.dim);
    for (int i = 0; i < k; ++i) {
      h.apply(out.eigenvectors.col(i).data(), r.data());
      out.residuals[i] = (r - out.eigenvalues[i] * out.eigenvectors.col(i)).norm();
    }
  } else {
    auto apply = [&h](const double* in, double* o) { h.apply(in, o); };
    num::LanczosResult lr = num::lanczos_lowest(apply, h.dim, k, 1e-9, 800, 20240817ull);
    double worst = lr.residuals.empty() ? 1.0
                                        : *std::max_element(lr.residuals.begin(),
                                                            lr.residuals.end());
    if (!lr.converged || worst > 1e-8) {
      lr = num::lanczos_lowest(apply, h.dim, k, 1e-9, 2000, 20240817ull);
      worst = lr.residuals.empty() ? 1.0
                                   : *std::max_element(lr.residuals.begin(),
                                                       lr.residuals.end());
      if (!lr.converged || worst > 1e-8)
        throw NonConvergedError("diagonalize: iterative eigensolver stalled", worst);
    }
    out.eigenvalues = lr.values;
    out.eigenvectors = lr.vectors;
    out.residuals = lr.residuals;
  }

  // localization only when the Hamiltonian carries a consistent basis (always
  // true out of build_hamiltonian; hand-assembled matrices skip it)
  if (int(h.basis.size()) == h.dim && int(h.modes.size()) == h.basis.M && h.basis.M > 0) {
    Eigen::MatrixXd S = well_overlaps(h.modes);
    out.localization.resize(k);
    for (int i = 0; i < k; ++i)
      out.localization[i] = localization_of(h, S, out.eigenvectors.col(i));
  }
  return out;
}

// ---- bound classification ------------------------------------------------------

ManyBodySpectrum classify_bound(const ManyBodySpectrum& spec, const WellSpec& well,
                                const BoundRule& rule) {
  const int k = int(spec.eigenvalues.size());
  if (k == 0 || spec.localization.empty())
    throw std::invalid_argument("classify_bound: spectrum lacks levels or localization");

  // re-solve in the enlarged box with the mode count scaled alongside D so the
  // basis cutoff k_max = M*pi/D is preserved: genuinely bound levels then keep
  // their energy while discretized continuum levels slide down with the wall
  const double f = rule.box_factor;
  WellSpec big = well.with_box(f * well.D);
  const int M2 = int(std::lround(f * spec.meta.M));
  auto modes2 = solve_box_states(big, M2);
  auto basis2 = build_basis(spec.meta.N, M2);
  auto h2 = build_hamiltonian(basis2, modes2, spec.meta.g);
  const int k2 = std::min(k + std::max(4, k / 2), h2.dim);
  ManyBodySpectrum big_spec = diagonalize(h2, k2);

  // a box-discretized level slides by this much when the wall moves; bound
  // levels must hold still on a fraction of that scale
  const double pi = 3.14159265358979323846;
  const double box_slide =
      0.5 * pi * pi / (well.D * well.D) * (1.0 - 1.0 / (f * f));
  const double e_tol = rule.e_tol > 0.0 ? rule.e_tol : 0.5 * box_slide;

  ManyBodySpectrum out = spec;
  out.bound_flags.assign(k, 0);
  out.ambiguous_flags.assign(k, 0);
  for (int i = 0; i < k; ++i) {
    const double E = spec.eigenvalues[i];
    const double loc = spec.localization[i];
    // pair with the level that continues this one across the box change:
    // closest in energy with the localization mismatch charged on top, so an
    // accidental near-degenerate intruder of different character is skipped
    int jbest = 0;
    double best = 1e300;
    for (int j = 0; j < int(big_spec.eigenvalues.size()); ++j) {
      const double s = std::abs(big_spec.eigenvalues[j] - E) +
                       rule.match_penalty * std::abs(big_spec.localization[j] - loc);
      if (s < best) {
        best = s;
        jbest = j;
      }
    }
    const double dE = std::abs(big_spec.eigenvalues[jbest] - E);
    const double drop = loc > 0.0 ? (loc - big_spec.localization[jbest]) / loc : 1.0;
    // weight criterion: clearly localized, or weight unaffected by the wall --
    // near-threshold bound states have long tails yet keep their weight, while
    // box-filling states lose the fraction 1 - 1/f of it
    const bool weight_ok = loc > rule.theta || drop < rule.w_tol;
    const bool weight_loose = loc > rule.theta - 0.1 || drop < 1.5 * rule.w_tol;
    const bool strict = E < 0.0 && dE < e_tol && weight_ok;
    const bool loose = E < 0.0 && dE < 3.0 * e_tol && weight_loose;
    out.bound_flags[i] = strict ? 1 : 0;
    out.ambiguous_flags[i] = (loose && !strict) ? 1 : 0;
  }
  return out;
}

// ---- threshold location --------------------------------------------------------

DiagThreshold threshold_scan_diag(int N, double g, double v0_lo, double v0_hi,
                                  const ThresholdScanOptions& opts) {
  if (!(v0_lo >= 0.0) || !(v0_lo < v0_hi))
    throw std::invalid_argument("threshold_scan_diag: need 0 <= v0_lo < v0_hi");
  if (opts.M < 1) throw std::invalid_argument("threshold_scan_diag: M >= 1");

  // loose = true counts ambiguous levels as bound; the gap between the two
  // flip depths is the classification's own systematic band
  auto bound_at = [&](double v0, int M, bool loose) {
    WellSpec w = opts.geometry.with_depth(v0);
    auto modes = solve_box_states(w, M);
    auto basis = build_basis(N, M);
    auto h = build_hamiltonian(basis, modes, g);
    ManyBodySpectrum s = diagonalize(h, std::min(2, h.dim));
    s = classify_bound(s, w, opts.rule);
    return s.bound_flags[0] != 0 || (loose && s.ambiguous_flags[0] != 0);
  };

  auto locate = [&](int M, bool loose) {
    if (bound_at(v0_lo, M, loose))
      throw BracketError("threshold_scan_diag: already bound at the lower edge",
                         v0_lo, v0_hi);
    if (!bound_at(v0_hi, M, loose))
      throw BracketError("threshold_scan_diag: still unbound at the upper edge",
                         v0_lo, v0_hi);
    double a = v0_lo, b = v0_hi;
    while (b - a > opts.xtol) {
      const double m = 0.5 * (a + b);
      (bound_at(m, M, loose) ? b : a) = m;
    }
    return 0.5 * (a + b);
  };

  DiagThreshold t;
  t.N = N;
  t.g = g;
  t.M = opts.M;
  t.M2 = opts.M + 10;
  t.V0_M = locate(t.M, false);
  t.V0_M2 = locate(t.M2, false);
  t.V0_loose = locate(t.M, true);
  const double lo = std::min(t.V0_loose, t.V0_M2);
  const double hi = std::max(t.V0_loose, t.V0_M2);
  t.V0 = 0.5 * (lo + hi);
  t.error = 0.5 * (hi - lo) + std::abs(t.V0_M - t.V0_M2) + opts.xtol;
  return t;
}

// ---- CSV -----------------------------------------------------------------------

std::string levels_csv_header() { return "V0,N,level,energy,bound"; }

void append_levels_csv(std::ostream& os, const ManyBodySpectrum& spec) {
  char buf[160];
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i) {
    const int b = (i < spec.bound_flags.size() && spec.bound_flags[i]) ? 1 : 0;
    std::snprintf(buf, sizeof buf, "%.12g,%d,%zu,%.12g,%d\n", spec.meta.well.V0,
                  spec.meta.N, i, spec.eigenvalues[i], b);
    os << buf;
  }
}

}  // namespace qwell
