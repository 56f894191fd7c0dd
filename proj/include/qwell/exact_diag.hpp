#pragma once
// N repulsive bosons expanded over the box-quantized modes of the well:
// H = sum_j E_j n_j + (g/2) sum U_{j1 j2 j3 j4} a+_{j1} a+_{j2} a_{j3} a_{j4}
// with U the quartic mode overlap. A many-body level counts as bound when its
// energy is negative, its density sits inside the well, and both facts survive
// enlarging the enclosing box (a hard-wall box fakes the continuum, so the
// energy sign alone misclassifies low box modes at shallow depths).
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qwell/model.hpp"
#include "qwell/single_particle.hpp"

namespace qwell {

struct FockState {
  std::vector<int> occupations;  // n_j per mode, sums to N
};

// all C(N+M-1, N) occupation vectors in ascending lexicographic order
struct FockBasis {
  int N = 0, M = 0;
  std::vector<FockState> states;
  std::size_t size() const { return states.size(); }

  // exact lexicographic rank of a valid occupation vector of this basis
  std::size_t index_of(const int* occ) const;
  std::size_t index_of(const std::vector<int>& occ) const { return index_of(occ.data()); }

  // dist_[K*(N+1)+r]: ways to distribute r particles over K modes. Every entry
  // is at most the basis dimension, so the table cannot overflow once the
  // dimension cap has been enforced.
  std::vector<unsigned long long> dist_;
  unsigned long long dist(int K, int r) const { return dist_[std::size_t(K) * (N + 1) + r]; }
};

FockBasis build_basis(int N, int M, std::size_t cap = 200000);

// row index of the unordered mode pair a <= b in the quartic table
inline int pair_index(int a, int b, int M) { return a * M - a * (a + 1) / 2 + b; }

// table(p, q) = integral phi_a phi_b phi_c phi_d over the box with p = (a,b),
// q = (c,d) unordered pairs; entries whose four parities multiply to odd are
// exactly zero. Shared quadrature + one Gram product instead of P^2 integrals.
Eigen::MatrixXd quartic_table(const std::vector<SingleParticleState>& modes);

// JSON round trip of a quartic table keyed by the generating geometry; load
// refuses a file whose (V0, L, D, M) key does not match exactly
void save_quartic_table(const std::string& path, const WellSpec& well, int M,
                        const Eigen::MatrixXd& table);
bool load_quartic_table(const std::string& path, const WellSpec& well, int M,
                        Eigen::MatrixXd* table);
// cache_dir empty: always recompute. Otherwise tables live in
// cache_dir/qtab_<hash>.json and are verified against the key on load.
Eigen::MatrixXd quartic_table_cached(const WellSpec& well,
                                     const std::vector<SingleParticleState>& modes,
                                     const std::string& cache_dir);

// dense storage below this many basis states, lower-triangle sparse above
inline constexpr int kDenseStorageMax = 5000;

struct ManyBodyHamiltonian {
  int dim = 0;
  double g = 0.0;
  WellSpec well;
  FockBasis basis;                         // kept for density/localization work
  std::vector<SingleParticleState> modes;  // the M single-particle modes
  bool dense_storage = true;
  Eigen::MatrixXd H;  // dense storage
  // sparse storage: lower triangle (row >= col) compressed by column
  std::vector<std::size_t> col_ptr;
  std::vector<int> row;
  std::vector<double> val;

  void apply(const double* in, double* out) const;  // out = H * in
  double coeff(int r, int c) const;                 // element access (slow when sparse)
};

// table: reuse a precomputed quartic table (must match the modes); recomputed
// when null. Throws on a mode/basis size mismatch.
ManyBodyHamiltonian build_hamiltonian(const FockBasis& basis,
                                      const std::vector<SingleParticleState>& modes,
                                      double g,
                                      const Eigen::MatrixXd* table = nullptr);

struct ManyBodySpectrum {
  std::vector<double> eigenvalues;    // ascending
  Eigen::MatrixXd eigenvectors;       // dim x k, orthonormal columns
  std::vector<double> residuals;      // ||H v - E v|| per pair
  std::vector<double> localization;   // density weight inside |x| <= L/2, in [0, 1]
  std::vector<char> bound_flags;      // filled by classify_bound
  std::vector<char> ambiguous_flags;  // near-miss levels (see classify_bound)
  struct Meta {
    int N = 0, M = 0;
    double g = 0.0;
    WellSpec well;
  } meta;
};

// k lowest eigenpairs with residual <= 1e-8 each (NonConvergedError beyond).
// Exactly diagonal input short-circuits to the sorted diagonal; dense storage
// below an internal cutoff gets a full dense solve, everything else Lanczos.
ManyBodySpectrum diagonalize(const ManyBodyHamiltonian& H, int k);

struct BoundRule {
  double theta = 0.5;         // weight inside the well that counts as clearly localized
  double box_factor = 1.25;   // stability re-solve scales D (and M, keeping the cutoff) by this
  double e_tol = 0.0;         // energy-drift tolerance; <= 0 means half a box-mode slide
  double w_tol = 0.10;        // relative weight loss allowed for a D-stable level
  double match_penalty = 0.2; // energy units charged per unit localization mismatch
                              // when pairing levels across the two box sizes
};

// flags each level bound / ambiguous. Bound needs E < 0, energy stability under
// the box enlargement, and a weight criterion: either localization > theta, or
// box-stable weight -- long-tailed near-threshold bound states keep their weight
// when D grows while box-filling states lose the factor 1/box_factor of it.
// Ambiguous marks negative-energy levels that pass a loosened version of the
// rule (3x energy drift, theta - 0.1, 1.5x weight loss) but fail the strict one.
ManyBodySpectrum classify_bound(const ManyBodySpectrum& spec, const WellSpec& well,
                                const BoundRule& rule = {});

struct DiagThreshold {
  int N = 0;
  double g = 0.0;
  double V0 = 0.0;     // midpoint of the strict/loose classification band
  double error = 0.0;  // half band + basis sensitivity + bisection resolution
  int M = 0, M2 = 0;
  double V0_M = 0.0, V0_M2 = 0.0;  // strict-rule flip depths at the two basis sizes
  double V0_loose = 0.0;           // loose-rule flip depth (band's low edge)
};

struct ThresholdScanOptions {
  int M = 30;           // working basis size; the error bar re-runs with M + 10
  double xtol = 0.05;   // bisection resolution in V0
  WellSpec geometry{};  // L and D of the scan; the V0 field is ignored
  BoundRule rule{};
};

// smallest depth in [v0_lo, v0_hi] whose N-particle ground level classifies as
// bound, by bisection; BracketError unless the flag differs at the endpoints.
// Reported V0 is the midpoint of the strict- and loose-rule flip depths; the
// error bar adds the half width of that band, the strict-rule shift between M
// and M + 10 modes, and the bisection resolution.
DiagThreshold threshold_scan_diag(int N, double g, double v0_lo, double v0_hi,
                                  const ThresholdScanOptions& opts = {});

// level-curve CSV: one row per level, columns V0,N,level,energy,bound
std::string levels_csv_header();
void append_levels_csv(std::ostream& os, const ManyBodySpectrum& spec);

}  // namespace qwell
