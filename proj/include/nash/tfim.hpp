#pragma once

// Periodic transverse-field Ising ring H = -sum Z_i Z_{i+1} - g sum X_i:
// free-fermion thermodynamics, the star decomposition and ED cross-checks.

#include <nash/nash_conditions.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace nash::tfim {

struct TFIMSpec {
  int n_sites = 2;
  double g = 1.0;
  double beta = 0.0;
};

inline constexpr int kMaxFreeFermionSites = 24;

inline void validate(const TFIMSpec& s) {
  if (s.n_sites < 2 || s.n_sites > kMaxFreeFermionSites) throw std::invalid_argument("tfim: n_sites must lie in [2, 24]");
  if (!(s.g >= 0.0) || !std::isfinite(s.g)) throw std::invalid_argument("tfim: g must be non-negative");
  if (!(s.beta >= 0.0) || !std::isfinite(s.beta)) throw std::invalid_argument("tfim: beta must be non-negative");
}

struct MomentumSectors {
  std::vector<double> k_plus;
  std::vector<double> k_minus;
  int eta_plus = 1;
  int eta_minus = 1;
};

/// K+ (even fermion parity): odd multiples of pi/N, plus pi for odd N.
/// K- (odd parity): even multiples of pi/N, including 0, plus pi for even N.
/// eta_sigma = 1 for g < 1 and sigma for g >= 1.
inline MomentumSectors momentum_sectors(const TFIMSpec& spec) {
  validate(spec);
  const int n = spec.n_sites;
  const double pi = std::numbers::pi;
  MomentumSectors m;
  for (int j = -n + 1; j <= n; ++j) {
    // k = j pi / N for j in (-N, N]; odd j -> K+, even j -> K-.
    const double k = pi * j / n;
    (j % 2 != 0 ? m.k_plus : m.k_minus).push_back(k);
  }
  m.eta_plus = 1;
  m.eta_minus = spec.g < 1.0 ? 1 : -1;
  return m;
}

inline double mode_energy(double k, double g) { return std::sqrt(1.0 + g * g - 2.0 * g * std::cos(k)); }

/// Bogoliubov angle with sin = sin k / eps, cos = (g - cos k) / eps; the
/// unpaired k = 0 mode gets 0 for g > 1 and pi for g < 1.
inline double bogoliubov_angle(double k, double g) { return std::atan2(std::sin(k), g - std::cos(k)); }

struct ModeData {
  double k = 0.0;
  double epsilon = 0.0;
  double theta = 0.0;
  double occ = 0.0;  ///< <gamma_k^dag gamma_k> conditioned on the mode's parity sector
  double vac = 1.0;  ///< <gamma_k gamma_k^dag> conditioned on the mode's parity sector
  int sector = 1;    ///< +1 for K+, -1 for K-
};

namespace detail {

inline double logaddexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log of the even/odd parts of prod_k (1 + a_k) given log a_k.
inline std::array<double, 2> log_parity_sums(const std::vector<double>& log_a, std::size_t skip = static_cast<std::size_t>(-1)) {
  double le = 0.0, lo = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < log_a.size(); ++i) {
    if (i == skip) continue;
    const double ne = logaddexp(le, log_a[i] + lo);
    const double no = logaddexp(lo, log_a[i] + le);
    le = ne;
    lo = no;
  }
  return {le, lo};
}

struct SectorData {
  std::vector<double> k, eps, log_a;
  int eta = 1;
  double log_z = 0.0;  ///< log Z_sigma
};

// Z_sigma = e^{beta sum eps} (1/2)[prod(1 + a) + eta prod(1 - a)], a = e^{-2 beta eps},
// and (1/2)[prod(1 + a) +- prod(1 - a)] are the even/odd elementary sums.
inline SectorData sector(const std::vector<double>& ks, int eta, const TFIMSpec& spec) {
  SectorData s;
  s.k = ks;
  s.eta = eta;
  double sum_eps = 0.0;
  for (double k : ks) {
    const double e = mode_energy(k, spec.g);
    s.eps.push_back(e);
    s.log_a.push_back(-2.0 * spec.beta * e);
    sum_eps += e;
  }
  const auto lp = log_parity_sums(s.log_a);
  s.log_z = spec.beta * sum_eps + (eta == 1 ? lp[0] : lp[1]);
  return s;
}

inline std::array<SectorData, 2> sectors(const TFIMSpec& spec) {
  const auto m = momentum_sectors(spec);
  return {sector(m.k_plus, m.eta_plus, spec), sector(m.k_minus, m.eta_minus, spec)};
}

}  // namespace detail

/// log Z(beta), accumulated in the log domain.
inline double log_partition_function(const TFIMSpec& spec) {
  const auto s = detail::sectors(spec);
  return detail::logaddexp(s[0].log_z, s[1].log_z);
}

/// Z(beta); overflows to infinity for very large beta N (use the log form).
inline double partition_function(const TFIMSpec& spec) { return std::exp(log_partition_function(spec)); }

/// Probability weights (w_+, w_-) of the two parity sectors.
inline std::array<double, 2> sector_weights(const TFIMSpec& spec) {
  const auto s = detail::sectors(spec);
  const double lz = detail::logaddexp(s[0].log_z, s[1].log_z);
  return {std::exp(s[0].log_z - lz), std::exp(s[1].log_z - lz)};
}

/// Mode data for K+ followed by K-. occ and vac are conditional on the
/// sector, so occ + vac = 1; multiply by sector_weights for unconditional
/// averages.
inline std::vector<ModeData> mode_occupations(const TFIMSpec& spec) {
  const auto secs = detail::sectors(spec);
  std::vector<ModeData> out;
  for (std::size_t si = 0; si < 2; ++si) {
    const auto& s = secs[si];
    const auto all = detail::log_parity_sums(s.log_a);
    const double l_total = s.eta == 1 ? all[0] : all[1];
    for (std::size_t i = 0; i < s.k.size(); ++i) {
      const auto rest = detail::log_parity_sums(s.log_a, i);
      // occupied k leaves the other parity for the remaining modes
      const double l_occ = s.log_a[i] + (s.eta == 1 ? rest[1] : rest[0]);
      ModeData md;
      md.k = s.k[i];
      md.epsilon = s.eps[i];
      md.theta = bogoliubov_angle(s.k[i], spec.g);
      md.occ = std::exp(l_occ - l_total);
      md.vac = 1.0 - md.occ;
      md.sector = si == 0 ? 1 : -1;
      out.push_back(md);
    }
  }
  return out;
}

struct Correlators {
  double x_avg = 0.0;
  double zz_avg = 0.0;
};

/// <X_i> and <Z_i Z_{i+1}> at inverse temperature beta from the mode sums
///   <x>  = sum_sigma w_sigma (1/N) sum_k cos(theta_k) (vac_k - occ_k),
///   <zz> = -sum_sigma w_sigma (1/N) sum_k cos(k + theta_k) (vac_k - occ_k).
inline Correlators correlators(const TFIMSpec& spec) {
  const auto modes = mode_occupations(spec);
  const auto w = sector_weights(spec);
  const double n = spec.n_sites;
  std::array<double, 2> x{0.0, 0.0}, zz{0.0, 0.0};
  for (const auto& m : modes) {
    const std::size_t si = m.sector == 1 ? 0 : 1;
    const double d = m.vac - m.occ;
    x[si] += std::cos(m.theta) * d / n;
    zz[si] -= std::cos(m.k + m.theta) * d / n;
  }
  return {w[0] * x[0] + w[1] * x[1], w[0] * zz[0] + w[1] * zz[1]};
}

/// diag(4 zz, 4 zz + 4 g x, 4 g x), the single-site bilinear form in the
/// basis (iX, iY, iZ).
inline Eigen::Matrix3d thermal_hessian(const TFIMSpec& spec) {
  const auto c = correlators(spec);
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  h(0, 0) = 4.0 * c.zz_avg;
  h(1, 1) = 4.0 * c.zz_avg + 4.0 * spec.g * c.x_avg;
  h(2, 2) = 4.0 * spec.g * c.x_avg;
  return h;
}

/// Lowest free-fermion energy over both parity sectors.
inline double ground_energy(const TFIMSpec& spec) {
  const auto secs = detail::sectors(spec);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : secs) {
    double e = 0.0;
    for (double x : s.eps) e -= x;
    if (s.eta == -1) e += 2.0 * *std::min_element(s.eps.begin(), s.eps.end());
    best = std::min(best, e);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Dense operators

inline void require_dense(const TFIMSpec& spec) {
  validate(spec);
  if (spec.n_sites > kMaxDenseQubits) throw std::invalid_argument("tfim: N too large for dense operators");
}

/// Interaction graph of the ring; for N = 2 the two bonds merge into -2 ZZ.
inline InteractionGraph ring_graph(const TFIMSpec& spec) {
  require_dense(spec);
  const int n = spec.n_sites;
  InteractionGraph graph(n);
  const auto zz = kron(pauli(Pauli::Z), pauli(Pauli::Z));
  if (n == 2) {
    graph.add_edge(0, 1, -2.0 * zz);
  } else {
    for (int i = 0; i < n; ++i) graph.add_edge(i, (i + 1) % n, -1.0 * zz);
  }
  for (int i = 0; i < n; ++i) graph.set_onsite(i, -spec.g * pauli(Pauli::X));
  return graph;
}

inline DenseOperator hamiltonian(const TFIMSpec& spec) { return ring_graph(spec).hamiltonian(); }

/// h_i = -(1/2) Z_i (Z_{i-1} + Z_{i+1}) - w g X_i on single-qubit blocks with
/// generators (iX, iY, iZ). With onsite_weight 1 the terms sum to H.
inline NashInstance star_instance(const TFIMSpec& spec, double onsite_weight = 1.0) {
  return NashInstance::single_qubit_su2(spec.n_sites, star_hamiltonians(ring_graph(spec), onsite_weight));
}

/// ([h_i, X_i], [h_i, Y_i], [h_i, Z_i]), checked against
/// (-i Y_i S, -2ig Z_i + i X_i S, 2ig Y_i) with S = Z_{i-1} + Z_{i+1}.
inline std::array<DenseOperator, 3> commutator_table(const TFIMSpec& spec, int site) {
  require_dense(spec);
  const int n = spec.n_sites;
  if (site < 0 || site >= n) throw std::out_of_range("commutator_table: site out of range");
  const auto inst = star_instance(spec);
  const DenseOperator& h = inst.observable(static_cast<std::size_t>(site));
  auto op = [&](Pauli p, int q) { return embed(pauli(p), {q}, n).matrix(); };
  const CMatrix s = op(Pauli::Z, (site + n - 1) % n) + op(Pauli::Z, (site + 1) % n);
  const CMatrix xi = op(Pauli::X, site), yi = op(Pauli::Y, site), zi = op(Pauli::Z, site);
  std::array<DenseOperator, 3> out{commutator(h, DenseOperator::hermitian(xi)), commutator(h, DenseOperator::hermitian(yi)),
                                   commutator(h, DenseOperator::hermitian(zi))};
  const std::array<CMatrix, 3> closed{CMatrix(-kI * yi * s), CMatrix(-2.0 * kI * spec.g * zi + kI * xi * s),
                                      CMatrix(2.0 * kI * spec.g * yi)};
  for (std::size_t a = 0; a < 3; ++a) {
    if ((out[a].matrix() - closed[a]).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::logic_error("commutator_table: closed form mismatch");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact diagonalization

/// Full spectrum of the ring with per-eigenstate <X_0> and <Z_0 Z_1>.
/// Thermal sums over complete degenerate levels are basis independent.
class ExactSolution {
 public:
  ExactSolution(int n_sites, double g) : spec_{n_sites, g, 0.0} {
    require_dense(spec_);
    spectrum_ = diagonalize(hamiltonian(spec_));
    const Eigen::Index d = spectrum_.size();
    const int n = n_sites;
    const Eigen::Index top = Eigen::Index{1} << (n - 1);
    const Eigen::Index second = Eigen::Index{1} << (n - 2);
    x0_.resize(d);
    zz01_.resize(d);
    RVector zz_diag(d);
    for (Eigen::Index r = 0; r < d; ++r) zz_diag(r) = ((r & top) != 0) == ((r & second) != 0) ? 1.0 : -1.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const auto v = spectrum_.eigenvectors.col(k);
      cplx xs = 0.0;
      for (Eigen::Index r = 0; r < d; ++r) xs += std::conj(v(r)) * v(r ^ top);
      x0_(k) = xs.real();
      zz01_(k) = (v.cwiseAbs2().array() * zz_diag.array()).sum();
    }
  }

  [[nodiscard]] const Spectrum& spectrum() const { return spectrum_; }
  [[nodiscard]] double ground_energy() const { return spectrum_.eigenvalues(0); }
  [[nodiscard]] const RVector& x_expectations() const { return x0_; }
  [[nodiscard]] const RVector& zz_expectations() const { return zz01_; }

  /// Boltzmann weights e^{-beta (E_n - E_0)} normalized to sum 1.
  [[nodiscard]] RVector gibbs_weights(double beta) const {
    RVector w = (-beta * (spectrum_.eigenvalues.array() - spectrum_.eigenvalues(0))).exp();
    return w / w.sum();
  }

  [[nodiscard]] double log_partition_function(double beta) const {
    const RVector w = (-beta * (spectrum_.eigenvalues.array() - spectrum_.eigenvalues(0))).exp();
    return -beta * spectrum_.eigenvalues(0) + std::log(w.sum());
  }

  [[nodiscard]] Correlators correlators(double beta) const {
    const RVector w = gibbs_weights(beta);
    return {w.dot(x0_), w.dot(zz01_)};
  }

  /// Gibbs density matrix e^{-beta H} / Z.
  [[nodiscard]] DensityMatrix gibbs_state(double beta) const {
    return DensityMatrix::from_spectrum(spectrum_.eigenvectors, gibbs_weights(beta));
  }

 private:
  TFIMSpec spec_;
  Spectrum spectrum_;
  RVector x0_, zz01_;
};

}  // namespace nash::tfim
