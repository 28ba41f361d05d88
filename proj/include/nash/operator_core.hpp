#pragma once

// Dense operator algebra on n-qubit Hilbert spaces.
//
// Conventions: qubit 0 is the most significant tensor factor, so the basis
// ket |b_0 b_1 ... b_{n-1}> has index sum_j b_j 2^{n-1-j}.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nash {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

/// Largest qubit count for which dense operators are built.
inline constexpr int kMaxDenseQubits = 12;

enum class HermitianTag { hermitian, anti_hermitian, general };

namespace detail {

inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_power_of_two(Eigen::Index d) { return d > 0 && (d & (d - 1)) == 0; }

inline int log2_exact(Eigen::Index d) {
  int n = 0;
  while ((Eigen::Index{1} << n) < d) ++n;
  return n;
}

// Hermiticity checks are relative to the matrix scale so that large
// Hamiltonians assembled from many terms still pass.
inline double hermitian_defect(const CMatrix& m, double sign) {
  return max_abs(m - sign * m.adjoint());
}

inline double tag_tolerance(const CMatrix& m) { return 1e-12 * std::max(1.0, max_abs(m)); }

}  // namespace detail

/// A d x d complex matrix carrying a Hermiticity tag. A hermitian or
/// anti_hermitian tag is verified on construction and the stored entries are
/// projected onto the tagged subspace exactly.
class DenseOperator {
 public:
  DenseOperator() = default;

  explicit DenseOperator(CMatrix entries, HermitianTag tag = HermitianTag::general)
      : entries_(std::move(entries)), tag_(tag) {
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
      throw std::invalid_argument("DenseOperator: matrix must be square and non-empty");
    }
    if (tag_ == HermitianTag::hermitian) {
      if (detail::hermitian_defect(entries_, 1.0) > detail::tag_tolerance(entries_)) {
        throw std::invalid_argument("DenseOperator: matrix is not Hermitian");
      }
      entries_ = (0.5 * (entries_ + entries_.adjoint())).eval();
    } else if (tag_ == HermitianTag::anti_hermitian) {
      if (detail::hermitian_defect(entries_, -1.0) > detail::tag_tolerance(entries_)) {
        throw std::invalid_argument("DenseOperator: matrix is not anti-Hermitian");
      }
      entries_ = (0.5 * (entries_ - entries_.adjoint())).eval();
    }
  }

  static DenseOperator hermitian(CMatrix m) { return DenseOperator(std::move(m), HermitianTag::hermitian); }
  static DenseOperator anti_hermitian(CMatrix m) {
    return DenseOperator(std::move(m), HermitianTag::anti_hermitian);
  }
  static DenseOperator identity(Eigen::Index d) {
    return DenseOperator(CMatrix::Identity(d, d), HermitianTag::hermitian);
  }
  static DenseOperator zero(Eigen::Index d) {
    return DenseOperator(CMatrix::Zero(d, d), HermitianTag::hermitian);
  }

  [[nodiscard]] Eigen::Index dim() const { return entries_.rows(); }
  [[nodiscard]] const CMatrix& matrix() const { return entries_; }
  [[nodiscard]] HermitianTag tag() const { return tag_; }
  [[nodiscard]] bool is_hermitian() const { return tag_ == HermitianTag::hermitian; }
  [[nodiscard]] bool is_anti_hermitian() const { return tag_ == HermitianTag::anti_hermitian; }

  /// Re-derives the tag from the entries.
  [[nodiscard]] HermitianTag detect_tag() const {
    if (detail::hermitian_defect(entries_, 1.0) <= detail::tag_tolerance(entries_)) return HermitianTag::hermitian;
    if (detail::hermitian_defect(entries_, -1.0) <= detail::tag_tolerance(entries_)) return HermitianTag::anti_hermitian;
    return HermitianTag::general;
  }

  [[nodiscard]] bool is_real() const { return entries_.imag().cwiseAbs().maxCoeff() == 0.0; }

  [[nodiscard]] DenseOperator adjoint() const {
    return DenseOperator(entries_.adjoint(), tag_);
  }

  [[nodiscard]] double max_abs_diff(const DenseOperator& other) const {
    if (other.dim() != dim()) throw std::invalid_argument("DenseOperator: dimension mismatch");
    return detail::max_abs(entries_ - other.entries_);
  }

  friend DenseOperator operator+(const DenseOperator& a, const DenseOperator& b) {
    require_same_dim(a, b);
    return DenseOperator(a.entries_ + b.entries_, a.tag_ == b.tag_ ? a.tag_ : HermitianTag::general);
  }
  friend DenseOperator operator-(const DenseOperator& a, const DenseOperator& b) {
    require_same_dim(a, b);
    return DenseOperator(a.entries_ - b.entries_, a.tag_ == b.tag_ ? a.tag_ : HermitianTag::general);
  }
  friend DenseOperator operator*(const DenseOperator& a, const DenseOperator& b) {
    require_same_dim(a, b);
    return DenseOperator(a.entries_ * b.entries_);
  }
  friend DenseOperator operator*(double s, const DenseOperator& a) {
    return DenseOperator(s * a.entries_, a.tag_);
  }
  friend DenseOperator operator*(cplx s, const DenseOperator& a) {
    HermitianTag tag = HermitianTag::general;
    if (s.imag() == 0.0) {
      tag = a.tag_;
    } else if (s.real() == 0.0 && a.tag_ != HermitianTag::general) {
      tag = a.tag_ == HermitianTag::hermitian ? HermitianTag::anti_hermitian : HermitianTag::hermitian;
    }
    return DenseOperator(s * a.entries_, tag);
  }
  DenseOperator& operator+=(const DenseOperator& b) { return *this = *this + b; }

 private:
  static void require_same_dim(const DenseOperator& a, const DenseOperator& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("DenseOperator: dimension mismatch");
  }

  CMatrix entries_;
  HermitianTag tag_ = HermitianTag::general;
};

/// Normalized pure state.
class StateVector {
 public:
  StateVector() = default;

  explicit StateVector(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() == 0) throw std::invalid_argument("StateVector: empty amplitude vector");
    if (std::abs(amplitudes_.norm() - 1.0) > 1e-12) {
      throw std::invalid_argument("StateVector: amplitudes are not unit norm");
    }
  }

  /// Rescales a non-zero vector to unit norm.
  static StateVector normalized(const CVector& v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("StateVector: cannot normalize zero vector");
    return StateVector(v / n);
  }

  static StateVector basis(Eigen::Index d, Eigen::Index index) {
    if (index < 0 || index >= d) throw std::out_of_range("StateVector: basis index out of range");
    CVector v = CVector::Zero(d);
    v(index) = 1.0;
    return StateVector(std::move(v));
  }

  [[nodiscard]] Eigen::Index dim() const { return amplitudes_.size(); }
  [[nodiscard]] const CVector& amplitudes() const { return amplitudes_; }

 private:
  CVector amplitudes_;
};

/// Trace-one positive semidefinite Hermitian matrix.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  explicit DensityMatrix(CMatrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
      throw std::invalid_argument("DensityMatrix: matrix must be square and non-empty");
    }
    if (detail::hermitian_defect(entries_, 1.0) > 1e-12) {
      throw std::invalid_argument("DensityMatrix: matrix is not Hermitian");
    }
    entries_ = (0.5 * (entries_ + entries_.adjoint())).eval();
    if (std::abs(entries_.trace() - cplx(1.0)) > 1e-12) {
      throw std::invalid_argument("DensityMatrix: trace is not one");
    }
    // min eigenvalue >= -1e-10 iff rho + 1e-10 is positive definite (up to
    // rounding at the boundary).
    const Eigen::Index d = entries_.rows();
    Eigen::LLT<CMatrix> llt(entries_ + 1e-10 * CMatrix::Identity(d, d));
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("DensityMatrix: matrix has a negative eigenvalue below -1e-10");
    }
  }

  static DensityMatrix maximally_mixed(Eigen::Index d) {
    return DensityMatrix(CMatrix::Identity(d, d) / static_cast<double>(d));
  }

  static DensityMatrix pure(const StateVector& psi) {
    return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
  }

  /// rho = sum_k w_k |v_k><v_k| / sum_k w_k for orthonormal columns v_k.
  static DensityMatrix from_spectrum(const CMatrix& vectors, const RVector& weights) {
    if (vectors.cols() != weights.size()) throw std::invalid_argument("DensityMatrix: weight count mismatch");
    if ((weights.array() < 0.0).any()) throw std::invalid_argument("DensityMatrix: negative spectral weight");
    const double total = weights.sum();
    if (!(total > 0.0)) throw std::invalid_argument("DensityMatrix: zero total weight");
    const CMatrix scaled = vectors * (weights.array() / total).sqrt().matrix().asDiagonal();
    CMatrix rho = scaled * scaled.adjoint();
    rho /= rho.trace().real();
    return DensityMatrix(std::move(rho));
  }

  [[nodiscard]] Eigen::Index dim() const { return entries_.rows(); }
  [[nodiscard]] const CMatrix& matrix() const { return entries_; }

 private:
  CMatrix entries_;
};

// ---------------------------------------------------------------------------
// Pauli algebra

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline CMatrix pauli_matrix(Pauli p) {
  CMatrix m(2, 2);
  switch (p) {
    case Pauli::I: m << 1, 0, 0, 1; break;
    case Pauli::X: m << 0, 1, 1, 0; break;
    case Pauli::Y: m << 0, -kI, kI, 0; break;
    case Pauli::Z: m << 1, 0, 0, -1; break;
  }
  return m;
}

inline DenseOperator pauli(Pauli p) { return DenseOperator::hermitian(pauli_matrix(p)); }

/// Tensor product of local operators; the first factor is most significant.
inline DenseOperator kron(const DenseOperator& a, const DenseOperator& b) {
  const Eigen::Index da = a.dim(), db = b.dim();
  CMatrix out(da * db, da * db);
  for (Eigen::Index i = 0; i < da; ++i) {
    for (Eigen::Index j = 0; j < da; ++j) {
      out.block(i * db, j * db, db, db) = a.matrix()(i, j) * b.matrix();
    }
  }
  HermitianTag tag = HermitianTag::general;
  if (a.is_hermitian() && b.is_hermitian()) tag = HermitianTag::hermitian;
  return DenseOperator(std::move(out), tag);
}

/// Index bookkeeping for an operator acting on an ordered subset of qubits.
class SiteLayout {
 public:
  SiteLayout() = default;

  SiteLayout(std::vector<int> support, int n_qubits) : support_(std::move(support)), n_qubits_(n_qubits) {
    if (n_qubits_ < 1 || n_qubits_ > kMaxDenseQubits + 8) throw std::invalid_argument("SiteLayout: bad qubit count");
    std::vector<int> sorted = support_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("SiteLayout: support sites must be distinct");
    }
    for (int s : support_) {
      if (s < 0 || s >= n_qubits_) throw std::out_of_range("SiteLayout: support site out of range");
    }
    const int k = static_cast<int>(support_.size());
    offsets_.assign(std::size_t{1} << k, 0);
    for (std::size_t l = 0; l < offsets_.size(); ++l) {
      Eigen::Index off = 0;
      for (int t = 0; t < k; ++t) {
        if ((l >> (k - 1 - t)) & 1U) off |= Eigen::Index{1} << (n_qubits_ - 1 - support_[t]);
      }
      offsets_[l] = off;
    }
    mask_ = 0;
    for (int s : support_) mask_ |= Eigen::Index{1} << (n_qubits_ - 1 - s);
  }

  [[nodiscard]] const std::vector<int>& support() const { return support_; }
  [[nodiscard]] int n_qubits() const { return n_qubits_; }
  [[nodiscard]] Eigen::Index dim() const { return Eigen::Index{1} << n_qubits_; }
  [[nodiscard]] Eigen::Index local_dim() const { return static_cast<Eigen::Index>(offsets_.size()); }
  /// Full-space bit pattern of local basis index l.
  [[nodiscard]] Eigen::Index offset(Eigen::Index l) const { return offsets_[static_cast<std::size_t>(l)]; }
  /// Full index with the support bits cleared.
  [[nodiscard]] Eigen::Index base(Eigen::Index r) const { return r & ~mask_; }
  /// Local basis index encoded in full index r.
  [[nodiscard]] Eigen::Index local_index(Eigen::Index r) const {
    const int k = static_cast<int>(support_.size());
    Eigen::Index l = 0;
    for (int t = 0; t < k; ++t) {
      l = (l << 1) | ((r >> (n_qubits_ - 1 - support_[t])) & 1);
    }
    return l;
  }

 private:
  std::vector<int> support_;
  int n_qubits_ = 0;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index mask_ = 0;
};

/// An operator given by its action on a few qubits; applied to vectors and
/// matrices without materializing the 2^n x 2^n embedding.
class LocalOperator {
 public:
  LocalOperator() = default;

  LocalOperator(DenseOperator local, std::vector<int> support, int n_qubits)
      : local_(std::move(local)), layout_(std::move(support), n_qubits) {
    if (local_.dim() != layout_.local_dim()) {
      throw std::invalid_argument("LocalOperator: local dimension does not match support size");
    }
  }

  [[nodiscard]] const DenseOperator& local() const { return local_; }
  [[nodiscard]] const SiteLayout& layout() const { return layout_; }
  [[nodiscard]] const std::vector<int>& support() const { return layout_.support(); }
  [[nodiscard]] int n_qubits() const { return layout_.n_qubits(); }
  [[nodiscard]] Eigen::Index dim() const { return layout_.dim(); }
  [[nodiscard]] HermitianTag tag() const { return local_.tag(); }

  /// out = A * in, column by column.
  [[nodiscard]] CMatrix apply(const CMatrix& in) const {
    if (in.rows() != dim()) throw std::invalid_argument("LocalOperator: dimension mismatch");
    const CMatrix& a = local_.matrix();
    const Eigen::Index ld = layout_.local_dim();
    CMatrix out = CMatrix::Zero(in.rows(), in.cols());
    for (Eigen::Index r = 0; r < dim(); ++r) {
      const Eigen::Index l = layout_.local_index(r);
      const Eigen::Index b = layout_.base(r);
      for (Eigen::Index lp = 0; lp < ld; ++lp) {
        const cplx c = a(l, lp);
        if (c != cplx(0.0)) out.row(r) += c * in.row(b + layout_.offset(lp));
      }
    }
    return out;
  }

  [[nodiscard]] CVector apply(const CVector& in) const {
    if (in.size() != dim()) throw std::invalid_argument("LocalOperator: dimension mismatch");
    const CMatrix& a = local_.matrix();
    const Eigen::Index ld = layout_.local_dim();
    CVector out = CVector::Zero(in.size());
    for (Eigen::Index r = 0; r < dim(); ++r) {
      const Eigen::Index l = layout_.local_index(r);
      const Eigen::Index b = layout_.base(r);
      cplx acc = 0.0;
      for (Eigen::Index lp = 0; lp < ld; ++lp) acc += a(l, lp) * in(b + layout_.offset(lp));
      out(r) = acc;
    }
    return out;
  }

  /// Tr(A K) in O(d 2^s).
  [[nodiscard]] cplx trace_product(const CMatrix& k) const {
    if (k.rows() != dim() || k.cols() != dim()) throw std::invalid_argument("LocalOperator: dimension mismatch");
    const CMatrix& a = local_.matrix();
    const Eigen::Index ld = layout_.local_dim();
    cplx acc = 0.0;
    for (Eigen::Index r = 0; r < dim(); ++r) {
      const Eigen::Index l = layout_.local_index(r);
      const Eigen::Index b = layout_.base(r);
      for (Eigen::Index lp = 0; lp < ld; ++lp) acc += a(l, lp) * k(b + layout_.offset(lp), r);
    }
    return acc;
  }

  /// out = in * A.
  [[nodiscard]] CMatrix apply_right(const CMatrix& in) const {
    LocalOperator adj(local_.adjoint(), layout_.support(), layout_.n_qubits());
    return adj.apply(CMatrix(in.adjoint())).adjoint();
  }

  [[nodiscard]] DenseOperator to_dense() const {
    const CMatrix& a = local_.matrix();
    const Eigen::Index ld = layout_.local_dim();
    CMatrix out = CMatrix::Zero(dim(), dim());
    for (Eigen::Index r = 0; r < dim(); ++r) {
      const Eigen::Index l = layout_.local_index(r);
      const Eigen::Index b = layout_.base(r);
      for (Eigen::Index lp = 0; lp < ld; ++lp) out(r, b + layout_.offset(lp)) = a(l, lp);
    }
    HermitianTag tag = local_.tag();
    return DenseOperator(std::move(out), tag);
  }

 private:
  DenseOperator local_;
  SiteLayout layout_;
};

/// Embeds local_op acting on the ordered support into the n-qubit space.
/// The first support site is the most significant factor of local_op.
inline DenseOperator embed(const DenseOperator& local_op, const std::vector<int>& support, int n_qubits) {
  if (n_qubits > kMaxDenseQubits) throw std::invalid_argument("embed: too many qubits for a dense operator");
  return LocalOperator(local_op, support, n_qubits).to_dense();
}

/// A real-coefficient Pauli string; an empty letter map is the identity.
struct PauliTerm {
  double coefficient = 1.0;
  std::map<int, Pauli> letters;

  [[nodiscard]] LocalOperator to_local(int n_qubits) const {
    std::vector<int> support;
    DenseOperator op = DenseOperator::identity(1);
    for (const auto& [site, p] : letters) {
      if (site < 0 || site >= n_qubits) throw std::out_of_range("PauliTerm: qubit index out of range");
      if (p == Pauli::I) continue;
      support.push_back(site);
      op = support.size() == 1 ? pauli(p) : kron(op, pauli(p));
    }
    if (support.empty()) {
      // Identity on qubit 0 keeps the layout non-empty.
      return LocalOperator(coefficient * pauli(Pauli::I), {0}, n_qubits);
    }
    return LocalOperator(coefficient * op, support, n_qubits);
  }

  [[nodiscard]] DenseOperator to_operator(int n_qubits) const { return to_local(n_qubits).to_dense(); }
};

/// Single-qubit Pauli on one site, as a LocalOperator.
inline LocalOperator site_pauli(Pauli p, int site, int n_qubits) {
  return LocalOperator(pauli(p), {site}, n_qubits);
}

// ---------------------------------------------------------------------------
// Basic operations

inline DenseOperator commutator(const DenseOperator& a, const DenseOperator& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("commutator: dimension mismatch");
  CMatrix c = a.matrix() * b.matrix() - b.matrix() * a.matrix();
  HermitianTag tag = HermitianTag::general;
  if (a.tag() != HermitianTag::general && b.tag() != HermitianTag::general) {
    // [H,H] and [A,A] are anti-Hermitian; [H,A] is Hermitian.
    tag = a.tag() == b.tag() ? HermitianTag::anti_hermitian : HermitianTag::hermitian;
  }
  return DenseOperator(std::move(c), tag);
}

inline cplx expectation(const StateVector& psi, const DenseOperator& op) {
  if (psi.dim() != op.dim()) throw std::invalid_argument("expectation: dimension mismatch");
  return psi.amplitudes().dot(op.matrix() * psi.amplitudes());
}

inline cplx expectation(const DensityMatrix& rho, const DenseOperator& op) {
  if (rho.dim() != op.dim()) throw std::invalid_argument("expectation: dimension mismatch");
  // Tr(rho A) = sum_ij rho_ij A_ji
  return rho.matrix().transpose().cwiseProduct(op.matrix()).sum();
}

/// Real expectation value of a Hermitian operator; throws when the imaginary
/// part exceeds 1e-12 (relative to the operator scale).
template <class State>
double expectation_real(const State& state, const DenseOperator& op) {
  const cplx v = expectation(state, op);
  if (std::abs(v.imag()) > 1e-12 * std::max(1.0, detail::max_abs(op.matrix()))) {
    throw std::domain_error("expectation_real: expectation value has a non-negligible imaginary part");
  }
  return v.real();
}

/// Operator norm (largest singular value).
inline double operator_norm(const DenseOperator& op) {
  if (op.dim() <= 64) {
    return Eigen::JacobiSVD<CMatrix>(op.matrix()).singularValues()(0);
  }
  if (op.tag() != HermitianTag::general) {
    const CMatrix h = op.is_hermitian() ? op.matrix() : CMatrix(kI * op.matrix());
    const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(h, Eigen::EigenvaluesOnly).eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  }
  return Eigen::BDCSVD<CMatrix>(op.matrix()).singularValues()(0);
}

// ---------------------------------------------------------------------------
// Interaction graphs and star Hamiltonians

struct GraphEdge {
  int a = 0;
  int b = 0;
  DenseOperator term;  ///< 4x4, site a is the more significant factor.
};

class InteractionGraph {
 public:
  InteractionGraph() = default;

  explicit InteractionGraph(int n_sites) : n_sites_(n_sites) {
    if (n_sites_ < 1 || n_sites_ > kMaxDenseQubits) throw std::invalid_argument("InteractionGraph: bad site count");
  }

  void add_edge(int a, int b, DenseOperator term) {
    if (a == b) throw std::invalid_argument("InteractionGraph: edge endpoints must differ");
    if (a < 0 || b < 0 || a >= n_sites_ || b >= n_sites_) throw std::out_of_range("InteractionGraph: edge site out of range");
    if (term.dim() != 4) throw std::invalid_argument("InteractionGraph: edge operator must be 4x4");
    if (term.detect_tag() != HermitianTag::hermitian) throw std::invalid_argument("InteractionGraph: edge operator must be Hermitian");
    for (const auto& e : edges_) {
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) throw std::invalid_argument("InteractionGraph: duplicate edge");
    }
    edges_.push_back({a, b, DenseOperator::hermitian(term.matrix())});
  }

  void set_onsite(int site, DenseOperator term) {
    if (site < 0 || site >= n_sites_) throw std::out_of_range("InteractionGraph: onsite site out of range");
    if (term.dim() != 2) throw std::invalid_argument("InteractionGraph: onsite operator must be 2x2");
    if (term.detect_tag() != HermitianTag::hermitian) throw std::invalid_argument("InteractionGraph: onsite operator must be Hermitian");
    onsite_.insert_or_assign(site, DenseOperator::hermitian(term.matrix()));
  }

  [[nodiscard]] int n_sites() const { return n_sites_; }
  [[nodiscard]] const std::vector<GraphEdge>& edges() const { return edges_; }
  [[nodiscard]] const std::map<int, DenseOperator>& onsite() const { return onsite_; }

  [[nodiscard]] DenseOperator hamiltonian() const {
    const Eigen::Index d = Eigen::Index{1} << n_sites_;
    CMatrix h = CMatrix::Zero(d, d);
    for (const auto& e : edges_) h += embed(e.term, {e.a, e.b}, n_sites_).matrix();
    for (const auto& [site, s] : onsite_) h += embed(s, {site}, n_sites_).matrix();
    return DenseOperator::hermitian(std::move(h));
  }

  /// The 2-local part only.
  [[nodiscard]] DenseOperator edge_hamiltonian() const {
    const Eigen::Index d = Eigen::Index{1} << n_sites_;
    CMatrix h = CMatrix::Zero(d, d);
    for (const auto& e : edges_) h += embed(e.term, {e.a, e.b}, n_sites_).matrix();
    return DenseOperator::hermitian(std::move(h));
  }

 private:
  int n_sites_ = 0;
  std::vector<GraphEdge> edges_;
  std::map<int, DenseOperator> onsite_;
};

/// Star Hamiltonians h_i = (1/2) sum_{edges e containing i} h_e + w * s_i.
/// With onsite_weight = 1 they sum to the full Hamiltonian.
inline std::vector<DenseOperator> star_hamiltonians(const InteractionGraph& graph, double onsite_weight = 1.0) {
  const int n = graph.n_sites();
  const Eigen::Index d = Eigen::Index{1} << n;
  std::vector<CMatrix> acc(static_cast<std::size_t>(n), CMatrix::Zero(d, d));
  for (const auto& e : graph.edges()) {
    const CMatrix half = 0.5 * embed(e.term, {e.a, e.b}, n).matrix();
    acc[static_cast<std::size_t>(e.a)] += half;
    acc[static_cast<std::size_t>(e.b)] += half;
  }
  for (const auto& [site, s] : graph.onsite()) {
    acc[static_cast<std::size_t>(site)] += onsite_weight * embed(s, {site}, n).matrix();
  }
  std::vector<DenseOperator> out;
  out.reserve(acc.size());
  for (auto& m : acc) out.push_back(DenseOperator::hermitian(std::move(m)));
  return out;
}

// ---------------------------------------------------------------------------
// Exact diagonalization

/// Ascending eigenvalues with eigenvectors as matrix columns. Within a
/// degenerate eigenspace only the spanned subspace is meaningful.
struct Spectrum {
  RVector eigenvalues;
  CMatrix eigenvectors;

  [[nodiscard]] Eigen::Index size() const { return eigenvalues.size(); }
  [[nodiscard]] StateVector state(Eigen::Index k) const {
    return StateVector::normalized(eigenvectors.col(k));
  }
};

inline Spectrum diagonalize(const DenseOperator& op) {
  if (op.dim() > (Eigen::Index{1} << kMaxDenseQubits)) throw std::invalid_argument("diagonalize: dimension too large");
  if (op.detect_tag() != HermitianTag::hermitian) throw std::invalid_argument("diagonalize: operator is not Hermitian");
  Spectrum out;
  if (op.is_real()) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(op.matrix().real());
    if (es.info() != Eigen::Success) throw std::runtime_error("diagonalize: eigensolver failed");
    out.eigenvalues = es.eigenvalues();
    out.eigenvectors = es.eigenvectors().cast<cplx>();
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(op.matrix());
    if (es.info() != Eigen::Success) throw std::runtime_error("diagonalize: eigensolver failed");
    out.eigenvalues = es.eigenvalues();
    out.eigenvectors = es.eigenvectors();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Seeded random generation

/// GUE-like Hermitian matrix: every entry has E|h_ij|^2 = 1. With
/// real_symmetric the GOE-like variant has diagonal variance 1 and
/// off-diagonal variance 1/2.
inline DenseOperator random_hermitian(Eigen::Index d, std::uint64_t seed, bool real_symmetric = false) {
  if (d < 1) throw std::invalid_argument("random_hermitian: dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  CMatrix a(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double re = gauss(rng);
      const double im = real_symmetric ? 0.0 : gauss(rng);
      a(i, j) = cplx(re, im);
    }
  }
  CMatrix h = 0.5 * (a + a.adjoint());
  if (real_symmetric) h = h.real().cast<cplx>();
  return DenseOperator::hermitian(std::move(h));
}

/// Haar-random pure state (normalized complex Gaussian vector).
inline StateVector random_state(Eigen::Index d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("random_state: dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  CVector v(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v(i) = cplx(re, im);
  }
  return StateVector::normalized(v);
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phase fix.
inline DenseOperator random_unitary(Eigen::Index d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("random_unitary: dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  CMatrix z(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      z(i, j) = cplx(re, im);
    }
  }
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < d; ++k) {
    const cplx rk = r(k, k);
    if (std::abs(rk) > 0.0) q.col(k) *= rk / std::abs(rk);
  }
  return DenseOperator(std::move(q));
}

/// True when op acts as the identity on every qubit outside `sites`.
inline bool acts_only_on(const DenseOperator& op, const std::vector<int>& sites, int n_qubits, double tol = 1e-12) {
  if (op.dim() != (Eigen::Index{1} << n_qubits)) throw std::invalid_argument("acts_only_on: dimension mismatch");
  const CMatrix& m = op.matrix();
  const Eigen::Index d = op.dim();
  for (int q = 0; q < n_qubits; ++q) {
    if (std::find(sites.begin(), sites.end(), q) != sites.end()) continue;
    const Eigen::Index bit = Eigen::Index{1} << (n_qubits - 1 - q);
    for (Eigen::Index c = 0; c < d; ++c) {
      for (Eigen::Index r = 0; r < d; ++r) {
        // Off-diagonal in qubit q must vanish; diagonal blocks must agree.
        if (((r ^ c) & bit) != 0) {
          if (std::abs(m(r, c)) > tol) return false;
        } else if ((r & bit) == 0) {
          if (std::abs(m(r, c) - m(r | bit, c | bit)) > tol) return false;
        }
      }
    }
  }
  return true;
}

}  // namespace nash
