#pragma once

// Nash-state conditions: commutator residuals, second-order bilinear forms,
// local classification and the closed-form SU(2) global check.

#include <nash/operator_core.hpp>

#include <Eigen/Sparse>

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace nash {

/// Observables paired with disjoint qubit blocks and an anti-Hermitian,
/// unit-norm generator basis for each block's Lie algebra.
class NashInstance {
 public:
  using SparseOp = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

  NashInstance() = default;

  NashInstance(int n_qubits, std::vector<DenseOperator> observables, std::vector<std::vector<int>> blocks,
               std::vector<std::vector<LocalOperator>> generators)
      : n_qubits_(n_qubits),
        observables_(std::move(observables)),
        blocks_(std::move(blocks)),
        generators_(std::move(generators)) {
    if (n_qubits_ < 1 || n_qubits_ > kMaxDenseQubits) throw std::invalid_argument("NashInstance: bad qubit count");
    const std::size_t m = observables_.size();
    if (m == 0) throw std::invalid_argument("NashInstance: no observables");
    if (blocks_.size() != m || generators_.size() != m) {
      throw std::invalid_argument("NashInstance: observables, blocks and generators must have equal length");
    }
    const Eigen::Index d = Eigen::Index{1} << n_qubits_;
    std::set<int> used;
    for (std::size_t i = 0; i < m; ++i) {
      if (observables_[i].dim() != d) throw std::invalid_argument("NashInstance: observable dimension mismatch");
      if (observables_[i].detect_tag() != HermitianTag::hermitian) {
        throw std::invalid_argument("NashInstance: observables must be Hermitian");
      }
      observables_[i] = DenseOperator::hermitian(observables_[i].matrix());
      if (blocks_[i].empty()) throw std::invalid_argument("NashInstance: empty block");
      for (int q : blocks_[i]) {
        if (q < 0 || q >= n_qubits_) throw std::out_of_range("NashInstance: block qubit out of range");
        if (!used.insert(q).second) throw std::invalid_argument("NashInstance: blocks must be disjoint");
      }
      if (generators_[i].empty()) throw std::invalid_argument("NashInstance: block without generators");
      for (const auto& g : generators_[i]) {
        if (g.n_qubits() != n_qubits_) throw std::invalid_argument("NashInstance: generator qubit count mismatch");
        for (int q : g.support()) {
          if (std::find(blocks_[i].begin(), blocks_[i].end(), q) == blocks_[i].end()) {
            throw std::invalid_argument("NashInstance: generator acts outside its block");
          }
        }
        if (g.local().detect_tag() != HermitianTag::anti_hermitian) {
          throw std::invalid_argument("NashInstance: generators must be anti-Hermitian");
        }
        if (std::abs(operator_norm(g.local()) - 1.0) > 1e-10) {
          throw std::invalid_argument("NashInstance: generators must have operator norm 1");
        }
      }
    }
    build_sparse_cache();
  }

  /// Block i = {blocks[i]} with generators i*P for every non-identity Pauli
  /// string P on the block, i.e. a basis of su(2^q).
  static NashInstance full_su(int n_qubits, std::vector<DenseOperator> observables, std::vector<std::vector<int>> blocks) {
    std::vector<std::vector<LocalOperator>> gens;
    gens.reserve(blocks.size());
    for (const auto& block : blocks) gens.push_back(pauli_generators(block, n_qubits));
    return NashInstance(n_qubits, std::move(observables), std::move(blocks), std::move(gens));
  }

  /// Observable i paired with qubit i and generators (iX, iY, iZ).
  static NashInstance single_qubit_su2(int n_qubits, std::vector<DenseOperator> observables) {
    std::vector<std::vector<int>> blocks;
    for (std::size_t i = 0; i < observables.size(); ++i) blocks.push_back({static_cast<int>(i)});
    return full_su(n_qubits, std::move(observables), std::move(blocks));
  }

  /// Basis i*P of su(2^q) on the block, ordered lexicographically in
  /// (I, X, Y, Z) with the first block qubit most significant.
  static std::vector<LocalOperator> pauli_generators(const std::vector<int>& block, int n_qubits) {
    const std::size_t q = block.size();
    std::size_t count = 1;
    for (std::size_t t = 0; t < q; ++t) count *= 4;
    std::vector<LocalOperator> out;
    for (std::size_t code = 1; code < count; ++code) {
      DenseOperator op = DenseOperator::identity(1);
      std::size_t rest = code;
      std::vector<Pauli> letters(q);
      for (std::size_t t = q; t-- > 0;) {
        letters[t] = static_cast<Pauli>(rest % 4);
        rest /= 4;
      }
      for (std::size_t t = 0; t < q; ++t) op = t == 0 ? pauli(letters[t]) : kron(op, pauli(letters[t]));
      out.emplace_back(kI * op, block, n_qubits);
    }
    return out;
  }

  [[nodiscard]] int n_qubits() const { return n_qubits_; }
  [[nodiscard]] Eigen::Index dim() const { return Eigen::Index{1} << n_qubits_; }
  [[nodiscard]] std::size_t size() const { return observables_.size(); }
  [[nodiscard]] const std::vector<DenseOperator>& observables() const { return observables_; }
  [[nodiscard]] const DenseOperator& observable(std::size_t i) const { return observables_.at(i); }
  [[nodiscard]] const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  [[nodiscard]] const std::vector<std::vector<LocalOperator>>& generators() const { return generators_; }
  [[nodiscard]] const std::vector<LocalOperator>& generators(std::size_t i) const { return generators_.at(i); }
  [[nodiscard]] std::size_t total_generators() const {
    std::size_t n = 0;
    for (const auto& g : generators_) n += g.size();
    return n;
  }

  /// Sparse copy of observable i, or null when it is dense.
  [[nodiscard]] const SparseOp* sparse_observable(std::size_t i) const { return sparse_.at(i).get(); }

  /// Same blocks and generators with observable i multiplied by s.
  [[nodiscard]] NashInstance scaled(std::size_t i, double s) const {
    auto obs = observables_;
    obs.at(i) = s * obs.at(i);
    return NashInstance(n_qubits_, std::move(obs), blocks_, generators_);
  }

  /// Every observable negated.
  [[nodiscard]] NashInstance negated() const {
    auto obs = observables_;
    for (auto& o : obs) o = -1.0 * o;
    return NashInstance(n_qubits_, std::move(obs), blocks_, generators_);
  }

 private:
  void build_sparse_cache() {
    sparse_.clear();
    for (const auto& o : observables_) {
      const CMatrix& m = o.matrix();
      const Eigen::Index nnz = (m.array() != cplx(0.0)).count();
      if (m.rows() >= 64 && nnz * 10 < m.size()) {
        sparse_.push_back(std::make_shared<SparseOp>(m.sparseView()));
      } else {
        sparse_.push_back(nullptr);
      }
    }
  }

  int n_qubits_ = 0;
  std::vector<DenseOperator> observables_;
  std::vector<std::vector<int>> blocks_;
  std::vector<std::vector<LocalOperator>> generators_;
  std::vector<std::shared_ptr<const SparseOp>> sparse_;
};

struct NashResidual {
  std::vector<double> per_block;
  /// Signed values <[h_i, A_ia]> per block and generator.
  std::vector<std::vector<double>> components;
  double max = 0.0;
};

enum class LocalKind { local_min, local_max, saddle, degenerate };

inline std::string to_string(LocalKind k) {
  switch (k) {
    case LocalKind::local_min: return "local_min";
    case LocalKind::local_max: return "local_max";
    case LocalKind::saddle: return "saddle";
    case LocalKind::degenerate: return "degenerate";
  }
  return "unknown";
}

struct LocalClass {
  LocalKind kind = LocalKind::degenerate;
  std::vector<RVector> eigenvalue_lists;
};

inline constexpr double kNashTol = 1e-9;
inline constexpr double kEigTol = 1e-7;

namespace detail {

inline CVector apply_gen(const LocalOperator& a, const CVector& v) { return a.apply(v); }
inline CVector apply_gen(const DenseOperator& a, const CVector& v) { return a.matrix() * v; }
inline CMatrix apply_gen(const LocalOperator& a, const CMatrix& m) { return a.apply(m); }
inline CMatrix apply_gen(const DenseOperator& a, const CMatrix& m) { return a.matrix() * m; }
inline CMatrix apply_gen_right(const LocalOperator& a, const CMatrix& m) { return a.apply_right(m); }
inline CMatrix apply_gen_right(const DenseOperator& a, const CMatrix& m) { return m * a.matrix(); }
inline cplx trace_gen(const LocalOperator& a, const CMatrix& k) { return a.trace_product(k); }
inline cplx trace_gen(const DenseOperator& a, const CMatrix& k) {
  return a.matrix().transpose().cwiseProduct(k).sum();
}

// Tr(X Y) without forming the product.
inline cplx trace_of_product(const CMatrix& x, const CMatrix& y) { return x.transpose().cwiseProduct(y).sum(); }

inline CMatrix left_mul(const DenseOperator& h, const NashInstance::SparseOp* sp, const CMatrix& m) {
  return sp != nullptr ? CMatrix(*sp * m) : CMatrix(h.matrix() * m);
}
inline CMatrix right_mul(const CMatrix& m, const DenseOperator& h, const NashInstance::SparseOp* sp) {
  return sp != nullptr ? CMatrix(m * *sp) : CMatrix(m * h.matrix());
}

inline void require_dim(Eigen::Index a, Eigen::Index b) {
  if (a != b) throw std::invalid_argument("nash: state and operator dimensions differ");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Residuals

/// Signed <[h, A_a]> for each generator; real because A_a is anti-Hermitian.
template <class Gen>
std::vector<double> block_residual(const StateVector& psi, const DenseOperator& h, const std::vector<Gen>& gens,
                                   const NashInstance::SparseOp* sparse_h = nullptr) {
  detail::require_dim(psi.dim(), h.dim());
  const CVector& v = psi.amplitudes();
  const CVector u = sparse_h != nullptr ? CVector(*sparse_h * v) : CVector(h.matrix() * v);
  std::vector<double> out;
  out.reserve(gens.size());
  for (const auto& a : gens) {
    // <h A> - <A h> = u^dag (A psi) + (A psi)^dag u
    const CVector w = detail::apply_gen(a, v);
    out.push_back(2.0 * u.dot(w).real());
  }
  return out;
}

template <class Gen>
std::vector<double> block_residual(const DensityMatrix& rho, const DenseOperator& h, const std::vector<Gen>& gens,
                                   const NashInstance::SparseOp* sparse_h = nullptr) {
  detail::require_dim(rho.dim(), h.dim());
  // Tr(rho [h, A]) = Tr((rho h - h rho) A)
  const CMatrix k = detail::right_mul(rho.matrix(), h, sparse_h) - detail::left_mul(h, sparse_h, rho.matrix());
  std::vector<double> out;
  out.reserve(gens.size());
  for (const auto& a : gens) out.push_back(detail::trace_gen(a, k).real());
  return out;
}

template <class State>
NashResidual nash_residual(const State& state, const NashInstance& inst) {
  detail::require_dim(state.dim(), inst.dim());
  NashResidual r;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    auto comps = block_residual(state, inst.observable(i), inst.generators(i), inst.sparse_observable(i));
    double m = 0.0;
    for (double c : comps) m = std::max(m, std::abs(c));
    r.per_block.push_back(m);
    r.max = std::max(r.max, m);
    r.components.push_back(std::move(comps));
  }
  return r;
}

/// max_i sup_{v != 0} |<[h_i, v.A_i]>| / |v|_1 <= epsilon, which reduces to
/// the largest basis-direction residual.
template <class State>
bool is_epsilon_nash(const State& state, const NashInstance& inst, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("is_epsilon_nash: epsilon must be positive");
  return nash_residual(state, inst).max <= epsilon;
}

// ---------------------------------------------------------------------------
// Bilinear forms

/// B_ab = < (1/2){h, {A_a, A_b}} - A_a h A_b - A_b h A_a >, the second
/// derivative of <e^{-tA} h e^{tA}> along A = sum_a v_a A_a.
template <class Gen>
RMatrix block_bilinear_form(const StateVector& psi, const DenseOperator& h, const std::vector<Gen>& gens,
                            const NashInstance::SparseOp* sparse_h = nullptr) {
  detail::require_dim(psi.dim(), h.dim());
  const CVector& v = psi.amplitudes();
  auto hmul = [&](const CVector& x) { return sparse_h != nullptr ? CVector(*sparse_h * x) : CVector(h.matrix() * x); };
  const CVector u = hmul(v);
  const std::size_t n = gens.size();
  std::vector<CVector> w(n), hw(n);
  for (std::size_t a = 0; a < n; ++a) {
    w[a] = detail::apply_gen(gens[a], v);
    hw[a] = hmul(w[a]);
  }
  RMatrix b(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = a; c < n; ++c) {
      const CVector vac = detail::apply_gen(gens[a], w[c]);
      const CVector vca = detail::apply_gen(gens[c], w[a]);
      const double val = (u.dot(vac) + u.dot(vca)).real() + 2.0 * w[a].dot(hw[c]).real();
      b(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = val;
      b(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(a)) = val;
    }
  }
  return b;
}

template <class Gen>
RMatrix block_bilinear_form(const DensityMatrix& rho, const DenseOperator& h, const std::vector<Gen>& gens,
                            const NashInstance::SparseOp* sparse_h = nullptr) {
  detail::require_dim(rho.dim(), h.dim());
  const CMatrix& r = rho.matrix();
  const CMatrix p = detail::right_mul(r, h, sparse_h) + detail::left_mul(h, sparse_h, r);
  const std::size_t n = gens.size();
  std::vector<CMatrix> ap(n), rah(n);
  for (std::size_t a = 0; a < n; ++a) {
    ap[a] = detail::apply_gen(gens[a], p);                                           // A_a P
    rah[a] = detail::right_mul(detail::apply_gen_right(gens[a], r), h, sparse_h);  // rho A_a h
  }
  // B_ab = (1/2) Tr(P {A_a, A_b}) - Tr(rho A_a h A_b) - Tr(rho A_b h A_a),
  // using Tr(P A_a A_b) = Tr(A_a (A_b P)) and Tr(rho A_a h A_b) = Tr(A_b (rho A_a h)).
  RMatrix b(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = a; c < n; ++c) {
      const cplx t1 = 0.5 * (detail::trace_gen(gens[a], ap[c]) + detail::trace_gen(gens[c], ap[a]));
      const cplx t2 = detail::trace_gen(gens[c], rah[a]);
      const cplx t3 = detail::trace_gen(gens[a], rah[c]);
      const double val = (t1 - t2 - t3).real();
      b(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = val;
      b(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(a)) = val;
    }
  }
  return b;
}

template <class State>
RMatrix bilinear_form_matrix(const State& state, const NashInstance& inst, std::size_t block_index) {
  if (block_index >= inst.size()) throw std::out_of_range("bilinear_form_matrix: block index out of range");
  detail::require_dim(state.dim(), inst.dim());
  return block_bilinear_form(state, inst.observable(block_index), inst.generators(block_index),
                             inst.sparse_observable(block_index));
}

/// Sign pattern of the block bilinear forms at a Nash state. Eigenvalues in
/// (-eig_tol, eig_tol) count as zero.
template <class State>
LocalClass classify_local(const State& state, const NashInstance& inst, double eig_tol = kEigTol,
                          double residual_tol = kNashTol) {
  const auto res = nash_residual(state, inst);
  if (!(res.max < residual_tol)) {
    throw std::domain_error("classify_local: not a Nash state (residual " + std::to_string(res.max) + ")");
  }
  LocalClass out;
  bool any_neg = false, any_pos = false;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const RMatrix b = bilinear_form_matrix(state, inst, i);
    RVector ev = Eigen::SelfAdjointEigenSolver<RMatrix>(b, Eigen::EigenvaluesOnly).eigenvalues();
    any_neg = any_neg || (ev.array() < -eig_tol).any();
    any_pos = any_pos || (ev.array() > eig_tol).any();
    out.eigenvalue_lists.push_back(std::move(ev));
  }
  if (!any_neg && !any_pos) {
    out.kind = LocalKind::degenerate;
  } else if (!any_neg) {
    out.kind = LocalKind::local_min;
  } else if (!any_pos) {
    out.kind = LocalKind::local_max;
  } else {
    out.kind = LocalKind::saddle;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Global optimality over SU(2) on one qubit

enum class OptMode { min, max };

struct SU2Optimum {
  double optimal_value = 0.0;
  double current_value = 0.0;
  bool is_global = false;
  /// Q_{mu nu} = Re <tau_mu^dag h tau_nu>, tau = (1, iX, iY, iZ).
  Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
  /// Unit quaternion attaining the optimum.
  Eigen::Vector4d quaternion = Eigen::Vector4d::UnitX();
};

namespace detail {

inline std::vector<LocalOperator> quaternion_basis(int qubit, int n_qubits) {
  std::vector<LocalOperator> tau;
  tau.emplace_back(pauli(Pauli::I), std::vector<int>{qubit}, n_qubits);
  for (Pauli p : {Pauli::X, Pauli::Y, Pauli::Z}) tau.emplace_back(kI * pauli(p), std::vector<int>{qubit}, n_qubits);
  return tau;
}

inline Eigen::Matrix4d su2_form(const StateVector& psi, const DenseOperator& h, int qubit, int n_qubits) {
  const auto tau = quaternion_basis(qubit, n_qubits);
  std::vector<CVector> t(4), ht(4);
  for (int m = 0; m < 4; ++m) {
    t[static_cast<std::size_t>(m)] = tau[static_cast<std::size_t>(m)].apply(psi.amplitudes());
    ht[static_cast<std::size_t>(m)] = h.matrix() * t[static_cast<std::size_t>(m)];
  }
  Eigen::Matrix4d q;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) q(m, n) = t[static_cast<std::size_t>(m)].dot(ht[static_cast<std::size_t>(n)]).real();
  return 0.5 * (q + q.transpose());
}

inline Eigen::Matrix4d su2_form(const DensityMatrix& rho, const DenseOperator& h, int qubit, int n_qubits) {
  const auto tau = quaternion_basis(qubit, n_qubits);
  Eigen::Matrix4d q;
  for (int m = 0; m < 4; ++m) {
    // rho tau_m^dag
    const LocalOperator tau_dag(tau[static_cast<std::size_t>(m)].local().adjoint(), {qubit}, n_qubits);
    const CMatrix z = tau_dag.apply_right(rho.matrix());
    for (int n = 0; n < 4; ++n) {
      // Tr(rho tau_m^dag h tau_n) = Tr(h tau_n rho tau_m^dag)
      const CMatrix w = tau[static_cast<std::size_t>(n)].apply(z);
      q(m, n) = trace_of_product(h.matrix(), w).real();
    }
  }
  return 0.5 * (q + q.transpose());
}

}  // namespace detail

/// Optimizes <U^dag h U> over U = a0 + i(a1 X + a2 Y + a3 Z) on `qubit`, a in
/// S^3. The objective is the quadratic form a^T Q a, so the optimum is an
/// extreme eigenvalue of Q.
template <class State>
SU2Optimum global_su2_check(const State& state, const DenseOperator& h, int qubit, OptMode mode, double tol = 1e-8) {
  detail::require_dim(state.dim(), h.dim());
  if (!detail::is_power_of_two(h.dim())) throw std::invalid_argument("global_su2_check: dimension is not a power of two");
  const int n = detail::log2_exact(h.dim());
  if (qubit < 0 || qubit >= n) throw std::out_of_range("global_su2_check: qubit out of range");
  SU2Optimum out;
  out.q = detail::su2_form(state, h, qubit, n);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(out.q);
  const int idx = mode == OptMode::min ? 0 : 3;
  out.optimal_value = es.eigenvalues()(idx);
  out.quaternion = es.eigenvectors().col(idx);
  out.current_value = out.q(0, 0);
  out.is_global = std::abs(out.optimal_value - out.current_value) < tol;
  return out;
}

// ---------------------------------------------------------------------------
// Frustration freeness and dimension counts

/// True iff psi is a lowest-eigenvalue eigenvector of every term.
inline bool frustration_free_check(const std::vector<DenseOperator>& terms, const StateVector& psi, double tol = kNashTol) {
  for (const auto& h : terms) {
    detail::require_dim(psi.dim(), h.dim());
    const double emin = diagonalize(h).eigenvalues(0);
    const CVector r = h.matrix() * psi.amplitudes() - emin * psi.amplitudes();
    if (!(r.norm() < tol)) return false;
  }
  return true;
}

struct DimensionCounts {
  long long dim_D = 0;
  long long dim_V = 0;
  long long dim_V_prime = 0;
};

struct LocalCase {
  int n_qubits = 0;
  int block_size = 0;
};

/// Generic dimensions: mixed states d^2 - 1 - sum dim g_i, state vectors
/// 2d - sum dim g_i, projectivized dim_V - 2. In the local case every block
/// carries su(2^q), of dimension 2^{2q} - 1.
inline DimensionCounts dimension_counts(long long d, const std::vector<long long>& group_dims,
                                        std::optional<LocalCase> local_case = std::nullopt) {
  long long total = 0;
  if (local_case) {
    const int n = local_case->n_qubits, q = local_case->block_size;
    if (n < 1 || q < 1 || n % q != 0 || n > 62) throw std::invalid_argument("dimension_counts: block size must divide N");
    if (d != (1LL << n)) throw std::invalid_argument("dimension_counts: d must equal 2^N in the local case");
    total = static_cast<long long>(n / q) * ((1LL << (2 * q)) - 1);
  } else {
    for (long long g : group_dims) {
      if (g <= 0) throw std::invalid_argument("dimension_counts: group dimensions must be positive");
      total += g;
    }
  }
  DimensionCounts c;
  c.dim_D = d * d - 1 - total;
  c.dim_V = 2 * d - total;
  c.dim_V_prime = c.dim_V - 2;
  return c;
}

}  // namespace nash
