#pragma once

// Sampling experiments shared by the CLI and the acceptance suite: random
// 2-local instances, Haar ubiquity of approximate Nash states, the eigenstate
// audit, and optimal product states by alternating single-site minimization.

#include <nash/nash_conditions.hpp>
#include <nash/operator_core.hpp>
#include <nash/parallel.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace nash {

/// Connected random graph: a path plus random chords, each edge carrying a
/// GUE 4x4 term. No on-site terms, so the Hamiltonian is strictly 2-local.
inline InteractionGraph random_two_local(int n, std::uint64_t seed, double chord_prob = 0.4) {
  if (n < 2) throw std::invalid_argument("random_two_local: need at least two sites");
  InteractionGraph g(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uint64_t s = seed * 1000 + 1;
  for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1, random_hermitian(4, s++));
  for (int i = 0; i < n; ++i)
    for (int j = i + 2; j < n; ++j)
      if (u(rng) < chord_prob) g.add_edge(i, j, random_hermitian(4, s++));
  return g;
}

/// Star terms rescaled to unit operator norm, single-qubit SU(2) blocks.
inline NashInstance normalized_star_instance(const InteractionGraph& g, double onsite_weight = 1.0) {
  auto terms = star_hamiltonians(g, onsite_weight);
  for (auto& h : terms) {
    const double n = operator_norm(h);
    if (!(n > 0.0)) throw std::invalid_argument("normalized_star_instance: vanishing star term");
    h = (1.0 / n) * h;
  }
  return NashInstance::single_qubit_su2(g.n_sites(), terms);
}

/// Two qubits, single-qubit SU(2) blocks, real-symmetric GOE observables.
inline NashInstance random_real_pair(std::uint64_t seed) {
  return NashInstance::single_qubit_su2(2, {random_hermitian(4, seed, true), random_hermitian(4, seed + 1, true)});
}

/// N qubits, one GUE observable per qubit with its SU(2) block.
inline NashInstance random_complex_instance(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_complex_instance: need at least one qubit");
  std::vector<DenseOperator> obs;
  for (int i = 0; i < n; ++i) obs.push_back(random_hermitian(Eigen::Index{1} << n, seed + static_cast<std::uint64_t>(i)));
  return NashInstance::single_qubit_su2(n, std::move(obs));
}

// ---------------------------------------------------------------------------
// Haar ubiquity

struct HaarUbiquityReport {
  int n_qubits = 0;
  double epsilon = 0.0;
  std::vector<double> residuals;  ///< per sample, max over blocks and generators
  int n_pass = 0;

  [[nodiscard]] int n_samples() const { return static_cast<int>(residuals.size()); }
  [[nodiscard]] double fraction() const { return residuals.empty() ? 0.0 : static_cast<double>(n_pass) / n_samples(); }
};

/// Fraction of Haar-random states that are epsilon-approximate Nash states of
/// a normalized random 2-local star instance (epsilon defaults to 2^{-N/4}).
inline HaarUbiquityReport haar_ubiquity(int n_qubits, int n_samples, std::uint64_t seed,
                                        std::optional<double> epsilon = std::nullopt) {
  if (n_samples < 1) throw std::invalid_argument("haar_ubiquity: n_samples must be positive");
  const NashInstance inst = normalized_star_instance(random_two_local(n_qubits, seed));
  HaarUbiquityReport rep;
  rep.n_qubits = n_qubits;
  rep.epsilon = epsilon.value_or(std::pow(2.0, -n_qubits / 4.0));
  if (!(rep.epsilon > 0.0)) throw std::invalid_argument("haar_ubiquity: epsilon must be positive");
  rep.residuals.resize(static_cast<std::size_t>(n_samples));
  const Eigen::Index d = Eigen::Index{1} << n_qubits;
  parallel_for(rep.residuals.size(), [&](std::size_t k) {
    rep.residuals[k] = nash_residual(random_state(d, seed + 1 + k), inst).max;
  });
  for (double r : rep.residuals) rep.n_pass += r <= rep.epsilon;
  return rep;
}

// ---------------------------------------------------------------------------
// Eigenstate audit

struct EigenstateAuditCase {
  int n_qubits = 0;
  std::uint64_t seed = 0;
  double max_eigenstate_residual = 0.0;
  bool ground_state_global = false;  ///< global SU(2) minimum at every site
  double ground_energy = 0.0;
};

struct EigenstateAuditReport {
  std::vector<EigenstateAuditCase> cases;

  [[nodiscard]] bool passed(double tol = 1e-8) const {
    for (const auto& c : cases) {
      if (!(c.max_eigenstate_residual < tol) || !c.ground_state_global) return false;
    }
    return !cases.empty();
  }
};

/// Every eigenstate of a strictly 2-local Hamiltonian should be a Nash state
/// of its star decomposition and the ground state a Nash minimum.
inline EigenstateAuditReport eigenstate_audit(int n_instances, const std::vector<int>& sizes, std::uint64_t seed) {
  if (n_instances < 1 || sizes.empty()) throw std::invalid_argument("eigenstate_audit: empty audit");
  EigenstateAuditReport rep;
  rep.cases.resize(static_cast<std::size_t>(n_instances));
  for (int k = 0; k < n_instances; ++k) {
    auto& c = rep.cases[static_cast<std::size_t>(k)];
    c.n_qubits = sizes[static_cast<std::size_t>(k) % sizes.size()];
    c.seed = seed + static_cast<std::uint64_t>(k);
  }
  parallel_for(rep.cases.size(), [&](std::size_t k) {
    auto& c = rep.cases[k];
    const InteractionGraph g = random_two_local(c.n_qubits, c.seed);
    const NashInstance inst = NashInstance::single_qubit_su2(c.n_qubits, star_hamiltonians(g, 0.5));
    const Spectrum spec = diagonalize(g.hamiltonian());
    for (Eigen::Index e = 0; e < spec.size(); ++e) {
      c.max_eigenstate_residual = std::max(c.max_eigenstate_residual, nash_residual(spec.state(e), inst).max);
    }
    const StateVector gs = spec.state(0);
    c.ground_energy = spec.eigenvalues(0);
    c.ground_state_global = true;
    for (int i = 0; i < c.n_qubits; ++i) {
      c.ground_state_global =
          c.ground_state_global && global_su2_check(gs, inst.observable(static_cast<std::size_t>(i)), i, OptMode::min).is_global;
    }
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Optimal product states

struct ProductStateOptimum {
  std::vector<Eigen::Vector2cd> sites;
  double energy = 0.0;
  int sweeps = 0;
  bool converged = false;
  /// Largest ||H_eff phi - lambda phi|| over sites at the end.
  double stationarity = 0.0;

  [[nodiscard]] StateVector state() const {
    CVector v = CVector::Ones(1);
    for (const auto& s : sites) {
      CVector w(v.size() * 2);
      for (Eigen::Index k = 0; k < v.size(); ++k) w.segment(2 * k, 2) = v(k) * s;
      v = std::move(w);
    }
    return StateVector(v.normalized());
  }
};

namespace detail {

/// <phi_other| T |phi_other> as a 2x2 operator on `site` (site a is the more
/// significant factor of T).
inline Eigen::Matrix2cd partial_expectation(const GraphEdge& e, int site, const Eigen::Vector2cd& other) {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  const CMatrix& t = e.term.matrix();
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int u = 0; u < 2; ++u)
        for (int v = 0; v < 2; ++v) {
          const int r = site == e.a ? 2 * x + u : 2 * u + x;
          const int c = site == e.a ? 2 * y + v : 2 * v + y;
          m(x, y) += std::conj(other(u)) * t(r, c) * other(v);
        }
  return m;
}

inline Eigen::Matrix2cd effective_site_operator(const InteractionGraph& g, int site, const std::vector<Eigen::Vector2cd>& phi) {
  Eigen::Matrix2cd h = Eigen::Matrix2cd::Zero();
  for (const auto& e : g.edges()) {
    if (e.a == site) h += partial_expectation(e, site, phi[static_cast<std::size_t>(e.b)]);
    if (e.b == site) h += partial_expectation(e, site, phi[static_cast<std::size_t>(e.a)]);
  }
  if (auto it = g.onsite().find(site); it != g.onsite().end()) h += it->second.matrix();
  return 0.5 * (h + h.adjoint());
}

inline double product_energy(const InteractionGraph& g, const std::vector<Eigen::Vector2cd>& phi) {
  double e = 0.0;
  for (const auto& ed : g.edges()) {
    Eigen::Vector4cd v;
    const auto& a = phi[static_cast<std::size_t>(ed.a)];
    const auto& b = phi[static_cast<std::size_t>(ed.b)];
    v << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
    e += v.dot(ed.term.matrix() * v).real();
  }
  for (const auto& [site, s] : g.onsite()) {
    const auto& a = phi[static_cast<std::size_t>(site)];
    e += a.dot(s.matrix() * a).real();
  }
  return e;
}

}  // namespace detail

/// Minimizes <H> over product states by sweeping single-site ground states of
/// the mean-field operator until every site is stationary. Keeps the best of
/// n_restarts random starts.
inline ProductStateOptimum optimal_product_state(const InteractionGraph& g, std::uint64_t seed, int n_restarts = 8,
                                                 double tol = 1e-12, int max_sweeps = 100000) {
  if (n_restarts < 1) throw std::invalid_argument("optimal_product_state: n_restarts must be positive");
  const int n = g.n_sites();
  std::optional<ProductStateOptimum> best;
  for (int r = 0; r < n_restarts; ++r) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
    std::normal_distribution<double> gauss(0.0, 1.0);
    ProductStateOptimum cur;
    cur.sites.resize(static_cast<std::size_t>(n));
    for (auto& s : cur.sites) {
      s << cplx(gauss(rng), gauss(rng)), cplx(gauss(rng), gauss(rng));
      s.normalize();
    }
    for (cur.sweeps = 1; cur.sweeps <= max_sweeps; ++cur.sweeps) {
      for (int i = 0; i < n; ++i) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(detail::effective_site_operator(g, i, cur.sites));
        cur.sites[static_cast<std::size_t>(i)] = es.eigenvectors().col(0);
      }
      cur.stationarity = 0.0;
      for (int i = 0; i < n; ++i) {
        const Eigen::Matrix2cd h = detail::effective_site_operator(g, i, cur.sites);
        const auto& p = cur.sites[static_cast<std::size_t>(i)];
        const cplx lam = p.dot(h * p);
        cur.stationarity = std::max(cur.stationarity, (h * p - lam * p).norm());
      }
      if (cur.stationarity < tol) {
        cur.converged = true;
        break;
      }
    }
    cur.sweeps = std::min(cur.sweeps, max_sweeps);
    cur.energy = detail::product_energy(g, cur.sites);
    if (!best || (cur.converged && (!best->converged || cur.energy < best->energy))) best = std::move(cur);
  }
  return *best;
}

}  // namespace nash
