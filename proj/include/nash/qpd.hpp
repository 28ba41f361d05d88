#pragma once

// Quantum Prisoner's Dilemma: payoff operators, rebit reduction, the Nash
// variety, the Nash-maximum test, entanglement orbits and their intersections.
// Player i acts on qubit i - 1 (qubit 0 is the most significant).

#include <nash/nash_conditions.hpp>
#include <nash/operator_core.hpp>
#include <nash/parallel.hpp>
#include <nash/variety_solver.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nash {

// ---------------------------------------------------------------------------
// Multi-observable games

/// Players, observables and strategy groups (a NashInstance) plus the state
/// the referee prepares.
struct GameInstance {
  NashInstance instance;
  StateVector initial_state;

  GameInstance(NashInstance inst, StateVector psi0) : instance(std::move(inst)), initial_state(std::move(psi0)) {
    if (initial_state.dim() != instance.dim()) throw std::invalid_argument("GameInstance: initial state dimension mismatch");
  }
};

/// u_i = <psi0| U^dag h_i U |psi0> with U the product of the players'
/// strategies. Each strategy is a full-space unitary that must act only on
/// its player's block; the blocks are disjoint, so the order is irrelevant.
inline RVector payoffs(const StateVector& psi0, const NashInstance& inst, const std::vector<CMatrix>& strategies) {
  if (psi0.dim() != inst.dim()) throw std::invalid_argument("payoffs: state dimension mismatch");
  if (strategies.size() != inst.size()) throw std::invalid_argument("payoffs: one strategy per player is required");
  CVector psi = psi0.amplitudes();
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    const CMatrix& u = strategies[i];
    if (u.rows() != inst.dim() || u.cols() != inst.dim()) throw std::invalid_argument("payoffs: strategy dimension mismatch");
    const CMatrix id = CMatrix::Identity(inst.dim(), inst.dim());
    if ((u.adjoint() * u - id).cwiseAbs().maxCoeff() > 1e-10) throw std::invalid_argument("payoffs: strategy is not unitary");
    if (!acts_only_on(DenseOperator(u, HermitianTag::general), inst.blocks()[i], inst.n_qubits(), 1e-10)) {
      throw std::invalid_argument("payoffs: strategy acts outside its block");
    }
    psi = u * psi;
  }
  const StateVector out(psi.normalized());
  RVector u(static_cast<Eigen::Index>(inst.size()));
  for (std::size_t i = 0; i < inst.size(); ++i) u(static_cast<Eigen::Index>(i)) = expectation_real(out, inst.observable(i));
  return u;
}

inline RVector payoffs(const GameInstance& game, const std::vector<CMatrix>& strategies) {
  return payoffs(game.initial_state, game.instance, strategies);
}

/// Payoffs when every player does nothing.
inline RVector payoffs(const GameInstance& game) {
  const CMatrix id = CMatrix::Identity(game.instance.dim(), game.instance.dim());
  return payoffs(game, std::vector<CMatrix>(game.instance.size(), id));
}

struct EquilibriumCertificate {
  bool is_equilibrium = false;
  NashResidual residual;
  std::vector<SU2Optimum> optima;    ///< per block, global checks only
  std::optional<LocalClass> local;   ///< set when local-only certification was used
};

/// The prepared state is a pure-strategy Nash equilibrium iff it is a Nash
/// maximum state. Single-qubit blocks get an exact global check; larger blocks
/// need allow_local_only and then only local maximality is certified.
inline EquilibriumCertificate nash_equilibrium_certificate(const GameInstance& game, double tol = kNashTol,
                                                           bool allow_local_only = false) {
  const auto& inst = game.instance;
  bool single = true;
  for (const auto& b : inst.blocks()) single = single && b.size() == 1;
  if (!single && !allow_local_only) {
    throw std::invalid_argument("nash_equilibrium_certificate: blocks larger than one qubit need allow_local_only");
  }
  EquilibriumCertificate cert;
  cert.residual = nash_residual(game.initial_state, inst);
  const bool nash = cert.residual.max < tol;
  if (single) {
    cert.optima.resize(inst.size());
    parallel_for(inst.size(), [&](std::size_t i) {
      cert.optima[i] = global_su2_check(game.initial_state, inst.observable(i), inst.blocks()[i][0], OptMode::max, 1e-8);
    });
    bool all = nash;
    for (const auto& o : cert.optima) all = all && o.is_global;
    cert.is_equilibrium = all;
    return cert;
  }
  if (!nash) return cert;
  cert.local = classify_local(game.initial_state, inst, kEigTol, tol);
  cert.is_equilibrium = cert.local->kind == LocalKind::local_max;
  return cert;
}

namespace qpd {

// ---------------------------------------------------------------------------
// Payoffs

/// Diagonal payoff operators in the basis (|00>, |01>, |10>, |11>) with
/// 0 = cooperate, 1 = defect.
inline std::pair<DenseOperator, DenseOperator> payoff_operators() {
  const auto diag = [](double a, double b, double c, double d) {
    CMatrix m = CMatrix::Zero(4, 4);
    m.diagonal() << a, b, c, d;
    return DenseOperator::hermitian(m);
  };
  return {diag(3, 0, 5, 1), diag(3, 5, 0, 1)};
}

/// Same operators assembled from Pauli strings.
inline std::pair<DenseOperator, DenseOperator> payoff_operators_pauli() {
  const CMatrix ii = kron(pauli(Pauli::I), pauli(Pauli::I)).matrix();
  const CMatrix iz = kron(pauli(Pauli::I), pauli(Pauli::Z)).matrix();
  const CMatrix zi = kron(pauli(Pauli::Z), pauli(Pauli::I)).matrix();
  const CMatrix zz = kron(pauli(Pauli::Z), pauli(Pauli::Z)).matrix();
  return {DenseOperator::hermitian(2.25 * ii + 1.75 * iz - 0.75 * zi - 0.25 * zz),
          DenseOperator::hermitian(2.25 * ii - 0.75 * iz + 1.75 * zi - 0.25 * zz)};
}

/// Two players, single-qubit SU(2) strategies.
inline NashInstance instance() {
  auto [h1, h2] = payoff_operators();
  return NashInstance::single_qubit_su2(2, {h1, h2});
}

inline GameInstance game(const StateVector& psi0) { return GameInstance(instance(), psi0); }

inline StateVector rebit_state(const Eigen::Vector4d& x) {
  if (!(x.norm() > 0.0)) throw std::invalid_argument("qpd::rebit_state: zero vector");
  return StateVector(x.normalized().cast<cplx>());
}

// ---------------------------------------------------------------------------
// Rebit reduction

struct RebitCanonical {
  bool ok = false;
  Eigen::Vector4d x = Eigen::Vector4d::Zero();
  /// (alpha0, alpha1, alpha2) with exp(i(alpha0 + alpha1 Z_1 + alpha2 Z_2)) psi = x.
  Eigen::Vector3d alphas = Eigen::Vector3d::Zero();
  /// Torus-invariant phase phi0 + phi3 - phi1 - phi2, wrapped to (-pi, pi].
  double invariant_phase = 0.0;
  /// Largest imaginary part left by the canonical phase choice (the reduction
  /// fails iff sin(invariant_phase) != 0 with all amplitudes nonzero).
  double obstruction = 0.0;
};

namespace detail {

inline double wrap_phase(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

inline CVector torus_action(const CVector& psi, const Eigen::Vector3d& a) {
  // Z eigenvalues (z1, z2) on |00>, |01>, |10>, |11>.
  static constexpr std::array<std::array<int, 2>, 4> zs{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
  CVector out(4);
  for (int j = 0; j < 4; ++j) {
    const auto& z = zs[static_cast<std::size_t>(j)];
    out(j) = std::polar(1.0, a(0) + a(1) * z[0] + a(2) * z[1]) * psi(j);
  }
  return out;
}

}  // namespace detail

/// exp(i(alpha0 + alpha1 Z_1 + alpha2 Z_2)) applied to a two-qubit state.
inline StateVector torus_action(const StateVector& psi, const Eigen::Vector3d& alphas) {
  if (psi.dim() != 4) throw std::invalid_argument("qpd::torus_action: two-qubit state required");
  return StateVector(detail::torus_action(psi.amplitudes(), alphas));
}

/// Removes the phases of a two-qubit state with the diagonal torus. Succeeds
/// iff the state is torus-equivalent to a real vector; otherwise reports the
/// irreducible phase on |11>.
inline RebitCanonical rebit_canonicalize(const StateVector& psi, double tol = 1e-10) {
  if (psi.dim() != 4) throw std::invalid_argument("qpd::rebit_canonicalize: two-qubit state required");
  const CVector& c = psi.amplitudes();
  std::array<double, 4> mag{}, phi{};
  std::array<bool, 4> zero{};
  for (int j = 0; j < 4; ++j) {
    const auto u = static_cast<std::size_t>(j);
    mag[u] = std::abs(c(j));
    zero[u] = mag[u] <= tol;
    phi[u] = zero[u] ? 0.0 : std::arg(c(j));
  }
  // A vanishing amplitude frees its phase: pick it so the invariant phase is 0.
  if (zero[1] && !zero[2]) {
    phi[1] = phi[0] + phi[3] - phi[2];
  } else if (zero[2] && !zero[1]) {
    phi[2] = phi[0] + phi[3] - phi[1];
  } else if (zero[0]) {
    phi[0] = phi[1] + phi[2] - phi[3];
  }

  RebitCanonical out;
  Eigen::Vector3d a((-(phi[1] + phi[2])) / 2.0, (phi[2] - phi[0]) / 2.0, (phi[1] - phi[0]) / 2.0);
  double phi3 = detail::wrap_phase(phi[0] + phi[3] - phi[1] - phi[2]);
  out.invariant_phase = zero[3] ? 0.0 : phi3;
  if (zero[1] && zero[2]) {
    // Extra Z_1 rotation absorbs the phase between |00> and |11>.
    a(0) -= phi3 / 2.0;
    a(1) += phi3 / 2.0;
    phi3 = 0.0;
  }
  const CVector v = detail::torus_action(c, a);
  out.alphas = a;
  out.obstruction = v.imag().cwiseAbs().maxCoeff();
  out.ok = out.obstruction <= tol;
  out.x = v.real();
  if (!out.ok) out.x.setZero();
  return out;
}

// ---------------------------------------------------------------------------
// Variety and Nash maxima in rebit coordinates

/// (2 X0 X2 + X1 X3, 2 X0 X1 + X2 X3).
inline Eigen::Vector2d variety_residual(const Eigen::Vector4d& x) {
  return {2.0 * x(0) * x(2) + x(1) * x(3), 2.0 * x(0) * x(1) + x(2) * x(3)};
}

/// Left-hand sides of the two Nash-maximum inequalities (<= 0 on the set).
inline Eigen::Vector2d nash_max_margins(const Eigen::Vector4d& x) {
  const Eigen::Vector4d s = x.cwiseAbs2();
  return {2.0 * (s(0) - s(2)) + (s(1) - s(3)), 2.0 * (s(0) - s(1)) + (s(2) - s(3))};
}

/// Nash-maximum test for a rebit Nash state. Off-variety input is rejected,
/// since the inequalities only characterize maxima among Nash states.
inline bool nash_max_check(const Eigen::Vector4d& x, double tol = kNashTol) {
  const double n2 = x.squaredNorm();
  if (!(n2 > 0.0)) throw std::invalid_argument("qpd::nash_max_check: zero vector");
  if (variety_residual(x).cwiseAbs().maxCoeff() > tol * n2) {
    throw std::domain_error("qpd::nash_max_check: point is not on the Nash variety");
  }
  const Eigen::Vector2d m = nash_max_margins(x);
  return m(0) <= tol * n2 && m(1) <= tol * n2;
}

/// chi^2 = (X0 X3 - X1 X2)^2 for a unit rebit.
inline double entanglement_parameter(const Eigen::Vector4d& x) {
  const double d = x(0) * x(3) - x(1) * x(2);
  return d * d;
}

/// |c00 c11 - c01 c10|^2 for a normalized two-qubit state; reduces to the
/// rebit formula on real states and is invariant under local unitaries.
inline double entanglement_parameter(const StateVector& psi) {
  if (psi.dim() != 4) throw std::invalid_argument("qpd::entanglement_parameter: two-qubit state required");
  const CVector& c = psi.amplitudes();
  return std::norm(c(0) * c(3) - c(1) * c(2));
}

/// Variety forms on R^4: X^T Q X = residual component.
inline std::vector<RMatrix> variety_forms() {
  RMatrix q1 = RMatrix::Zero(4, 4), q2 = RMatrix::Zero(4, 4);
  q1(0, 2) = q1(2, 0) = 1.0;
  q1(1, 3) = q1(3, 1) = 0.5;
  q2(0, 1) = q2(1, 0) = 1.0;
  q2(2, 3) = q2(3, 2) = 0.5;
  return {q1, q2};
}

inline QuadricSystem variety_system() { return QuadricSystem(4, variety_forms(), Gauge::sign); }

// ---------------------------------------------------------------------------
// Entanglement orbits in projected coordinates

enum class OrbitFamily { separable, max_entangled_a, max_entangled_b, generic_plus, generic_minus };

inline std::string to_string(OrbitFamily f) {
  switch (f) {
    case OrbitFamily::separable: return "separable";
    case OrbitFamily::max_entangled_a: return "max_entangled_a";
    case OrbitFamily::max_entangled_b: return "max_entangled_b";
    case OrbitFamily::generic_plus: return "generic_plus";
    case OrbitFamily::generic_minus: return "generic_minus";
  }
  return "unknown";
}

/// Defining equations of the real two-qubit orbits in stereographic
/// coordinates, returned as the largest absolute residual.
///   separable:        (1 - r^2) z - 2xy
///   max_entangled_a:  x = -y, (z + 1)^2 + x^2 + y^2 = 2   (X0 = X3, X1 = -X2)
///   max_entangled_b:  x = y,  (z - 1)^2 + x^2 + y^2 = 2   (X0 = -X3, X1 = X2)
///   generic_plus/minus: 2((1 - r^2) z - 2xy) +/- chi (1 + r^2)^2, i.e.
///   X0 X3 - X1 X2 = -/+ chi.
inline double orbit_residual(const Eigen::Vector3d& p, double chi, OrbitFamily family) {
  const double x = p(0), y = p(1), z = p(2);
  const double r2 = p.squaredNorm();
  const double sep = (1.0 - r2) * z - 2.0 * x * y;
  switch (family) {
    case OrbitFamily::separable: return std::abs(sep);
    case OrbitFamily::max_entangled_a:
      return std::max(std::abs(x + y), std::abs((z + 1.0) * (z + 1.0) + x * x + y * y - 2.0));
    case OrbitFamily::max_entangled_b:
      return std::max(std::abs(x - y), std::abs((z - 1.0) * (z - 1.0) + x * x + y * y - 2.0));
    case OrbitFamily::generic_plus:
    case OrbitFamily::generic_minus: {
      if (!(chi >= 0.0 && chi <= 0.5)) throw std::invalid_argument("qpd::orbit_residual: chi must lie in [0, 1/2]");
      const double s = family == OrbitFamily::generic_plus ? 1.0 : -1.0;
      return std::abs(2.0 * sep + s * chi * (1.0 + r2) * (1.0 + r2));
    }
  }
  return 0.0;
}

struct OrbitPoint {
  Eigen::Vector4d rebit = Eigen::Vector4d::Zero();
  /// Stereographic image; empty at the pole X0 = -1.
  std::optional<Eigen::Vector3d> projected;
  double determinant = 0.0;  ///< X0 X3 - X1 X2
  double variety_residual = 0.0;
  bool nash_max = false;
  Eigen::Vector2d payoffs = Eigen::Vector2d::Zero();
};

struct IntersectionOptions {
  int n_starts = 400;
  std::uint64_t seed = 7;
  double tol = kNashTol;
  double dedup_tol = 1e-6;
  /// Quotient by X ~ -X instead of reporting the double cover.
  bool quotient_antipodal = false;
};

namespace detail {

inline RMatrix determinant_form(double target) {
  // X^T Q X = X0 X3 - X1 X2 - target |X|^2.
  RMatrix q = -target * RMatrix::Identity(4, 4);
  q(0, 3) = q(3, 0) = 0.5;
  q(1, 2) = q(2, 1) = -0.5;
  return q;
}

inline OrbitPoint make_point(const Eigen::Vector4d& x, double tol) {
  const auto [h1, h2] = payoff_operators();
  OrbitPoint p;
  p.rebit = x.normalized();
  if (1.0 + p.rebit(0) > 1e-12) p.projected = stereographic(p.rebit);
  p.determinant = p.rebit(0) * p.rebit(3) - p.rebit(1) * p.rebit(2);
  p.variety_residual = variety_residual(p.rebit).cwiseAbs().maxCoeff();
  p.nash_max = nash_max_check(p.rebit, tol);
  const StateVector s = rebit_state(p.rebit);
  p.payoffs << expectation_real(s, h1), expectation_real(s, h2);
  return p;
}

}  // namespace detail

/// Solves {variety, orbit} on the unit sphere of R^4 by Newton multistart and
/// maps the solutions to projected coordinates. Maximal entanglement
/// (chi = 1/2) uses the linear description of the two orbits because the
/// determinant level set is not transversal there.
inline std::vector<OrbitPoint> orbit_variety_intersections(double chi, const IntersectionOptions& opt = {}) {
  if (!(chi >= 0.0 && chi <= 0.5)) throw std::invalid_argument("qpd::orbit_variety_intersections: chi must lie in [0, 1/2]");
  std::vector<QuadricSystem> systems;
  if (std::abs(chi - 0.5) < 1e-12) {
    RVector a1(4), a2(4), b1(4), b2(4);
    a1 << 1, 0, 0, -1;
    a2 << 0, 1, 1, 0;
    b1 << 1, 0, 0, 1;
    b2 << 0, 1, -1, 0;
    systems.emplace_back(4, variety_forms(), Gauge::none, std::vector<RVector>{a1, a2});
    systems.emplace_back(4, variety_forms(), Gauge::none, std::vector<RVector>{b1, b2});
  } else {
    const std::vector<double> targets = chi == 0.0 ? std::vector<double>{0.0} : std::vector<double>{chi, -chi};
    for (double t : targets) {
      auto forms = variety_forms();
      forms.push_back(detail::determinant_form(t));
      systems.emplace_back(4, std::move(forms), Gauge::none);
    }
  }

  SearchOptions so;
  so.dedup_tol = opt.dedup_tol;
  std::vector<OrbitPoint> out;
  for (std::size_t k = 0; k < systems.size(); ++k) {
    const auto found = random_start_search(systems[k], opt.n_starts, opt.seed + k, so);
    for (const auto& vp : found.points) {
      Eigen::Vector4d x = vp.coords;
      bool dup = false;
      for (const auto& q : out) {
        const double d = opt.quotient_antipodal ? std::min((q.rebit - x).norm(), (q.rebit + x).norm()) : (q.rebit - x).norm();
        dup = dup || d < opt.dedup_tol;
      }
      if (!dup) out.push_back(detail::make_point(x, opt.tol));
    }
  }
  if (opt.quotient_antipodal) {
    for (auto& p : out) {
      // Representative with the first non-negligible coordinate positive.
      for (int j = 0; j < 4; ++j) {
        if (std::abs(p.rebit(j)) > 1e-9) {
          if (p.rebit(j) < 0) p = detail::make_point(-p.rebit, opt.tol);
          break;
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const OrbitPoint& a, const OrbitPoint& b) {
    for (int j = 0; j < 4; ++j) {
      if (std::abs(a.rebit(j) - b.rebit(j)) > 1e-9) return a.rebit(j) < b.rebit(j);
    }
    return false;
  });
  return out;
}

/// Point cloud on the unit Nash variety (double cover) from Newton multistart.
inline std::vector<OrbitPoint> variety_sample(int n_points, std::uint64_t seed, double tol = kNashTol) {
  if (n_points < 1) throw std::invalid_argument("qpd::variety_sample: n_points must be positive");
  const QuadricSystem sys(4, variety_forms(), Gauge::none);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<RVector> starts(static_cast<std::size_t>(n_points), RVector(4));
  for (auto& s : starts)
    for (Eigen::Index k = 0; k < 4; ++k) s(k) = gauss(rng);
  std::vector<NewtonResult> res(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) { res[i] = newton_solve(sys, starts[i]); });
  std::vector<OrbitPoint> out;
  for (const auto& r : res) {
    if (r.converged) out.push_back(detail::make_point(r.point.coords, tol));
  }
  return out;
}

}  // namespace qpd
}  // namespace nash
