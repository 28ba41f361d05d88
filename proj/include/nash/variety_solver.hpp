#pragma once

// Real quadratic systems from Nash conditions: construction, multistart
// Gauss-Newton, local dimension estimates, curve tracing and the S^3 chart.

#include <nash/nash_conditions.hpp>
#include <nash/parallel.hpp>

#include <Eigen/SVD>

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace nash {

/// Symmetry acting on solution sets besides positive rescaling.
enum class Gauge {
  phase,  ///< (x, y) -> (cos t x - sin t y, sin t x + cos t y) on R^{2d}
  sign,   ///< v -> -v
  none
};

/// Per-block matrices of the real-symmetric two-qubit system:
/// bx = [h, X_i], by = i[h, Y_i], bz = [h, Z_i] as real 4x4 matrices.
struct RebitBlocks {
  std::vector<Eigen::Matrix4d> bx, by, bz;
};

/// Homogeneous constraints v^T Q_c v = 0 and l_k . v = 0 on R^n.
class QuadricSystem {
 public:
  QuadricSystem() = default;

  QuadricSystem(Eigen::Index ambient_dim, std::vector<RMatrix> forms, Gauge gauge, std::vector<RVector> linear = {})
      : ambient_dim_(ambient_dim), forms_(std::move(forms)), linear_(std::move(linear)), gauge_(gauge) {
    if (ambient_dim_ < 1) throw std::invalid_argument("QuadricSystem: ambient dimension must be positive");
    if (gauge_ == Gauge::phase && ambient_dim_ % 2 != 0) {
      throw std::invalid_argument("QuadricSystem: phase gauge needs an even ambient dimension");
    }
    for (auto& q : forms_) {
      if (q.rows() != ambient_dim_ || q.cols() != ambient_dim_) throw std::invalid_argument("QuadricSystem: form size mismatch");
      const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
      if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw std::invalid_argument("QuadricSystem: forms must be symmetric");
      }
      q = (0.5 * (q + q.transpose())).eval();
    }
    for (const auto& l : linear_) {
      if (l.size() != ambient_dim_) throw std::invalid_argument("QuadricSystem: linear constraint size mismatch");
    }
    if (forms_.empty() && linear_.empty()) throw std::invalid_argument("QuadricSystem: no constraints");
  }

  [[nodiscard]] Eigen::Index ambient_dim() const { return ambient_dim_; }
  [[nodiscard]] const std::vector<RMatrix>& forms() const { return forms_; }
  [[nodiscard]] const std::vector<RVector>& linear() const { return linear_; }
  [[nodiscard]] Gauge gauge() const { return gauge_; }
  [[nodiscard]] std::size_t n_equations() const { return forms_.size() + linear_.size(); }
  [[nodiscard]] const std::optional<RebitBlocks>& rebit_blocks() const { return rebit_; }
  void set_rebit_blocks(RebitBlocks b) { rebit_ = std::move(b); }

  [[nodiscard]] RVector residuals(const RVector& v) const {
    check(v);
    RVector r(static_cast<Eigen::Index>(n_equations()));
    Eigen::Index k = 0;
    for (const auto& q : forms_) r(k++) = v.dot(q * v);
    for (const auto& l : linear_) r(k++) = l.dot(v);
    return r;
  }

  [[nodiscard]] double residual(const RVector& v) const {
    const RVector r = residuals(v);
    return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
  }

  [[nodiscard]] RMatrix jacobian(const RVector& v) const {
    check(v);
    RMatrix j(static_cast<Eigen::Index>(n_equations()), ambient_dim_);
    Eigen::Index k = 0;
    for (const auto& q : forms_) j.row(k++) = 2.0 * (q * v).transpose();
    for (const auto& l : linear_) j.row(k++) = l.transpose();
    return j;
  }

  /// Orthonormal basis of infinitesimal gauge directions at unit v (empty
  /// unless the gauge is continuous).
  [[nodiscard]] std::vector<RVector> gauge_directions(const RVector& v) const {
    check(v);
    if (gauge_ != Gauge::phase) return {};
    const Eigen::Index d = ambient_dim_ / 2;
    RVector g(ambient_dim_);
    g.head(d) = -v.tail(d);
    g.tail(d) = v.head(d);
    const double n = g.norm();
    if (n == 0.0) return {};
    return {g / n};
  }

 private:
  void check(const RVector& v) const {
    if (v.size() != ambient_dim_) throw std::invalid_argument("QuadricSystem: vector size mismatch");
  }

  Eigen::Index ambient_dim_ = 0;
  std::vector<RMatrix> forms_;
  std::vector<RVector> linear_;
  Gauge gauge_ = Gauge::none;
  std::optional<RebitBlocks> rebit_;
};

enum class ChartTag { sphere, stereographic };

struct VarietyPoint {
  RVector coords;
  double residual = 0.0;
  ChartTag chart_tag = ChartTag::sphere;
};

struct TangentFrame {
  VarietyPoint base;
  std::vector<RVector> basis;
  int est_dim = 0;
  RVector singular_values;
};

// ---------------------------------------------------------------------------
// System construction

namespace detail {

// psi^dag C psi for psi = x + i y, as a form on (x, y):
// C = R + iS  ->  [[R, -S], [S, R]].
inline RMatrix realify(const CMatrix& c) {
  const Eigen::Index d = c.rows();
  RMatrix q(2 * d, 2 * d);
  const RMatrix r = c.real(), s = c.imag();
  q.topLeftCorner(d, d) = r;
  q.topRightCorner(d, d) = -s;
  q.bottomLeftCorner(d, d) = s;
  q.bottomRightCorner(d, d) = r;
  return 0.5 * (q + q.transpose());
}

inline bool is_standard_su2(const std::vector<LocalOperator>& gens) {
  if (gens.size() != 3) return false;
  const std::array<Pauli, 3> order{Pauli::X, Pauli::Y, Pauli::Z};
  for (std::size_t a = 0; a < 3; ++a) {
    if (gens[a].support().size() != 1) return false;
    if ((gens[a].local().matrix() - kI * pauli_matrix(order[a])).cwiseAbs().maxCoeff() > 1e-14) return false;
  }
  return true;
}

}  // namespace detail

/// One form per (block, generator) on R^{2d}, with v^T Q v = <[h_i, A_ia]>.
///
/// With real_symmetric the instance must be two qubits with single-qubit
/// blocks and generators (iX, iY, iZ); the forms are then, per block,
///   x^T B_X y,  x^T B_Y x + y^T B_Y y,  x^T B_Z y,
/// where the X and Z forms equal -(1/2)<[h, iX]> and -(1/2)<[h, iZ]>.
inline QuadricSystem build_system(const NashInstance& inst, bool real_symmetric) {
  const Eigen::Index d = inst.dim();
  std::vector<RMatrix> forms;
  if (!real_symmetric) {
    for (std::size_t i = 0; i < inst.size(); ++i) {
      const CMatrix& h = inst.observable(i).matrix();
      for (const auto& a : inst.generators(i)) {
        const CMatrix c = a.apply_right(h) - a.apply(h);
        forms.push_back(detail::realify(c));
      }
    }
    return QuadricSystem(2 * d, std::move(forms), Gauge::phase);
  }

  if (inst.n_qubits() != 2 || inst.size() != 2) {
    throw std::invalid_argument("build_system: real-symmetric mode needs two observables on two qubits");
  }
  RebitBlocks rb;
  for (std::size_t i = 0; i < 2; ++i) {
    const CMatrix& h = inst.observable(i).matrix();
    if (h.imag().cwiseAbs().maxCoeff() > 1e-14) {
      throw std::invalid_argument("build_system: real-symmetric mode requested but an observable has imaginary parts");
    }
    if (inst.blocks()[i].size() != 1 || !detail::is_standard_su2(inst.generators(i))) {
      throw std::invalid_argument("build_system: real-symmetric mode needs single-qubit blocks with generators (iX, iY, iZ)");
    }
    const int q = inst.blocks()[i][0];
    auto site = [&](Pauli p) { return embed(pauli(p), {q}, 2).matrix(); };
    const CMatrix bx = h * site(Pauli::X) - site(Pauli::X) * h;
    const CMatrix by = kI * (h * site(Pauli::Y) - site(Pauli::Y) * h);
    const CMatrix bz = h * site(Pauli::Z) - site(Pauli::Z) * h;
    rb.bx.push_back(bx.real());
    rb.by.push_back(by.real());
    rb.bz.push_back(bz.real());
    const RMatrix z4 = RMatrix::Zero(4, 4);
    auto cross = [&](const Eigen::Matrix4d& b) {
      RMatrix q8(8, 8);
      q8 << z4, 0.5 * b, 0.5 * b.transpose(), z4;
      return q8;
    };
    RMatrix qy = RMatrix::Zero(8, 8);
    qy.topLeftCorner(4, 4) = rb.by.back();
    qy.bottomRightCorner(4, 4) = rb.by.back();
    forms.push_back(cross(rb.bx.back()));
    forms.push_back(qy);
    forms.push_back(cross(rb.bz.back()));
  }
  QuadricSystem sys(8, std::move(forms), Gauge::phase);
  sys.set_rebit_blocks(std::move(rb));
  return sys;
}

/// The x-only system x^T B_iY x = 0 on R^4 (double cover under x ~ -x).
inline QuadricSystem tilde_w_system(const QuadricSystem& full) {
  if (!full.rebit_blocks()) throw std::invalid_argument("tilde_w_system: not a real-symmetric two-qubit system");
  std::vector<RMatrix> forms;
  for (const auto& b : full.rebit_blocks()->by) forms.emplace_back(b);
  return QuadricSystem(4, std::move(forms), Gauge::sign);
}

/// x^T B_iY x = 0 for both blocks; when it holds, the full system at
/// (x, lambda x) is checked to vanish too.
inline bool tilde_v_membership(const Eigen::Vector4d& x, double lambda, const QuadricSystem& sys, double tol = kNashTol) {
  if (!sys.rebit_blocks()) throw std::invalid_argument("tilde_v_membership: not a real-symmetric two-qubit system");
  for (const auto& b : sys.rebit_blocks()->by) {
    if (!(std::abs(x.dot(b * x)) < tol)) return false;
  }
  RVector v(8);
  v << x, lambda * x;
  const double full = sys.residual(v);
  if (!(full < tol * std::max(1.0, v.squaredNorm()))) {
    throw std::logic_error("tilde_v_membership: full residual does not vanish on the x-parallel family");
  }
  return true;
}

// ---------------------------------------------------------------------------
// Newton iteration

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 100;
  double damping = 0.5;
  int max_halvings = 40;
};

enum class NewtonFailure { none, zero_start, not_converged, rank_collapse, stagnation };

inline std::string to_string(NewtonFailure f) {
  switch (f) {
    case NewtonFailure::none: return "none";
    case NewtonFailure::zero_start: return "zero_start";
    case NewtonFailure::not_converged: return "not_converged";
    case NewtonFailure::rank_collapse: return "rank_collapse";
    case NewtonFailure::stagnation: return "stagnation";
  }
  return "unknown";
}

struct NewtonResult {
  bool converged = false;
  VarietyPoint point;  ///< valid only when converged
  int iterations = 0;
  double residual = 0.0;
  NewtonFailure failure = NewtonFailure::none;
};

/// Gauss-Newton on the constraints plus |v|^2 - 1, minimum-norm steps,
/// step halving until the residual norm decreases, renormalization after
/// each step.
inline NewtonResult newton_solve(const QuadricSystem& sys, const RVector& start, const NewtonOptions& opt = {}) {
  NewtonResult out;
  const double n0 = start.norm();
  if (!(n0 > 0.0) || !std::isfinite(n0)) {
    out.failure = NewtonFailure::zero_start;
    return out;
  }
  RVector v = start / n0;
  RVector f = sys.residuals(v);
  for (int it = 0;; ++it) {
    const double r = f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
    out.iterations = it;
    out.residual = r;
    if (r < opt.tol) {
      out.converged = true;
      out.point = {v, r, ChartTag::sphere};
      return out;
    }
    if (it >= opt.max_iter) {
      out.failure = NewtonFailure::not_converged;
      return out;
    }
    RMatrix j(sys.n_equations() + 1, sys.ambient_dim());
    j.topRows(static_cast<Eigen::Index>(sys.n_equations())) = sys.jacobian(v);
    j.bottomRows(1) = 2.0 * v.transpose();
    RVector rhs(f.size() + 1);
    rhs << f, 0.0;
    Eigen::JacobiSVD<RMatrix> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    if (!(smax > 1e-300)) {
      out.failure = NewtonFailure::rank_collapse;
      return out;
    }
    svd.setThreshold(1e-12);
    const RVector step = -svd.solve(rhs);
    if (!step.allFinite()) {
      out.failure = NewtonFailure::rank_collapse;
      return out;
    }
    const double fnorm = f.norm();
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, t *= opt.damping) {
      RVector cand = v + t * step;
      const double cn = cand.norm();
      if (!(cn > 0.0)) continue;
      cand /= cn;
      const RVector fc = sys.residuals(cand);
      if (fc.norm() < (1.0 - 1e-4 * t) * fnorm) {
        v = cand;
        f = fc;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.failure = NewtonFailure::stagnation;
      return out;
    }
  }
}

// ---------------------------------------------------------------------------
// Gauge handling and multistart search

/// Distance between the gauge orbits of two unit vectors.
inline double gauge_distance(const QuadricSystem& sys, const RVector& a, const RVector& b) {
  switch (sys.gauge()) {
    case Gauge::phase: {
      const Eigen::Index d = sys.ambient_dim() / 2;
      const CVector pa = a.head(d).cast<cplx>() + kI * a.tail(d).cast<cplx>();
      const CVector pb = b.head(d).cast<cplx>() + kI * b.tail(d).cast<cplx>();
      return std::sqrt(std::max(0.0, a.squaredNorm() + b.squaredNorm() - 2.0 * std::abs(pa.dot(pb))));
    }
    case Gauge::sign: return std::min((a - b).norm(), (a + b).norm());
    case Gauge::none: return (a - b).norm();
  }
  return (a - b).norm();
}

/// Gauge representative: the first entry of largest magnitude (complex
/// entry for the phase gauge) is made real and positive.
inline RVector canonicalize(const QuadricSystem& sys, const RVector& v) {
  if (sys.gauge() == Gauge::none) return v;
  if (sys.gauge() == Gauge::sign) {
    Eigen::Index k = 0;
    const double m = v.cwiseAbs().maxCoeff();
    while (std::abs(v(k)) < m * (1.0 - 1e-9)) ++k;
    return v(k) < 0.0 ? RVector(-v) : v;
  }
  const Eigen::Index d = sys.ambient_dim() / 2;
  const CVector psi = v.head(d).cast<cplx>() + kI * v.tail(d).cast<cplx>();
  const double m = psi.cwiseAbs().maxCoeff();
  Eigen::Index k = 0;
  while (std::abs(psi(k)) < m * (1.0 - 1e-9)) ++k;
  const CVector rot = psi * std::conj(psi(k)) / std::abs(psi(k));
  RVector out(2 * d);
  out.head(d) = rot.real();
  out.tail(d) = rot.imag();
  return out;
}

struct SearchOptions {
  NewtonOptions newton{};
  double dedup_tol = 1e-6;
};

struct SearchResult {
  std::vector<VarietyPoint> points;
  int converged = 0;
  int failed = 0;
};

/// Newton from n_starts Gaussian (uniform on the sphere) starts. Converged
/// points are deduplicated modulo the gauge and sorted lexicographically.
inline SearchResult random_start_search(const QuadricSystem& sys, int n_starts, std::uint64_t seed, const SearchOptions& opt = {}) {
  if (n_starts < 1) throw std::invalid_argument("random_start_search: n_starts must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<RVector> starts(static_cast<std::size_t>(n_starts), RVector(sys.ambient_dim()));
  for (auto& s : starts)
    for (Eigen::Index k = 0; k < s.size(); ++k) s(k) = gauss(rng);
  std::vector<NewtonResult> results(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) { results[i] = newton_solve(sys, starts[i], opt.newton); });

  SearchResult out;
  for (const auto& r : results) {
    if (!r.converged) {
      ++out.failed;
      continue;
    }
    ++out.converged;
    bool dup = false;
    for (const auto& p : out.points) {
      if (gauge_distance(sys, p.coords, r.point.coords) < opt.dedup_tol) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      VarietyPoint p = r.point;
      p.coords = canonicalize(sys, p.coords);
      p.residual = sys.residual(p.coords);
      out.points.push_back(std::move(p));
    }
  }
  std::sort(out.points.begin(), out.points.end(), [](const VarietyPoint& a, const VarietyPoint& b) {
    for (Eigen::Index k = 0; k < a.coords.size(); ++k) {
      if (std::abs(a.coords(k) - b.coords(k)) > 1e-9) return a.coords(k) < b.coords(k);
    }
    return false;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Local dimension and tracing

/// Null space of the constraint Jacobian stacked with the sphere normal,
/// minus the gauge directions. Singular values below rank_tol * sigma_max
/// count as zero.
inline TangentFrame estimate_local_dimension(const QuadricSystem& sys, const VarietyPoint& p, double rank_tol = 1e-7) {
  if (!(p.residual < 1e-8) || !(sys.residual(p.coords) < 1e-8)) {
    throw std::invalid_argument("estimate_local_dimension: point is not on the variety");
  }
  const Eigen::Index n = sys.ambient_dim();
  RMatrix j(sys.n_equations() + 1, n);
  j.topRows(static_cast<Eigen::Index>(sys.n_equations())) = sys.jacobian(p.coords);
  j.bottomRows(1) = p.coords.transpose();
  Eigen::JacobiSVD<RMatrix> svd(j, Eigen::ComputeFullV);
  const RVector& sv = svd.singularValues();
  const double cut = rank_tol * sv(0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > cut) ++rank;
  RMatrix null = svd.matrixV().rightCols(n - rank);

  const auto gauge = sys.gauge_directions(p.coords);
  for (const auto& g : gauge) null -= g * (g.transpose() * null);
  TangentFrame frame;
  frame.base = p;
  frame.singular_values = sv;
  if (null.cols() > 0) {
    Eigen::JacobiSVD<RMatrix> s2(null, Eigen::ComputeThinU);
    for (Eigen::Index k = 0; k < s2.singularValues().size(); ++k) {
      if (s2.singularValues()(k) > 0.5) frame.basis.push_back(s2.matrixU().col(k));
    }
  }
  frame.est_dim = static_cast<int>(frame.basis.size());
  return frame;
}

struct TraceOptions {
  NewtonOptions newton{};
  double rank_tol = 1e-7;
  int max_retries = 6;
  int min_steps_for_closure = 3;
};

struct TraceResult {
  std::vector<VarietyPoint> points;
  bool closed = false;
  bool completed = true;  ///< false when the corrector failed mid-trace
  std::string diagnostic;
};

namespace detail {

inline double point_segment_distance(const RVector& p, const RVector& a, const RVector& b) {
  const RVector ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

}  // namespace detail

/// Predictor-corrector continuation along a one-dimensional component.
inline TraceResult trace_component(const QuadricSystem& sys, const VarietyPoint& p, double step, int max_steps,
                                   const TraceOptions& opt = {}) {
  if (!(step > 0.0)) throw std::invalid_argument("trace_component: step must be positive");
  const auto f0 = estimate_local_dimension(sys, p, opt.rank_tol);
  if (f0.est_dim != 1) {
    throw std::invalid_argument("trace_component: tangent dimension is " + std::to_string(f0.est_dim) + ", expected 1");
  }
  TraceResult out;
  out.points.push_back(p);
  const RVector start = p.coords;
  const RVector dir0 = f0.basis[0];
  RVector dir = dir0;
  RVector cur = start;
  for (int s = 1; s <= max_steps; ++s) {
    double h = step;
    std::optional<NewtonResult> ok;
    RVector t;
    for (int attempt = 0; attempt <= opt.max_retries; ++attempt, h *= 0.5) {
      const VarietyPoint here{cur, sys.residual(cur), ChartTag::sphere};
      const auto frame = estimate_local_dimension(sys, here, opt.rank_tol);
      if (frame.est_dim != 1) break;
      t = frame.basis[0];
      if (t.dot(dir) < 0.0) t = -t;
      auto r = newton_solve(sys, cur + h * t, opt.newton);
      if (r.converged && (r.point.coords - cur).norm() < 2.0 * h && (r.point.coords - cur).dot(t) > 0.0) {
        ok = std::move(r);
        break;
      }
    }
    if (!ok) {
      out.completed = false;
      out.diagnostic = "corrector failed after " + std::to_string(s - 1) + " steps";
      return out;
    }
    const RVector next = ok->point.coords;
    const RVector moved = (next - cur).normalized();
    const auto nf = estimate_local_dimension(sys, ok->point, opt.rank_tol);
    if (nf.est_dim == 1) {
      dir = nf.basis[0].dot(moved) < 0.0 ? RVector(-nf.basis[0]) : nf.basis[0];
    } else {
      dir = moved;
    }
    if (s >= opt.min_steps_for_closure && detail::point_segment_distance(start, cur, next) < 0.5 * step &&
        dir.dot(dir0) > 0.9) {
      out.closed = true;
      return out;
    }
    out.points.push_back(ok->point);
    cur = next;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stereographic chart of S^3

enum class Chart {
  standard,  ///< projects from X0 = -1
  antipodal  ///< projects from X0 = +1
};

inline Eigen::Vector3d stereographic(const Eigen::Vector4d& p, Chart chart = Chart::standard) {
  if (std::abs(p.norm() - 1.0) > 1e-12) throw std::invalid_argument("stereographic: point is not on the unit sphere");
  const double denom = chart == Chart::standard ? 1.0 + p(0) : 1.0 - p(0);
  if (denom < 1e-12) throw std::domain_error("stereographic: point is the projection pole");
  return p.tail<3>() / denom;
}

inline Eigen::Vector4d inverse_stereographic(const Eigen::Vector3d& x, Chart chart = Chart::standard) {
  const double r2 = x.squaredNorm();
  Eigen::Vector4d p;
  p(0) = (1.0 - r2) / (1.0 + r2);
  if (chart == Chart::antipodal) p(0) = -p(0);
  p.tail<3>() = 2.0 * x / (1.0 + r2);
  return p;
}

}  // namespace nash
