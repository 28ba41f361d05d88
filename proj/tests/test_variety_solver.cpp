#include <gtest/gtest.h>

#include <nash/variety_solver.hpp>

#include "support/fixtures.hpp"

#include <cmath>

using namespace nash;

namespace {

NashInstance real_pair(std::uint64_t seed) { return random_real_pair(seed); }

NashInstance complex_instance(int n, std::uint64_t seed) { return random_complex_instance(n, seed); }

RVector to_real(const CVector& psi) {
  RVector v(2 * psi.size());
  v << psi.real(), psi.imag();
  return v;
}

RVector phase_rotate(const RVector& v, double t) {
  const Eigen::Index d = v.size() / 2;
  RVector out(v.size());
  out.head(d) = std::cos(t) * v.head(d) - std::sin(t) * v.tail(d);
  out.tail(d) = std::sin(t) * v.head(d) + std::cos(t) * v.tail(d);
  return out;
}

// Some W' point of a random real-symmetric pair.
VarietyPoint w_point(const QuadricSystem& w, std::uint64_t seed) {
  const auto found = random_start_search(w, 20, seed);
  if (found.points.empty()) throw std::runtime_error("no W' point found");
  return found.points.front();
}

}  // namespace

TEST(BuildSystem, GeneralFormsMatchCommutatorExpectations) {
  const auto inst = complex_instance(2, 10);
  const auto sys = build_system(inst, false);
  EXPECT_EQ(sys.forms().size(), 6U);
  EXPECT_EQ(sys.ambient_dim(), 8);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto psi = random_state(4, 20 + s);
    const RVector r = sys.residuals(to_real(psi.amplitudes()));
    const auto res = nash_residual(psi, inst);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(r(static_cast<Eigen::Index>(3 * i + a)), res.components[i][a], 1e-12);
  }
}

TEST(BuildSystem, RealSymmetricStructure) {
  const auto inst = real_pair(30);
  const auto sys = build_system(inst, true);
  ASSERT_EQ(sys.forms().size(), 6U);
  ASSERT_TRUE(sys.rebit_blocks().has_value());
  const auto& rb = *sys.rebit_blocks();
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LT((rb.bx[i] + rb.bx[i].transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((rb.bz[i] + rb.bz[i].transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((rb.by[i] - rb.by[i].transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
  const auto general = build_system(inst, false);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const RVector v = to_real(random_state(4, 40 + s).amplitudes());
    const RVector a = sys.residuals(v), b = general.residuals(v);
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(a(3 * i + 0), -0.5 * b(3 * i + 0), 1e-12);
      EXPECT_NEAR(a(3 * i + 1), b(3 * i + 1), 1e-12);
      EXPECT_NEAR(a(3 * i + 2), -0.5 * b(3 * i + 2), 1e-12);
      const Eigen::Vector4d x = v.head(4), y = v.tail(4);
      EXPECT_NEAR(a(3 * i + 0), x.dot(rb.bx[static_cast<std::size_t>(i)] * y), 1e-12);
      EXPECT_NEAR(a(3 * i + 1), x.dot(rb.by[static_cast<std::size_t>(i)] * x) + y.dot(rb.by[static_cast<std::size_t>(i)] * y), 1e-12);
    }
  }
}

TEST(BuildSystem, DiagonalObservablesVanishOnBasis) {
  std::vector<DenseOperator> obs;
  for (std::uint64_t s = 0; s < 2; ++s) {
    CMatrix d = CMatrix::Zero(4, 4);
    d.diagonal() = random_hermitian(4, s, true).matrix().diagonal();
    obs.push_back(DenseOperator::hermitian(d));
  }
  const auto sys = build_system(NashInstance::single_qubit_su2(2, obs), true);
  for (int k = 0; k < 4; ++k) {
    RVector v = RVector::Zero(8);
    v(k) = 1.0;
    EXPECT_LT(sys.residuals(v).cwiseAbs()(1), 1e-15);
    EXPECT_LT(sys.residuals(v).cwiseAbs()(4), 1e-15);
  }
}

TEST(BuildSystem, RejectsComplexInRealMode) {
  EXPECT_THROW(build_system(complex_instance(2, 3), true), std::invalid_argument);
  EXPECT_THROW(build_system(complex_instance(3, 3), true), std::invalid_argument);
}

TEST(QuadricSystemTest, HomogeneityAndGaugeInvariance) {
  const auto sys = build_system(complex_instance(2, 50), false);
  const RVector v = to_real(random_state(4, 51).amplitudes());
  for (double s : {-2.0, 0.3, 7.0}) {
    const RVector a = sys.residuals(s * v), b = sys.residuals(v);
    EXPECT_LT((a - s * s * b).cwiseAbs().maxCoeff(), 1e-12 * s * s);
  }
  for (double t : {0.1, 1.3, 4.0}) EXPECT_LT((sys.residuals(phase_rotate(v, t)) - sys.residuals(v)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Newton, StartOnVarietyIsUnchanged) {
  const auto sys = tilde_w_system(build_system(real_pair(60), true));
  const auto p = w_point(sys, 61);
  const auto r = newton_solve(sys, p.coords);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_LT((r.point.coords - p.coords).norm(), 1e-15);
}

TEST(Newton, QpdPerturbedDefectConverges) {
  CMatrix h1 = CMatrix::Zero(4, 4), h2 = CMatrix::Zero(4, 4);
  h1.diagonal() << 3, 0, 5, 1;
  h2.diagonal() << 3, 5, 0, 1;
  const auto sys = build_system(NashInstance::single_qubit_su2(2, {DenseOperator::hermitian(h1), DenseOperator::hermitian(h2)}), false);
  RVector start = RVector::Zero(8);
  start(3) = 1.0;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1e-3);
  for (Eigen::Index k = 0; k < 8; ++k) start(k) += g(rng);
  const auto r = newton_solve(sys, start);
  ASSERT_TRUE(r.converged);
  EXPECT_LT(r.point.residual, 1e-12);
  RVector e3 = RVector::Zero(8);
  e3(3) = 1.0;
  EXPECT_LT(gauge_distance(sys, r.point.coords, e3), 1e-2);
}

TEST(Newton, FailuresAreExplicit) {
  const auto sys = build_system(complex_instance(2, 70), false);
  EXPECT_EQ(newton_solve(sys, RVector::Zero(8)).failure, NewtonFailure::zero_start);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  int converged = 0;
  for (int t = 0; t < 30; ++t) {
    RVector s(8);
    for (Eigen::Index k = 0; k < 8; ++k) s(k) = g(rng);
    const auto r = newton_solve(sys, s);
    if (r.converged) {
      ++converged;
      EXPECT_LT(sys.residual(r.point.coords), 1e-10);
      EXPECT_NEAR(r.point.coords.norm(), 1.0, 1e-12);
    } else {
      EXPECT_NE(r.failure, NewtonFailure::none);
    }
  }
  EXPECT_GT(converged, 0);
}

TEST(Search, RealSymmetricPointsSatisfyAllQuadrics) {
  const auto full = build_system(real_pair(80), true);
  const auto w = tilde_w_system(full);
  const auto found = random_start_search(w, 40, 81);
  ASSERT_FALSE(found.points.empty());
  for (const auto& p : found.points) {
    EXPECT_LT(p.residual, 1e-10);
    RVector v = RVector::Zero(8);
    v.head(4) = p.coords;
    EXPECT_LT(full.residual(v), 1e-10);
  }
}

TEST(Search, DeterministicAndDeduplicated) {
  const auto sys = build_system(complex_instance(2, 90), false);
  const auto a = random_start_search(sys, 30, 5);
  const auto b = random_start_search(sys, 30, 5);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ((a.points[i].coords - b.points[i].coords).norm(), 0.0);
  for (std::size_t i = 0; i < a.points.size(); ++i)
    for (std::size_t j = i + 1; j < a.points.size(); ++j) EXPECT_GT(gauge_distance(sys, a.points[i].coords, a.points[j].coords), 1e-6);
}

TEST(Search, DiagonalInstanceHasBasisSolutions) {
  CMatrix d = CMatrix::Zero(4, 4);
  d.diagonal() << 0.3, -1.2, 2.0, 0.7;
  const auto h = DenseOperator::hermitian(d);
  const auto sys = build_system(NashInstance::single_qubit_su2(2, {h, h}), false);
  for (int k = 0; k < 4; ++k) {
    RVector e = RVector::Zero(8);
    e(k) = 1.0;
    const auto r = newton_solve(sys, e);
    ASSERT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 0);
  }
  const auto found = random_start_search(sys, 40, 3);
  for (const auto& p : found.points) EXPECT_LT(p.residual, 1e-10);
}

TEST(LocalDimension, GenericComplexTwoQubitsIsIsolated) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto sys = build_system(complex_instance(2, 100 + 10 * s), false);
    const auto found = random_start_search(sys, 30, s);
    ASSERT_FALSE(found.points.empty());
    for (const auto& p : found.points) EXPECT_EQ(estimate_local_dimension(sys, p).est_dim, 0);
  }
}

TEST(LocalDimension, GenericComplexThreeQubitsIsFive) {
  const auto sys = build_system(complex_instance(3, 200), false);
  const auto found = random_start_search(sys, 5, 1);
  ASSERT_FALSE(found.points.empty());
  for (const auto& p : found.points) {
    const auto frame = estimate_local_dimension(sys, p);
    EXPECT_EQ(frame.est_dim, 5);
    for (const auto& b : frame.basis) {
      EXPECT_LT(std::abs(b.dot(p.coords)), 1e-10);
      EXPECT_LT(std::abs(b.dot(sys.gauge_directions(p.coords)[0])), 1e-10);
    }
  }
}

TEST(LocalDimension, TildeWIsOneManifoldAndStable) {
  const auto full = build_system(real_pair(300), true);
  const auto w = tilde_w_system(full);
  const auto p = w_point(w, 301);
  for (double tol : {1e-8, 1e-7, 1e-6, 1e-5}) EXPECT_EQ(estimate_local_dimension(w, p, tol).est_dim, 1);
  RVector v = RVector::Zero(8);
  v.head(4) = p.coords;
  EXPECT_EQ(estimate_local_dimension(full, VarietyPoint{v, full.residual(v), ChartTag::sphere}).est_dim, 1);
  EXPECT_THROW(estimate_local_dimension(w, VarietyPoint{RVector::Unit(4, 0) + 0.5 * RVector::Unit(4, 1), 1.0, ChartTag::sphere}),
               std::invalid_argument);
}

TEST(Trace, GenericRealPairClosesIntoLoops) {
  int closed = 0;
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto w = tilde_w_system(build_system(real_pair(400 + 10 * s), true));
    const auto p = w_point(w, s);
    const auto tr = trace_component(w, p, 0.02, 10000);
    EXPECT_TRUE(tr.completed) << tr.diagnostic;
    for (const auto& q : tr.points) EXPECT_LT(w.residual(q.coords), 1e-10);
    closed += tr.closed ? 1 : 0;
  }
  EXPECT_GE(closed, 3);
}

TEST(Trace, HalvedStepStaysClose) {
  const auto w = tilde_w_system(build_system(real_pair(500), true));
  const auto p = w_point(w, 7);
  const double step = 0.04;
  const auto coarse = trace_component(w, p, step, 10000);
  const auto fine = trace_component(w, p, step / 2, 20000);
  ASSERT_TRUE(coarse.closed);
  ASSERT_TRUE(fine.closed);
  auto directed = [](const TraceResult& a, const TraceResult& b) {
    double worst = 0.0;
    for (const auto& x : a.points) {
      double best = 1e300;
      for (const auto& y : b.points) best = std::min(best, (x.coords - y.coords).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  EXPECT_LT(std::max(directed(coarse, fine), directed(fine, coarse)), step);
}

TEST(Trace, GaugeEquivalentStartGivesSameCurve) {
  const auto w = tilde_w_system(build_system(real_pair(600), true));
  const auto p = w_point(w, 9);
  const auto a = trace_component(w, p, 0.03, 10000);
  const auto b = trace_component(w, VarietyPoint{-p.coords, p.residual, ChartTag::sphere}, 0.03, 10000);
  ASSERT_TRUE(a.closed);
  ASSERT_TRUE(b.closed);
  double worst = 0.0;
  for (const auto& x : b.points) {
    double best = 1e300;
    for (const auto& y : a.points) best = std::min(best, gauge_distance(w, x.coords, y.coords));
    worst = std::max(worst, best);
  }
  EXPECT_LT(worst, 0.03);
}

TEST(Trace, RejectsWrongDimension) {
  const auto sys = build_system(complex_instance(2, 700), false);
  const auto found = random_start_search(sys, 20, 1);
  ASSERT_FALSE(found.points.empty());
  EXPECT_THROW(trace_component(sys, found.points[0], 0.01, 10), std::invalid_argument);
}

TEST(TildeV, Membership) {
  const auto full = build_system(real_pair(800), true);
  const auto p = w_point(tilde_w_system(full), 2);
  const Eigen::Vector4d x = p.coords;
  EXPECT_TRUE(tilde_v_membership(x, 0.0, full));
  EXPECT_TRUE(tilde_v_membership(x, 3.7, full));
  EXPECT_FALSE(tilde_v_membership(Eigen::Vector4d(0.3, -0.5, 0.7, 0.41).normalized(), 1.0, full));
  EXPECT_THROW(tilde_v_membership(x, 0.0, build_system(complex_instance(2, 1), false)), std::invalid_argument);
}

TEST(Stereographic, Examples) {
  EXPECT_LT(stereographic(Eigen::Vector4d(1, 0, 0, 0)).norm(), 1e-15);
  EXPECT_LT((stereographic(Eigen::Vector4d(0, 0, 0, 1)) - Eigen::Vector3d(0, 0, 1)).norm(), 1e-15);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_LT((stereographic(Eigen::Vector4d(0, r, r, 0)) - Eigen::Vector3d(r, r, 0)).norm(), 1e-15);
  EXPECT_THROW(stereographic(Eigen::Vector4d(-1, 0, 0, 0)), std::domain_error);
  EXPECT_LT((stereographic(Eigen::Vector4d(-1, 0, 0, 0), Chart::antipodal)).norm(), 1e-15);
}

TEST(Stereographic, RoundTrip) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Vector4d p = Eigen::Vector4d(g(rng), g(rng), g(rng), g(rng)).normalized();
    for (Chart c : {Chart::standard, Chart::antipodal}) {
      EXPECT_LT((inverse_stereographic(stereographic(p, c), c) - p).norm(), 1e-12);
    }
    const Eigen::Vector3d x(g(rng), g(rng), g(rng));
    EXPECT_LT((stereographic(inverse_stereographic(x)) - x).norm(), 1e-12 * std::max(1.0, x.squaredNorm()));
  }
}
