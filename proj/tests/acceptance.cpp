// Acceptance suite: one PASS/FAIL line per criterion at its stated tolerance.
// Exit status is the number of failed criteria.

#include <nash/experiments.hpp>
#include <nash/nash_conditions.hpp>
#include <nash/qpd.hpp>
#include <nash/tfim.hpp>
#include <nash/variety_solver.hpp>

#include "support/fixtures.hpp"

#include <json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace nash;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

const std::vector<int> kSizes{4, 6, 8, 10};
const std::vector<double> kFields{0.5, 1.0, 1.5};
const std::vector<double> kBetas{0.1, 0.5, 1.0, 2.0, 5.0};

// Exact solutions for the TFIM grid, shared by the two TFIM criteria.
const tfim::ExactSolution& exact(int n, double g) {
  static std::map<std::pair<int, double>, tfim::ExactSolution> cache;
  auto it = cache.find({n, g});
  if (it == cache.end()) it = cache.emplace(std::make_pair(n, g), tfim::ExactSolution(n, g)).first;
  return it->second;
}

bool is_bell_plus_minus(const Eigen::Vector4d& x) {
  const double s = 1.0 / std::sqrt(2.0);
  return std::abs(x(0)) < 1e-9 && std::abs(x(3)) < 1e-9 && std::abs(std::abs(x(1)) - s) < 1e-9 &&
         std::abs(std::abs(x(2)) - s) < 1e-9;
}

Outcome payoff_table() {
  const auto [h1, h2] = qpd::payoff_operators();
  // Rows CC, CD, DC, DD; basis |00>, |01>, |10>, |11>.
  const double table[4][2] = {{3, 3}, {0, 5}, {5, 0}, {1, 1}};
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    CVector e = CVector::Zero(4);
    e(k) = 1.0;
    const StateVector s(e);
    worst = std::max(worst, std::abs(expectation_real(s, h1) - table[k][0]));
    worst = std::max(worst, std::abs(expectation_real(s, h2) - table[k][1]));
  }
  const auto bell = payoffs(qpd::game(qpd::rebit_state(Eigen::Vector4d(0, 1, 1, 0))));
  const double bell_err = std::max(std::abs(bell(0) - 2.5), std::abs(bell(1) - 2.5));
  return {worst <= 1e-12 && bell_err <= 1e-12, "table error " + fmt(worst) + ", Bell payoff error " + fmt(bell_err)};
}

Outcome separable_intersection() {
  const auto pts = qpd::orbit_variety_intersections(0.0);
  int n_max = 0;
  bool ok = true;
  for (const auto& p : pts) {
    if (!p.nash_max) continue;
    ++n_max;
    ok = ok && p.projected && std::abs((*p.projected)(0)) < 1e-6 && std::abs((*p.projected)(1)) < 1e-6 &&
         std::abs(std::abs((*p.projected)(2)) - 1.0) < 1e-6;
    // Projectively |11>: all weight on the last amplitude.
    ok = ok && std::abs(std::abs(p.rebit(3)) - 1.0) < 1e-6;
  }
  // The same result through the command-line driver.
  const std::string cmd = std::string(NASH_CLI_PATH) + " qpd orbits --chi 0";
  int cli_max = -1;
  if (FILE* f = popen(cmd.c_str(), "r")) {
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), f)) > 0) out.append(buf.data(), n);
    if (pclose(f) == 0) cli_max = nlohmann::json::parse(out).at("n_nash_max").get<int>();
  }
  return {ok && n_max == 2 && cli_max == 2,
          std::to_string(n_max) + " Nash-max points (driver: " + std::to_string(cli_max) + ") at (0,0,+-1), |11>"};
}

Outcome maximal_intersection() {
  const auto pts = qpd::orbit_variety_intersections(0.5);
  const double s = 1.0 / std::sqrt(2.0);
  int n_max = 0;
  bool ok = true;
  for (const auto& p : pts) {
    if (!p.nash_max) continue;
    ++n_max;
    ok = ok && is_bell_plus_minus(p.rebit);
    ok = ok && std::abs(p.payoffs(0) - 2.5) < 1e-9 && std::abs(p.payoffs(1) - 2.5) < 1e-9;
    ok = ok && p.projected && std::abs(std::abs((*p.projected)(0)) - s) < 1e-9 &&
         std::abs(std::abs((*p.projected)(1)) - s) < 1e-9 && std::abs((*p.projected)(2)) < 1e-9;
  }
  return {ok && n_max == 4, std::to_string(n_max) + " Nash-max Bell points at (+-1/sqrt2, +-1/sqrt2, 0), payoffs 5/2"};
}

Outcome tfim_oracle() {
  double worst = 0.0;
  for (int n : kSizes)
    for (double g : kFields)
      for (double beta : kBetas) {
        const tfim::TFIMSpec spec{n, g, beta};
        const auto& ed = exact(n, g);
        // Relative error of Z from the difference of logs.
        const double dz = std::expm1(std::abs(tfim::log_partition_function(spec) - ed.log_partition_function(beta)));
        const auto ff = tfim::correlators(spec);
        const auto ex = ed.correlators(beta);
        const double dx = std::abs(ff.x_avg - ex.x_avg) / std::abs(ex.x_avg);
        const double dzz = std::abs(ff.zz_avg - ex.zz_avg) / std::abs(ex.zz_avg);
        worst = std::max({worst, dz, dx, dzz});
      }
  return {worst < 1e-8, "max relative error " + fmt(worst) + " over 60 grid points"};
}

Outcome tfim_hessian() {
  double min_entry = 1e300, worst = 0.0;
  for (int n : kSizes)
    for (double g : kFields) {
      const auto inst = tfim::star_instance({n, g, 1.0});
      for (double beta : kBetas) {
        const Eigen::Matrix3d h = tfim::thermal_hessian({n, g, beta});
        min_entry = std::min(min_entry, h.diagonal().minCoeff());
        const RMatrix b = bilinear_form_matrix(exact(n, g).gibbs_state(beta), inst, 0);
        worst = std::max(worst, (b - RMatrix(h)).cwiseAbs().maxCoeff());
      }
    }
  return {min_entry >= -1e-10 && worst <= 1e-8,
          "min diagonal entry " + fmt(min_entry) + ", max deviation from Gibbs bilinear form " + fmt(worst)};
}

Outcome eigenstate_sweep() {
  const auto rep = eigenstate_audit(20, {3, 4, 5}, 2024);
  double worst = 0.0;
  int global = 0;
  for (const auto& c : rep.cases) {
    worst = std::max(worst, c.max_eigenstate_residual);
    global += c.ground_state_global;
  }
  return {rep.passed(1e-8),
          "max eigenstate residual " + fmt(worst) + ", ground states global " + std::to_string(global) + "/20"};
}

Outcome dimension_counting() {
  int bad2 = 0, bad3 = 0, pts2 = 0, pts3 = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto sys2 = build_system(random_complex_instance(2, 1000 + 10 * s), false);
    for (const auto& p : random_start_search(sys2, 20, s).points) {
      ++pts2;
      bad2 += estimate_local_dimension(sys2, p).est_dim != 0;
    }
    const auto sys3 = build_system(random_complex_instance(3, 2000 + 10 * s), false);
    for (const auto& p : random_start_search(sys3, 3, s).points) {
      ++pts3;
      bad3 += estimate_local_dimension(sys3, p).est_dim != 5;
    }
  }
  return {bad2 == 0 && bad3 == 0 && pts2 >= 10 && pts3 >= 10,
          "N=2: " + std::to_string(pts2 - bad2) + "/" + std::to_string(pts2) + " points with est_dim 0; N=3: " +
              std::to_string(pts3 - bad3) + "/" + std::to_string(pts3) + " with est_dim 5"};
}

Outcome rebit_tracing() {
  int closed = 0, dim_ok = 0, n_pts = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto full = build_system(random_real_pair(3000 + 10 * s), true);
    const auto w = tilde_w_system(full);
    const auto found = random_start_search(w, 20, s);
    if (found.points.empty()) continue;
    for (const auto& p : found.points) {
      RVector v = RVector::Zero(8);
      v.head(4) = p.coords;
      for (const auto& q : full.forms()) worst = std::max(worst, std::abs(v.dot(q * v)));
      ++n_pts;
    }
    const auto& p = found.points.front();
    if (estimate_local_dimension(w, p).est_dim != 1) continue;
    ++dim_ok;
    const auto tr = trace_component(w, p, 0.02, 10000);
    for (const auto& q : tr.points) {
      RVector v = RVector::Zero(8);
      v.head(4) = q.coords;
      for (const auto& f : full.forms()) worst = std::max(worst, std::abs(v.dot(f * v)));
    }
    closed += tr.completed && tr.closed;
  }
  return {worst <= 1e-9 && dim_ok == 10 && closed >= 8,
          "max quadric value " + fmt(worst) + " over " + std::to_string(n_pts) + " sampled points and traces, est_dim 1 in " +
              std::to_string(dim_ok) + "/10, closed loops " + std::to_string(closed) + "/10"};
}

Outcome hessian_finite_difference() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto inst = random_complex_instance(3, 4000 + 10 * s);
    const auto psi = random_state(8, 5000 + s);
    const std::size_t block = s % 3;
    Eigen::Vector3d v(gauss(rng), gauss(rng), gauss(rng));
    CMatrix a = CMatrix::Zero(8, 8);
    for (int k = 0; k < 3; ++k) a += v(k) * inst.generators(block)[static_cast<std::size_t>(k)].to_dense().matrix();
    const CMatrix& h = inst.observable(block).matrix();
    auto f = [&](double t) {
      const CVector w = testing::exp_anti_hermitian(a, t) * psi.amplitudes();
      return w.dot(h * w).real();
    };
    auto d2 = [&](double step) { return (f(step) - 2.0 * f(0.0) + f(-step)) / (step * step); };
    const double fd = (4.0 * d2(5e-4) - d2(1e-3)) / 3.0;
    const double exact_value = v.dot(bilinear_form_matrix(psi, inst, block) * v);
    worst = std::max(worst, std::abs(fd - exact_value) / std::abs(exact_value));
  }
  return {worst < 1e-5, "max relative error " + fmt(worst) + " over 100 triples"};
}

Outcome haar_ubiquity_check() {
  const auto inst = normalized_star_instance(random_two_local(8, 11));
  const auto rep = haar_ubiquity(8, 200, 11);
  return {inst.size() == 8 && rep.fraction() >= 0.99,
          std::to_string(rep.n_pass) + "/200 samples within epsilon " + fmt(rep.epsilon) + " (M = " +
              std::to_string(inst.size()) + " normalized terms)"};
}

Outcome product_state_check() {
  const tfim::TFIMSpec spec{6, 1.5, 1.0};
  const auto graph = tfim::ring_graph(spec);
  const auto p = optimal_product_state(graph, 1);
  const auto psi = p.state();
  // Each block carries half of every term touching its site.
  const auto inst = NashInstance::single_qubit_su2(6, star_hamiltonians(graph, 0.5));
  const double res = nash_residual(psi, inst).max;
  bool global = true;
  for (int i = 0; i < 6; ++i)
    global = global && global_su2_check(psi, inst.observable(static_cast<std::size_t>(i)), i, OptMode::min).is_global;
  const double e0 = exact(6, 1.5).ground_energy();
  return {p.converged && res < 1e-8 && global && p.energy > e0,
          "residual " + fmt(res) + ", per-site global " + (global ? "yes" : "no") + ", E_prod " + fmt(p.energy) +
              " > E_0 " + fmt(e0)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1  payoff table", payoff_table},
      {"AC2  separable intersection", separable_intersection},
      {"AC3  maximal-entanglement intersection", maximal_intersection},
      {"AC4  free fermions vs exact diagonalization", tfim_oracle},
      {"AC5  thermal Hessian positivity", tfim_hessian},
      {"AC6  eigenstate audit", eigenstate_sweep},
      {"AC7  dimension counting", dimension_counting},
      {"AC8  two-rebit tracing", rebit_tracing},
      {"AC9  Hessian vs finite differences", hessian_finite_difference},
      {"AC10 Haar ubiquity", haar_ubiquity_check},
      {"AC11 optimal product state", product_state_check}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << fmt(secs) << " s]" << std::endl;
  }
  std::cout << (11 - failed) << "/11 criteria passed" << std::endl;
  return failed;
}
