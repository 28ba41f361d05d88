// nash_cli: deterministic experiment driver. Every command writes one CSV or
// JSON artifact (to --out or stdout) whose metadata echoes the full config.

#include "cli_output.hpp"

#include <nash/experiments.hpp>
#include <nash/nash_conditions.hpp>
#include <nash/qpd.hpp>
#include <nash/tfim.hpp>
#include <nash/variety_solver.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace nash;
using nash::cli::CliError;
using nash::cli::CsvWriter;
using nash::cli::json;
using nash::cli::num;

namespace {

struct Artifact {
  std::string text;
  int code = cli::kOk;
  std::string diagnostic;
};

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

std::vector<std::string> projected_cells(const Eigen::Vector4d& x) {
  if (1.0 + x(0) <= 1e-12) return {"nan", "nan", "nan"};
  const Eigen::Vector3d p = stereographic(x);
  return {num(p(0)), num(p(1)), num(p(2))};
}

void require(bool ok, const std::string& what) {
  if (!ok) throw CliError(cli::kBadConfig, what);
}

// ---------------------------------------------------------------------------
// variety

struct VarietySampleArgs {
  int n = 2;
  bool real = false;
  std::uint64_t seed = 1;
  int starts = 40;
  double rank_tol = 1e-7;
  int max_iter = 100;
  double tol = 1e-8;
};

Artifact variety_sample_cmd(const VarietySampleArgs& a) {
  require(a.n >= 1 && a.n <= 6, "variety sample: --n must lie in [1, 6]");
  require(!a.real || a.n == 2, "variety sample: --real needs --n 2");
  require(a.starts >= 1, "variety sample: --starts must be positive");
  require(a.max_iter >= 0, "variety sample: --max-iter must be non-negative");
  const json config{{"command", "variety sample"}, {"n", a.n},         {"real", a.real},
                    {"seed", a.seed},              {"starts", a.starts}, {"rank_tol", a.rank_tol},
                    {"max_iter", a.max_iter},      {"tol", a.tol}};
  SearchOptions so;
  so.newton.max_iter = a.max_iter;
  Artifact out;
  if (!a.real) {
    const auto sys = build_system(random_complex_instance(a.n, a.seed), false);
    const auto found = random_start_search(sys, a.starts, a.seed, so);
    if (found.points.empty()) throw CliError(cli::kNonConvergence, "variety sample: no start converged");
    std::vector<std::string> cols{"point", "est_dim", "residual"};
    for (Eigen::Index k = 0; k < sys.ambient_dim(); ++k) cols.push_back("v" + std::to_string(k));
    CsvWriter csv(config, cols);
    csv.note("converged", std::to_string(found.converged));
    csv.note("failed", std::to_string(found.failed));
    csv.note("method", "newton multistart sampling; enumeration is not certified complete");
    for (std::size_t i = 0; i < found.points.size(); ++i) {
      const auto& p = found.points[i];
      std::vector<std::string> row{num(i), num(estimate_local_dimension(sys, p, a.rank_tol).est_dim), num(p.residual)};
      for (Eigen::Index k = 0; k < p.coords.size(); ++k) row.push_back(num(p.coords(k)));
      csv.row(row);
    }
    out.text = csv.str();
    return out;
  }
  const auto full = build_system(random_real_pair(a.seed), true);
  const auto w = tilde_w_system(full);
  const auto found = random_start_search(w, a.starts, a.seed, so);
  if (found.points.empty()) throw CliError(cli::kNonConvergence, "variety sample: no start converged");
  CsvWriter csv(config, {"point", "est_dim", "residual", "X0", "X1", "X2", "X3", "x", "y", "z"});
  csv.note("converged", std::to_string(found.converged));
  csv.note("failed", std::to_string(found.failed));
  csv.note("method", "newton multistart sampling; enumeration is not certified complete");
  for (std::size_t i = 0; i < found.points.size(); ++i) {
    Eigen::Vector4d x = found.points[i].coords;
    if (x(0) < 0) x = -x;
    RVector v = RVector::Zero(8);
    v.head(4) = x;
    const double res = std::max(w.residual(x), full.residual(v));
    std::vector<std::string> row{num(i), num(estimate_local_dimension(w, found.points[i], a.rank_tol).est_dim), num(res)};
    for (int k = 0; k < 4; ++k) row.push_back(num(x(k)));
    for (auto& c : projected_cells(x)) row.push_back(c);
    csv.row(row);
  }
  out.text = csv.str();
  return out;
}

struct VarietyTraceArgs {
  std::uint64_t seed = 1;
  int starts = 40;
  double step = 0.02;
  int max_steps = 10000;
  int components = 2;
  double tol = 1e-8;
};

Artifact variety_trace_cmd(const VarietyTraceArgs& a) {
  require(a.step > 0.0 && a.step < 1.0, "variety trace: --step must lie in (0, 1)");
  require(a.max_steps >= 1 && a.components >= 1 && a.starts >= 1, "variety trace: counts must be positive");
  const json config{{"command", "variety trace"}, {"seed", a.seed},           {"starts", a.starts},
                    {"step", a.step},             {"max_steps", a.max_steps}, {"components", a.components},
                    {"tol", a.tol}};
  const auto w = tilde_w_system(build_system(random_real_pair(a.seed), true));
  const auto found = random_start_search(w, a.starts, a.seed);
  if (found.points.empty()) throw CliError(cli::kNonConvergence, "variety trace: no start converged");
  std::vector<TraceResult> traces;
  for (const auto& p : found.points) {
    if (static_cast<int>(traces.size()) >= a.components) break;
    bool covered = false;
    for (const auto& t : traces)
      for (const auto& q : t.points) covered = covered || gauge_distance(w, p.coords, q.coords) < 2.0 * a.step;
    if (covered) continue;
    auto tr = trace_component(w, p, a.step, a.max_steps);
    if (!tr.completed) throw CliError(cli::kNonConvergence, "variety trace: " + tr.diagnostic);
    traces.push_back(std::move(tr));
  }
  CsvWriter csv(config, {"component", "index", "X0", "X1", "X2", "X3", "x", "y", "z", "residual"});
  for (std::size_t c = 0; c < traces.size(); ++c) {
    csv.note("component_" + std::to_string(c),
             "closed=" + std::to_string(traces[c].closed ? 1 : 0) + " points=" + std::to_string(traces[c].points.size()));
  }
  for (std::size_t c = 0; c < traces.size(); ++c) {
    for (std::size_t i = 0; i < traces[c].points.size(); ++i) {
      const Eigen::Vector4d x = traces[c].points[i].coords;
      std::vector<std::string> row{num(c), num(i)};
      for (int k = 0; k < 4; ++k) row.push_back(num(x(k)));
      for (auto& s : projected_cells(x)) row.push_back(s);
      row.push_back(num(w.residual(x)));
      csv.row(row);
    }
  }
  return {csv.str(), cli::kOk, {}};
}

// ---------------------------------------------------------------------------
// tfim

struct CorrelatorArgs {
  int n = 10;
  std::vector<double> g{0.5, 1.5};
  double t_min = 0.05;
  double t_max = 5.0;
  int points = 100;
  double tol = 1e-8;
};

Artifact tfim_correlators_cmd(const CorrelatorArgs& a) {
  require(a.n >= 2 && a.n <= tfim::kMaxFreeFermionSites, "tfim correlators: --n out of range");
  require(a.t_min > 0.0 && a.t_max >= a.t_min && a.points >= 1, "tfim correlators: bad temperature grid");
  for (double g : a.g) require(g >= 0.0, "tfim correlators: --g must be non-negative");
  const bool with_ed = a.n <= 12;
  const json config{{"command", "tfim correlators"}, {"n", a.n}, {"g", a.g},           {"t_min", a.t_min},
                    {"t_max", a.t_max},              {"points", a.points}, {"tol", a.tol}, {"seed", nullptr}};
  std::vector<std::string> cols{"temperature", "g", "x_avg", "zz_avg", "hs11", "hs22", "hs33"};
  if (with_ed) {
    cols.insert(cols.end(), {"ed_x_avg", "ed_zz_avg", "residual"});
  }
  CsvWriter csv(config, cols);
  double worst = 0.0;
  for (double g : a.g) {
    std::optional<tfim::ExactSolution> ed;
    if (with_ed) ed.emplace(a.n, g);
    for (int k = 0; k < a.points; ++k) {
      const double t = a.points == 1 ? a.t_min : a.t_min + (a.t_max - a.t_min) * k / (a.points - 1);
      const tfim::TFIMSpec spec{a.n, g, 1.0 / t};
      const auto c = tfim::correlators(spec);
      const auto h = tfim::thermal_hessian(spec);
      std::vector<std::string> row{num(t), num(g), num(c.x_avg), num(c.zz_avg), num(h(0, 0)), num(h(1, 1)), num(h(2, 2))};
      if (ed) {
        const auto e = ed->correlators(1.0 / t);
        const double r = std::max(std::abs(e.x_avg - c.x_avg), std::abs(e.zz_avg - c.zz_avg));
        worst = std::max(worst, r);
        row.insert(row.end(), {num(e.x_avg), num(e.zz_avg), num(r)});
      }
      csv.row(row);
    }
  }
  Artifact out{csv.str(), cli::kOk, {}};
  if (!(worst < a.tol)) {
    out.code = cli::kInvariantViolation;
    out.diagnostic = "tfim correlators: free-fermion and ED differ by " + cli::format_number(worst);
  }
  return out;
}

struct HessianArgs {
  int n = 10;
  std::vector<double> g{0.5, 1.0, 1.5};
  std::vector<double> beta{0.1, 0.5, 1.0, 2.0, 5.0};
  double psd_tol = 1e-10;
  double tol = 1e-8;
};

Artifact tfim_hessian_cmd(const HessianArgs& a) {
  require(a.n >= 2 && a.n <= tfim::kMaxFreeFermionSites, "tfim hessian: --n out of range");
  for (double g : a.g) require(g >= 0.0, "tfim hessian: --g must be non-negative");
  for (double b : a.beta) require(b >= 0.0, "tfim hessian: --beta must be non-negative");
  const bool with_ed = a.n <= 10;
  const json config{{"command", "tfim hessian"}, {"n", a.n},     {"g", a.g},     {"beta", a.beta},
                    {"psd_tol", a.psd_tol},      {"tol", a.tol}, {"seed", nullptr}};
  json entries = json::array();
  bool all_psd = true;
  double worst = 0.0;
  for (double g : a.g) {
    std::optional<tfim::ExactSolution> ed;
    std::optional<NashInstance> inst;
    if (with_ed) {
      ed.emplace(a.n, g);
      inst.emplace(tfim::star_instance({a.n, g, 1.0}));
    }
    for (double beta : a.beta) {
      const tfim::TFIMSpec spec{a.n, g, beta};
      const Eigen::Matrix3d h = tfim::thermal_hessian(spec);
      const double min_entry = h.diagonal().minCoeff();
      const bool psd = min_entry >= -a.psd_tol;
      all_psd = all_psd && psd;
      json e{{"g", g}, {"beta", beta}, {"diagonal", vec_json(h.diagonal())}, {"min_entry", min_entry}, {"psd", psd}};
      if (ed) {
        const RMatrix b = bilinear_form_matrix(ed->gibbs_state(beta), *inst, 0);
        const double r = (b - RMatrix(h)).cwiseAbs().maxCoeff();
        worst = std::max(worst, r);
        e["residual"] = r;
      }
      entries.push_back(std::move(e));
    }
  }
  json body{{"entries", entries}, {"all_psd", all_psd}, {"ed_checked", with_ed}};
  Artifact out{cli::json_document(config, std::move(body)), cli::kOk, {}};
  if (!all_psd) {
    out.code = cli::kInvariantViolation;
    out.diagnostic = "tfim hessian: negative diagonal entry";
  } else if (!(worst < a.tol)) {
    out.code = cli::kInvariantViolation;
    out.diagnostic = "tfim hessian: bilinear form mismatch " + cli::format_number(worst);
  }
  return out;
}

// ---------------------------------------------------------------------------
// qpd

std::vector<std::string> support_labels(const Eigen::Vector4d& x) {
  static const char* labels[] = {"00", "01", "10", "11"};
  std::vector<std::string> s;
  for (int k = 0; k < 4; ++k)
    if (std::abs(x(k)) > 1e-9) s.emplace_back(labels[k]);
  return s;
}

struct QpdVarietyArgs {
  int points = 2000;
  std::uint64_t seed = 1;
  double tol = 1e-9;
};

Artifact qpd_variety_cmd(const QpdVarietyArgs& a) {
  require(a.points >= 1, "qpd variety: --points must be positive");
  const json config{{"command", "qpd variety"}, {"points", a.points}, {"seed", a.seed}, {"tol", a.tol}};
  const auto pts = qpd::variety_sample(a.points, a.seed, a.tol);
  if (pts.empty()) throw CliError(cli::kNonConvergence, "qpd variety: no start converged");
  CsvWriter csv(config, {"x", "y", "z", "on_max_set", "residual", "X0", "X1", "X2", "X3"});
  csv.note("converged", std::to_string(pts.size()));
  for (const auto& p : pts) {
    std::vector<std::string> row = projected_cells(p.rebit);
    row.insert(row.end(), {p.nash_max ? "1" : "0", num(p.variety_residual)});
    for (int k = 0; k < 4; ++k) row.push_back(num(p.rebit(k)));
    csv.row(row);
  }
  return {csv.str(), cli::kOk, {}};
}

struct QpdOrbitArgs {
  double chi = 0.0;
  bool quotient = false;
  std::uint64_t seed = 7;
  int starts = 400;
  double tol = 1e-9;
};

Artifact qpd_orbits_cmd(const QpdOrbitArgs& a) {
  require(a.chi >= 0.0 && a.chi <= 0.5, "qpd orbits: --chi must lie in [0, 0.5]");
  require(a.starts >= 1, "qpd orbits: --starts must be positive");
  const json config{{"command", "qpd orbits"}, {"chi", a.chi},       {"quotient", a.quotient},
                    {"seed", a.seed},          {"starts", a.starts}, {"tol", a.tol}};
  qpd::IntersectionOptions opt;
  opt.n_starts = a.starts;
  opt.seed = a.seed;
  opt.tol = a.tol;
  opt.quotient_antipodal = a.quotient;
  const auto pts = qpd::orbit_variety_intersections(a.chi, opt);
  if (pts.empty()) throw CliError(cli::kNonConvergence, "qpd orbits: no intersection point found");
  json list = json::array();
  int n_max = 0;
  for (const auto& p : pts) {
    n_max += p.nash_max;
    const double chi_p = qpd::entanglement_parameter(p.rebit);
    list.push_back(json{{"rebit", vec_json(p.rebit)},
                        {"projected", p.projected ? vec_json(*p.projected) : json(nullptr)},
                        {"support", support_labels(p.rebit)},
                        {"determinant", p.determinant},
                        {"entanglement", chi_p},
                        {"orbit_residual", std::abs(chi_p - a.chi)},
                        {"residual", p.variety_residual},
                        {"nash_max", p.nash_max},
                        {"payoffs", vec_json(p.payoffs)}});
  }
  json body{{"chi", a.chi},
            {"points", list},
            {"n_points", pts.size()},
            {"n_nash_max", n_max},
            {"method", "newton multistart sampling; enumeration is not certified complete"}};
  return {cli::json_document(config, std::move(body)), cli::kOk, {}};
}

// ---------------------------------------------------------------------------
// nash check

CMatrix read_matrix(const json& j, Eigen::Index d) {
  const auto& re = j.at("real");
  require(re.is_array() && static_cast<Eigen::Index>(re.size()) == d, "nash check: observable has wrong size");
  CMatrix m = CMatrix::Zero(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const auto& row = re.at(static_cast<std::size_t>(r));
    require(static_cast<Eigen::Index>(row.size()) == d, "nash check: observable has wrong size");
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  if (j.contains("imag")) {
    const auto& im = j.at("imag");
    require(static_cast<Eigen::Index>(im.size()) == d, "nash check: observable has wrong size");
    for (Eigen::Index r = 0; r < d; ++r) {
      const auto& row = im.at(static_cast<std::size_t>(r));
      require(static_cast<Eigen::Index>(row.size()) == d, "nash check: observable has wrong size");
      for (Eigen::Index c = 0; c < d; ++c) m(r, c) += kI * row.at(static_cast<std::size_t>(c)).get<double>();
    }
  }
  return m;
}

CVector read_vector(const json& j, Eigen::Index d) {
  const auto& re = j.at("real");
  require(static_cast<Eigen::Index>(re.size()) == d, "nash check: state has wrong size");
  CVector v(d);
  for (Eigen::Index k = 0; k < d; ++k) v(k) = re.at(static_cast<std::size_t>(k)).get<double>();
  if (j.contains("imag")) {
    const auto& im = j.at("imag");
    require(static_cast<Eigen::Index>(im.size()) == d, "nash check: state has wrong size");
    for (Eigen::Index k = 0; k < d; ++k) v(k) += kI * im.at(static_cast<std::size_t>(k)).get<double>();
  }
  return v;
}

struct NashCheckArgs {
  std::string state_file;
  double tol = kNashTol;
};

Artifact nash_check_cmd(const NashCheckArgs& a) {
  std::ifstream in(a.state_file);
  require(static_cast<bool>(in), "nash check: cannot open " + a.state_file);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw CliError(cli::kBadConfig, std::string("nash check: malformed JSON: ") + e.what());
  }
  NashInstance inst;
  try {
    if (doc.value("preset", std::string()) == "qpd") {
      inst = qpd::instance();
    } else {
      require(!doc.contains("preset"), "nash check: unknown preset");
      const int n = doc.at("n_qubits").get<int>();
      require(n >= 1 && n <= 12, "nash check: n_qubits must lie in [1, 12]");
      const Eigen::Index d = Eigen::Index{1} << n;
      std::vector<DenseOperator> obs;
      for (const auto& o : doc.at("observables")) obs.emplace_back(read_matrix(o, d), HermitianTag::hermitian);
      std::vector<std::vector<int>> blocks;
      if (doc.contains("blocks")) {
        blocks = doc.at("blocks").get<std::vector<std::vector<int>>>();
      } else {
        for (std::size_t i = 0; i < obs.size(); ++i) blocks.push_back({static_cast<int>(i)});
      }
      inst = NashInstance::full_su(n, std::move(obs), std::move(blocks));
    }
  } catch (const json::exception& e) {
    throw CliError(cli::kBadConfig, std::string("nash check: ") + e.what());
  }
  CVector v;
  try {
    v = read_vector(doc.at("state"), inst.dim());
  } catch (const json::exception& e) {
    throw CliError(cli::kBadConfig, std::string("nash check: ") + e.what());
  }
  require(v.norm() > 0.0, "nash check: zero state");
  const StateVector psi = StateVector::normalized(v);

  const json config{{"command", "nash check"}, {"input", doc}, {"tol", a.tol}, {"seed", nullptr}};
  const auto res = nash_residual(psi, inst);
  const bool is_nash = res.max < a.tol;
  json blocks = json::array();
  bool single = true;
  for (const auto& b : inst.blocks()) single = single && b.size() == 1;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    json b{{"qubits", inst.blocks()[i]},
           {"expectation", expectation_real(psi, inst.observable(i))},
           {"residual", res.per_block[i]},
           {"components", res.components[i]}};
    if (single) {
      const int q = inst.blocks()[i][0];
      const auto lo = global_su2_check(psi, inst.observable(i), q, OptMode::min);
      const auto hi = global_su2_check(psi, inst.observable(i), q, OptMode::max);
      b["global_min"] = lo.is_global;
      b["global_max"] = hi.is_global;
      b["orbit_min"] = lo.optimal_value;
      b["orbit_max"] = hi.optimal_value;
    }
    blocks.push_back(std::move(b));
  }
  json body{{"blocks", blocks}, {"max_residual", res.max}, {"is_nash", is_nash}};
  if (is_nash) {
    const auto lc = classify_local(psi, inst, kEigTol, a.tol);
    body["classification"] = to_string(lc.kind);
    json ev = json::array();
    for (const auto& e : lc.eigenvalue_lists) ev.push_back(vec_json(e));
    body["hessian_eigenvalues"] = ev;
  } else {
    body["classification"] = nullptr;
  }
  // The per-block "residual" keys are audited; a non-Nash state is reported,
  // not rejected, so the audit tolerance only applies to Nash states.
  return {cli::json_document(config, std::move(body)), cli::kOk, {}};
}

// ---------------------------------------------------------------------------
// sampling experiments

struct HaarArgs {
  int n = 8;
  int samples = 200;
  std::uint64_t seed = 1;
  std::optional<double> epsilon;
};

Artifact haar_ubiquity_cmd(const HaarArgs& a) {
  require(a.n >= 2 && a.n <= 14, "haar ubiquity: --n must lie in [2, 14]");
  require(a.samples >= 1, "haar ubiquity: --samples must be positive");
  require(!a.epsilon || *a.epsilon > 0.0, "haar ubiquity: --epsilon must be positive");
  const auto rep = haar_ubiquity(a.n, a.samples, a.seed, a.epsilon);
  const json config{{"command", "haar ubiquity"},
                    {"n", a.n},
                    {"samples", a.samples},
                    {"seed", a.seed},
                    {"epsilon", a.epsilon ? json(*a.epsilon) : json(nullptr)}};
  json body{{"n_qubits", rep.n_qubits},
            {"epsilon", rep.epsilon},
            {"n_samples", rep.n_samples()},
            {"n_pass", rep.n_pass},
            {"fraction", rep.fraction()},
            {"max_sample_residual", *std::max_element(rep.residuals.begin(), rep.residuals.end())},
            {"sample_residuals", rep.residuals}};
  return {cli::json_document(config, std::move(body)), cli::kOk, {}};
}

struct EigenAuditArgs {
  int instances = 20;
  std::vector<int> sizes{3, 4, 5};
  std::uint64_t seed = 1;
  double tol = 1e-8;
};

Artifact eigenstate_audit_cmd(const EigenAuditArgs& a) {
  require(a.instances >= 1 && !a.sizes.empty(), "eigenstate audit: empty audit");
  for (int s : a.sizes) require(s >= 2 && s <= 10, "eigenstate audit: sizes must lie in [2, 10]");
  const json config{{"command", "eigenstate audit"}, {"instances", a.instances}, {"sizes", a.sizes},
                    {"seed", a.seed},                {"tol", a.tol}};
  const auto rep = eigenstate_audit(a.instances, a.sizes, a.seed);
  json cases = json::array();
  for (const auto& c : rep.cases) {
    cases.push_back(json{{"n_qubits", c.n_qubits},
                         {"seed", c.seed},
                         {"residual", c.max_eigenstate_residual},
                         {"ground_energy", c.ground_energy},
                         {"ground_state_global", c.ground_state_global}});
  }
  const bool ok = rep.passed(a.tol);
  json body{{"cases", cases}, {"passed", ok}};
  Artifact out{cli::json_document(config, std::move(body)), cli::kOk, {}};
  if (!ok) {
    out.code = cli::kInvariantViolation;
    out.diagnostic = "eigenstate audit: a case failed";
  }
  return out;
}

// ---------------------------------------------------------------------------
// audit

Artifact audit_cmd(const std::string& path, std::optional<double> tol) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "audit: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto rep = cli::audit_text(ss.str(), tol);
  const json config{{"command", "audit"}, {"file", path}, {"tol", tol ? json(*tol) : json(nullptr)}, {"seed", nullptr}};
  json body{{"format", rep.format},
            {"checked", rep.checked},
            {"failures", rep.failures},
            {"max_recorded_residual", std::isnan(rep.max_residual) ? json(nullptr) : json(rep.max_residual)},
            {"tolerance", rep.tol},
            {"source_config", rep.config},
            {"ok", rep.failures == 0}};
  Artifact out{cli::json_document(config, std::move(body)), cli::kOk, {}};
  if (rep.failures > 0) {
    out.code = cli::kInvariantViolation;
    out.diagnostic = "audit: " + std::to_string(rep.failures) + " residual(s) above tolerance";
  }
  return out;
}

void emit(const Artifact& art, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << art.text;
    std::cout.flush();
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw CliError(cli::kBadConfig, "cannot write " + out_path);
  f << art.text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nash states of quantum observables: experiments and checks"};
  app.set_version_flag("--version", std::string(cli::kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  std::string out_path;
  app.add_option("-o,--out", out_path, "Output file (default stdout)");

  std::function<Artifact()> action;

  auto* variety = app.add_subcommand("variety", "Nash variety sampling and tracing")->require_subcommand(1);
  VarietySampleArgs vs;
  auto* vsc = variety->add_subcommand("sample", "Point cloud with local dimension estimates");
  vsc->add_option("--n", vs.n, "Number of qubits")->capture_default_str();
  vsc->add_flag("--real", vs.real, "Real-symmetric two-qubit mode (x-only system)");
  vsc->add_option("--seed", vs.seed, "Instance and sampling seed")->capture_default_str();
  vsc->add_option("--starts", vs.starts, "Newton starts")->capture_default_str();
  vsc->add_option("--rank-tol", vs.rank_tol, "Relative singular value cutoff")->capture_default_str();
  vsc->add_option("--max-iter", vs.max_iter, "Newton iteration cap")->capture_default_str();
  vsc->add_option("--tol", vs.tol, "Residual tolerance for audit")->capture_default_str();
  vsc->callback([&] { action = [&] { return variety_sample_cmd(vs); }; });
  VarietyTraceArgs vt;
  auto* vtc = variety->add_subcommand("trace", "Trace one-dimensional components of a real two-qubit instance");
  vtc->add_option("--seed", vt.seed)->capture_default_str();
  vtc->add_option("--starts", vt.starts)->capture_default_str();
  vtc->add_option("--step", vt.step)->capture_default_str();
  vtc->add_option("--max-steps", vt.max_steps)->capture_default_str();
  vtc->add_option("--components", vt.components, "Maximum number of components")->capture_default_str();
  vtc->add_option("--tol", vt.tol)->capture_default_str();
  vtc->callback([&] { action = [&] { return variety_trace_cmd(vt); }; });

  auto* tf = app.add_subcommand("tfim", "Transverse-field Ising ring")->require_subcommand(1);
  CorrelatorArgs ca;
  auto* tcc = tf->add_subcommand("correlators", "Thermal correlators and Hessian diagonal vs temperature");
  std::vector<double> corr_g;
  tcc->add_option("--n", ca.n)->capture_default_str();
  tcc->add_option("--g", corr_g, "Transverse field (repeatable, default 0.5 1.5)");
  tcc->add_option("--t-min", ca.t_min)->capture_default_str();
  tcc->add_option("--t-max", ca.t_max)->capture_default_str();
  tcc->add_option("--points", ca.points)->capture_default_str();
  tcc->add_option("--tol", ca.tol, "Free-fermion vs ED tolerance")->capture_default_str();
  tcc->callback([&] {
    if (!corr_g.empty()) ca.g = corr_g;
    action = [&] { return tfim_correlators_cmd(ca); };
  });
  HessianArgs ha;
  auto* thc = tf->add_subcommand("hessian", "Positivity report for the thermal Hessian");
  thc->add_option("--n", ha.n)->capture_default_str();
  thc->add_option("--g", ha.g)->capture_default_str();
  thc->add_option("--beta", ha.beta)->capture_default_str();
  thc->add_option("--psd-tol", ha.psd_tol)->capture_default_str();
  thc->add_option("--tol", ha.tol)->capture_default_str();
  thc->callback([&] { action = [&] { return tfim_hessian_cmd(ha); }; });

  auto* qp = app.add_subcommand("qpd", "Quantum prisoner's dilemma")->require_subcommand(1);
  QpdVarietyArgs qv;
  auto* qvc = qp->add_subcommand("variety", "Projected point cloud of the Nash variety");
  qvc->add_option("--points", qv.points, "Newton starts")->capture_default_str();
  qvc->add_option("--seed", qv.seed)->capture_default_str();
  qvc->add_option("--tol", qv.tol)->capture_default_str();
  qvc->callback([&] { action = [&] { return qpd_variety_cmd(qv); }; });
  QpdOrbitArgs qo;
  auto* qoc = qp->add_subcommand("orbits", "Intersections of entanglement orbits with the Nash variety");
  qoc->add_option("--chi", qo.chi, "Entanglement parameter in [0, 1/2]")->required();
  qoc->add_flag("--quotient", qo.quotient, "Identify X with -X");
  qoc->add_option("--seed", qo.seed)->capture_default_str();
  qoc->add_option("--starts", qo.starts)->capture_default_str();
  qoc->add_option("--tol", qo.tol)->capture_default_str();
  qoc->callback([&] { action = [&] { return qpd_orbits_cmd(qo); }; });

  auto* nc = app.add_subcommand("nash", "Nash checks")->require_subcommand(1);
  NashCheckArgs na;
  auto* ncc = nc->add_subcommand("check", "Residual and classification report for a state file");
  ncc->add_option("--state", na.state_file, "JSON input")->required();
  ncc->add_option("--tol", na.tol)->capture_default_str();
  ncc->callback([&] { action = [&] { return nash_check_cmd(na); }; });

  auto* hc = app.add_subcommand("haar", "Haar sampling experiments")->require_subcommand(1);
  HaarArgs hu;
  double haar_eps = 0.0;
  auto* huc = hc->add_subcommand("ubiquity", "Fraction of Haar states that are approximate Nash states");
  huc->add_option("--n", hu.n)->capture_default_str();
  huc->add_option("--samples", hu.samples)->capture_default_str();
  huc->add_option("--seed", hu.seed)->capture_default_str();
  auto* eps_opt = huc->add_option("--epsilon", haar_eps, "Default 2^(-N/4)");
  huc->callback([&] {
    if (eps_opt->count() > 0) hu.epsilon = haar_eps;
    action = [&] { return haar_ubiquity_cmd(hu); };
  });

  auto* ec = app.add_subcommand("eigenstate", "Eigenstates of strictly 2-local Hamiltonians")->require_subcommand(1);
  EigenAuditArgs ea;
  auto* eac = ec->add_subcommand("audit", "Eigenstate Nash residuals and ground-state global minimality");
  eac->add_option("--instances", ea.instances)->capture_default_str();
  eac->add_option("--sizes", ea.sizes)->capture_default_str()->delimiter(',');
  eac->add_option("--seed", ea.seed)->capture_default_str();
  eac->add_option("--tol", ea.tol)->capture_default_str();
  eac->callback([&] { action = [&] { return eigenstate_audit_cmd(ea); }; });

  std::string audit_path;
  double audit_tol = 0.0;
  auto* ac = app.add_subcommand("audit", "Re-verify every recorded residual of an output file");
  ac->add_option("file", audit_path)->required();
  auto* audit_tol_opt = ac->add_option("--tol", audit_tol, "Override the tolerance recorded in the file");
  ac->callback([&] {
    action = [&] {
      return audit_cmd(audit_path, audit_tol_opt->count() > 0 ? std::optional<double>(audit_tol) : std::nullopt);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kBadConfig;
  }

  try {
    const Artifact art = action();
    emit(art, out_path);
    if (art.code != cli::kOk) std::cerr << "nash_cli: " << art.diagnostic << '\n';
    return art.code;
  } catch (const CliError& e) {
    std::cerr << "nash_cli: " << e.what() << '\n';
    return e.code;
  } catch (const std::invalid_argument& e) {
    std::cerr << "nash_cli: bad config: " << e.what() << '\n';
    return cli::kBadConfig;
  } catch (const std::out_of_range& e) {
    std::cerr << "nash_cli: bad config: " << e.what() << '\n';
    return cli::kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "nash_cli: invariant violation: " << e.what() << '\n';
    return cli::kInvariantViolation;
  }
}
