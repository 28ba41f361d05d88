#include <gtest/gtest.h>

#include "cli_output.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using nash::cli::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(NASH_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "nash_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST(CliOutput, FnvMatchesReferenceVectors) {
  EXPECT_EQ(nash::cli::fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(nash::cli::fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(nash::cli::fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(CliOutput, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    EXPECT_EQ(std::strtod(nash::cli::format_number(v).c_str(), nullptr), v);
  }
}

TEST(CliOutput, AuditCountsMissingAndLargeResiduals) {
  const json cfg{{"command", "x"}, {"tol", 1e-8}};
  nash::cli::CsvWriter csv(cfg, {"a", "residual"});
  csv.row({"1", "1e-12"});
  csv.row({"2", "nan"});
  csv.row({"3", "1e-3"});
  const auto rep = nash::cli::audit_text(csv.str(), std::nullopt);
  EXPECT_EQ(rep.checked, 3);
  EXPECT_EQ(rep.failures, 2);
  EXPECT_EQ(nash::cli::audit_text(csv.str(), 1.0).failures, 1);
  EXPECT_THROW(nash::cli::audit_text("a,b\n1,2\n", std::nullopt), nash::cli::CliError);
  EXPECT_THROW(nash::cli::audit_text("", std::nullopt), nash::cli::CliError);
  const std::string doc = nash::cli::json_document(cfg, json{{"points", {{{"residual", 1e-9}}, {{"residual", nullptr}}}}});
  const auto jr = nash::cli::audit_text(doc, std::nullopt);
  EXPECT_EQ(jr.checked, 2);
  EXPECT_EQ(jr.failures, 1);
}

TEST(Cli, SeparableOrbitHasTwoNashMaxPointsAtBothPoles) {
  const auto r = run("qpd orbits --chi 0");
  ASSERT_EQ(r.code, 0);
  const auto doc = json::parse(r.out);
  int n_max = 0;
  for (const auto& p : doc["points"]) {
    if (!p["nash_max"].get<bool>()) continue;
    ++n_max;
    ASSERT_FALSE(p["projected"].is_null());
    const auto xyz = p["projected"].get<std::vector<double>>();
    EXPECT_NEAR(xyz[0], 0.0, 1e-6);
    EXPECT_NEAR(xyz[1], 0.0, 1e-6);
    EXPECT_NEAR(std::abs(xyz[2]), 1.0, 1e-6);
    EXPECT_EQ(p["support"], json::array({"11"}));
  }
  EXPECT_EQ(n_max, 2);
  EXPECT_EQ(doc["n_nash_max"], 2);
  EXPECT_EQ(doc["meta"]["config_hash"], nash::cli::fnv1a_hex(doc["meta"]["config"].dump()));
  EXPECT_EQ(doc["meta"]["version"], nash::cli::kVersion);
  EXPECT_EQ(doc["meta"]["seed"], 7);
}

TEST(Cli, IdenticalConfigGivesIdenticalBytes) {
  for (const std::string args : {"qpd orbits --chi 0.22", "qpd variety --points 200 --seed 3", "variety sample --n 2 --seed 5",
                                 "tfim correlators --n 6 --g 0.5 --g 1.5 --points 7", "haar ubiquity --n 6 --samples 20"}) {
    const auto a = run(args);
    const auto b = run(args);
    ASSERT_EQ(a.code, 0) << args;
    EXPECT_FALSE(a.out.empty()) << args;
    EXPECT_EQ(a.out, b.out) << args;
  }
  const auto c = run("qpd variety --points 200 --seed 4");
  EXPECT_NE(c.out, run("qpd variety --points 200 --seed 3").out);
}

TEST(Cli, OutFileMatchesStdout) {
  const auto path = scratch("orbits_half.json");
  ASSERT_EQ(run("qpd orbits --chi 0.5 --out " + path.string()).code, 0);
  EXPECT_EQ(read_file(path), run("qpd orbits --chi 0.5").out);
}

TEST(Cli, CorrelatorCsvMatchesExactDiagonalization) {
  const auto r = run("tfim correlators --n 8 --g 0.5 --g 1.5 --points 6");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::string header;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = line;
      continue;
    }
    ++rows;
    const double residual = std::strtod(line.substr(line.rfind(',') + 1).c_str(), nullptr);
    EXPECT_LT(residual, 1e-8);
  }
  EXPECT_EQ(header, "temperature,g,x_avg,zz_avg,hs11,hs22,hs33,ed_x_avg,ed_zz_avg,residual");
  EXPECT_EQ(rows, 12);
}

TEST(Cli, EveryArtifactPassesItsOwnAudit) {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"orbits.json", "qpd orbits --chi 0.22"},
      {"variety.csv", "qpd variety --points 300"},
      {"sample.csv", "variety sample --n 3 --starts 4"},
      {"real.csv", "variety sample --real --seed 2"},
      {"trace.csv", "variety trace --seed 2 --components 1"},
      {"hessian.json", "tfim hessian --n 6 --g 1.5 --beta 1"},
      {"audit.json", "eigenstate audit --instances 3 --sizes 3,4"}};
  for (const auto& [name, args] : cases) {
    const auto path = scratch(name);
    ASSERT_EQ(run(args + " --out " + path.string()).code, 0) << args;
    const auto r = run("audit " + path.string());
    EXPECT_EQ(r.code, 0) << args;
    const auto rep = json::parse(r.out);
    EXPECT_GT(rep["checked"].get<int>(), 0) << args;
    EXPECT_TRUE(rep["ok"].get<bool>()) << args;
  }
}

TEST(Cli, AuditFlagsTamperedResidual) {
  const auto path = scratch("tampered.csv");
  ASSERT_EQ(run("qpd variety --points 50 --out " + path.string()).code, 0);
  std::string text = read_file(path);
  const auto header = text.find("x,y,z,on_max_set,residual");
  ASSERT_NE(header, std::string::npos);
  const auto row = text.find('\n', header) + 1;
  std::size_t pos = row;
  for (int c = 0; c < 4; ++c) pos = text.find(',', pos) + 1;
  text.replace(pos, text.find(',', pos) - pos, "0.5");
  write_file(path, text);
  EXPECT_EQ(run("audit " + path.string()).code, 3);
  EXPECT_EQ(run("audit " + path.string() + " --tol 1").code, 0);
}

TEST(Cli, NashCheckReportsBellEquilibrium) {
  const auto path = scratch("bell.json");
  write_file(path, R"({"preset": "qpd", "state": {"real": [0, 1, 1, 0]}})");
  const auto r = run("nash check --state " + path.string());
  ASSERT_EQ(r.code, 0);
  const auto doc = json::parse(r.out);
  EXPECT_TRUE(doc["is_nash"].get<bool>());
  EXPECT_EQ(doc["classification"], "local_max");
  for (const auto& b : doc["blocks"]) {
    EXPECT_NEAR(b["expectation"].get<double>(), 2.5, 1e-12);
    EXPECT_TRUE(b["global_max"].get<bool>());
  }

  const auto generic = scratch("generic.json");
  write_file(generic, R"({"n_qubits": 1, "observables": [{"real": [[0, 1], [1, 0]]}], "state": {"real": [1, 0.3]}})");
  const auto g = run("nash check --state " + generic.string());
  ASSERT_EQ(g.code, 0);
  const auto gd = json::parse(g.out);
  EXPECT_FALSE(gd["is_nash"].get<bool>());
  EXPECT_TRUE(gd["classification"].is_null());
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("").code, 4);
  EXPECT_EQ(run("frobnicate").code, 4);
  EXPECT_EQ(run("qpd orbits").code, 4);
  EXPECT_EQ(run("qpd orbits --chi 0.75").code, 4);
  EXPECT_EQ(run("tfim correlators --n 1").code, 4);
  EXPECT_EQ(run("variety sample --real --n 3").code, 4);
  EXPECT_EQ(run("nash check --state /nonexistent/state.json").code, 4);
  const auto bad = scratch("bad.json");
  write_file(bad, R"({"n_qubits": 1, "observables": [{"real": [[0, 1], [0, 0]]}], "state": {"real": [1, 0]}})");
  EXPECT_EQ(run("nash check --state " + bad.string()).code, 4);
  write_file(bad, "{not json");
  EXPECT_EQ(run("audit " + bad.string()).code, 4);
  EXPECT_EQ(run("variety sample --n 2 --max-iter 0").code, 2);
  EXPECT_EQ(run("variety sample --n 2 --max-iter 0").out, "");
  // A trace cut off before closing is still a valid report.
  EXPECT_EQ(run("variety trace --max-steps 3 --components 1").code, 0);
}
