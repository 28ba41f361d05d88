#pragma once

// Output plumbing for the CLI: metadata, CSV and JSON artifacts, config
// hashing and the post-hoc residual audit.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nash::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kNonConvergence = 2, kInvariantViolation = 3, kBadConfig = 4 };

/// Failure carrying the exit code it maps to.
struct CliError : std::runtime_error {
  CliError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
  int code;
};

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Metadata shared by every artifact. nlohmann::json keeps object keys
/// sorted, so dump() is canonical.
inline json metadata(const json& config) {
  return json{{"version", kVersion},
              {"config_hash", fnv1a_hex(config.dump())},
              {"seed", config.value("seed", json(nullptr))},
              {"config", config}};
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV with '#' metadata lines, a header row and %.17g numbers.
class CsvWriter {
 public:
  CsvWriter(const json& config, std::vector<std::string> columns) : columns_(std::move(columns)) {
    const json meta = metadata(config);
    out_ << "# version=" << meta["version"].get<std::string>() << '\n';
    out_ << "# config_hash=" << meta["config_hash"].get<std::string>() << '\n';
    out_ << "# seed=" << meta["seed"].dump() << '\n';
    out_ << "# config=" << config.dump() << '\n';
  }

  void note(const std::string& key, const std::string& value) {
    if (header_written_) throw std::logic_error("CsvWriter: notes must precede rows");
    out_ << "# " << key << '=' << value << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw std::logic_error("CsvWriter: row width mismatch");
    if (!header_written_) {
      write_line(columns_);
      header_written_ = true;
    }
    write_line(cells);
  }

  [[nodiscard]] std::string str() {
    if (!header_written_) {
      write_line(columns_);
      header_written_ = true;
    }
    return out_.str();
  }

 private:
  void write_line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  std::vector<std::string> columns_;
  std::ostringstream out_;
  bool header_written_ = false;
};

inline std::string num(double v) { return format_number(v); }
inline std::string num(long long v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }

/// JSON document with a "meta" object; numbers round-trip exactly.
inline std::string json_document(const json& config, json body) {
  body["meta"] = metadata(config);
  return body.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Audit

struct AuditReport {
  std::string format;
  long long checked = 0;
  long long failures = 0;
  double max_residual = 0.0;
  double tol = 0.0;
  json config;
};

namespace detail {

inline void audit_json(const json& j, double tol, AuditReport& rep) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (k == "residual" && (v.is_number() || v.is_null())) {
        ++rep.checked;
        const double r = v.is_number() ? v.get<double>() : std::nan("");
        if (!(r < tol)) ++rep.failures;
        if (std::isnan(r) || r > rep.max_residual) rep.max_residual = r;
      } else if (k != "meta") {
        audit_json(v, tol, rep);
      }
    }
  } else if (j.is_array()) {
    for (const auto& v : j) audit_json(v, tol, rep);
  }
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace detail

/// Re-checks every recorded residual against tol (taken from the artifact's
/// own config unless overridden). CSV columns and JSON keys named "residual"
/// are checked; a missing or non-numeric entry counts as a failure.
inline AuditReport audit_text(const std::string& text, std::optional<double> tol_override) {
  AuditReport rep;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw CliError(kBadConfig, "audit: empty file");
  if (text[first] == '{') {
    rep.format = "json";
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw CliError(kBadConfig, std::string("audit: malformed JSON: ") + e.what());
    }
    if (!doc.contains("meta") || !doc["meta"].contains("config")) throw CliError(kBadConfig, "audit: no metadata");
    rep.config = doc["meta"]["config"];
    rep.tol = tol_override.value_or(rep.config.value("tol", 1e-8));
    detail::audit_json(doc, rep.tol, rep);
  } else {
    rep.format = "csv";
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    std::vector<std::size_t> cols;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line[0] == '#') {
        if (line.rfind("# config=", 0) == 0) rep.config = json::parse(line.substr(9), nullptr, false);
        continue;
      }
      if (header.empty()) {
        header = detail::split_csv(line);
        for (std::size_t i = 0; i < header.size(); ++i)
          if (header[i] == "residual") cols.push_back(i);
        if (rep.config.is_discarded() || !rep.config.is_object()) throw CliError(kBadConfig, "audit: no metadata");
        rep.tol = tol_override.value_or(rep.config.value("tol", 1e-8));
        continue;
      }
      const auto cells = detail::split_csv(line);
      for (std::size_t c : cols) {
        ++rep.checked;
        double r = std::nan("");
        if (c < cells.size()) {
          char* end = nullptr;
          r = std::strtod(cells[c].c_str(), &end);
          if (end == cells[c].c_str()) r = std::nan("");
        }
        if (!(r < rep.tol)) ++rep.failures;
        if (std::isnan(r) || r > rep.max_residual) rep.max_residual = r;
      }
    }
    if (header.empty()) throw CliError(kBadConfig, "audit: no header row");
  }
  if (rep.checked == 0) throw CliError(kBadConfig, "audit: no residuals recorded");
  return rep;
}

}  // namespace nash::cli
