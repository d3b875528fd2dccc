#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwharm/errors.hpp"
#include "gwharm/stats.hpp"

namespace gwharm {

/// One output row of any estimator run.
struct CsvRow {
  double lambda;
  std::string quantity;
  EstimateWithCI est;
};

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline const char* csv_header() {
  return "lambda,quantity,mean,se,ci_low,ci_high,n,method";
}

inline std::string csv_line(const CsvRow& row) {
  std::ostringstream os;
  os << format_full(row.lambda) << ',' << row.quantity << ','
     << format_full(row.est.mean) << ',' << format_full(row.est.std_error) << ','
     << format_full(row.est.ci_low) << ',' << format_full(row.est.ci_high) << ','
     << row.est.n << ',' << method_name(row.est.method);
  return os.str();
}

inline std::string csv_document(const std::vector<CsvRow>& rows) {
  std::ostringstream os;
  os << csv_header() << '\n';
  for (const auto& r : rows) os << csv_line(r) << '\n';
  return os.str();
}

/// Atomic write: temp file in the target directory, then rename, so a
/// crashed run never leaves a half-written output.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("rename to " + target.string() + " failed: " + ec.message());
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline nlohmann::json estimate_to_json(const EstimateWithCI& e) {
  return nlohmann::json{{"mean", e.mean},        {"se", e.std_error},
                        {"ci_low", e.ci_low},    {"ci_high", e.ci_high},
                        {"n", e.n},              {"method", method_name(e.method)},
                        {"bias_bound", e.bias_bound}};
}

inline nlohmann::json rows_to_json(const std::vector<CsvRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = estimate_to_json(r.est);
    j["lambda"] = r.lambda;
    j["quantity"] = r.quantity;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace gwharm
