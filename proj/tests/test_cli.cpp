// End-to-end tests of the command-line front end: exit codes, determinism,
// grid handling, CSV/JSON emission, config files, and schema validation.
// The binary path arrives via the GWHARM_CLI environment variable.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

#include "gwharm/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
  const char* p = std::getenv("GWHARM_CLI");
  REQUIRE(p != nullptr);
  return p;
}

fs::path scratch_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "gwharm_cli_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path scratch_file(const std::string& name) { return scratch_dir() / name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path cap = scratch_file("capture_" + std::to_string(counter++) + ".txt");
  const std::string cmd =
      cli_path() + " " + args + " > " + cap.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.output = slurp(cap);
  fs::remove(cap);
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  for (std::string f; std::getline(is, f, ',');) out.push_back(f);
  return out;
}

// Minimal JSON-schema checker covering the subset the bundled schema uses:
// type, required, properties, items, enum.
bool schema_valid(const json& schema, const json& value, std::string& why) {
  if (schema.contains("type")) {
    const std::string t = schema.at("type");
    const bool ok = (t == "object" && value.is_object()) ||
                    (t == "array" && value.is_array()) ||
                    (t == "string" && value.is_string()) ||
                    (t == "number" && value.is_number()) ||
                    (t == "boolean" && value.is_boolean());
    if (!ok) {
      why = "expected type " + t + ", got " + value.dump().substr(0, 80);
      return false;
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& cand : schema.at("enum"))
      if (cand == value) found = true;
    if (!found) {
      why = "value " + value.dump() + " not in enum";
      return false;
    }
  }
  if (schema.contains("required")) {
    for (const auto& key : schema.at("required"))
      if (!value.contains(key.get<std::string>())) {
        why = "missing required key " + key.get<std::string>();
        return false;
      }
  }
  if (schema.contains("properties") && value.is_object()) {
    for (const auto& [key, sub] : schema.at("properties").items())
      if (value.contains(key) && !schema_valid(sub, value.at(key), why)) {
        why = key + ": " + why;
        return false;
      }
  }
  if (schema.contains("items") && value.is_array()) {
    for (const auto& item : value)
      if (!schema_valid(schema.at("items"), item, why)) return false;
  }
  return true;
}

const std::string kMixed = R"(--dist '{"1":0.5,"2":0.5}')";

}  // namespace

TEST_CASE("check on a deterministic law reports degeneracy and exits 0", "[cli]") {
  const RunResult r = run_cli(
      R"(check --dist '{"2":1}' --lambda 1 --allow-deterministic --pool-size 2000 --sweeps 50)");
  REQUIRE(r.exit_code == 0);
  const json doc = json::parse(r.output);
  REQUIRE(doc.at("report").at("any_fail") == false);
  REQUIRE_FALSE(doc.at("report").at("claims").empty());
  for (const auto& claim : doc.at("report").at("claims"))
    REQUIRE(claim.at("verdict") == "degenerate");
}

TEST_CASE("check report validates against the bundled schema", "[cli]") {
  const fs::path schema_path =
      fs::path(__FILE__).parent_path().parent_path() / "schemas" /
      "check_report.schema.json";
  const json schema = json::parse(slurp(schema_path));
  const RunResult r = run_cli(
      R"(check --dist '{"2":1}' --lambda 1 --allow-deterministic --pool-size 2000 --sweeps 50)");
  REQUIRE(r.exit_code == 0);
  std::string why;
  REQUIRE(schema_valid(schema, json::parse(r.output), why));
}

TEST_CASE("undersized budget yields inconclusive checks and exit 2", "[cli]") {
  const fs::path out = scratch_file("check_small.json");
  const RunResult r =
      run_cli(kMixed + " check --pool-size 2000 --sweeps 150 --seed 5 --out " +
              out.string());
  const json doc = json::parse(slurp(out));
  INFO(doc.at("report").dump(1));
  REQUIRE(doc.at("report").at("any_fail") == false);
  REQUIRE(doc.at("report").at("any_inconclusive") == true);
  REQUIRE(r.exit_code == 2);
}

TEST_CASE("dim reruns are byte-identical", "[cli]") {
  const fs::path a = scratch_file("dim_a.csv");
  const fs::path b = scratch_file("dim_b.csv");
  const std::string args =
      kMixed + " dim --lambda 1 --seed 7 --pool-size 2000 --sweeps 60 --out ";
  REQUIRE(run_cli(args + a.string()).exit_code == 0);
  REQUIRE(run_cli(args + b.string()).exit_code == 0);
  REQUIRE(slurp(a) == slurp(b));
  REQUIRE(fs::exists(a.string() + ".meta.json"));  // config sidecar
}

TEST_CASE("sweep grid 0.05:1.45:0.1 yields 15 lambda rows per quantity", "[cli]") {
  const RunResult r = run_cli(
      kMixed + " sweep --grid 0.05:1.45:0.1 --pool-size 1000 --sweeps 30");
  REQUIRE(r.exit_code == 0);
  const auto lines = lines_of(r.output);
  REQUIRE(lines.front() == gwharm::csv_header());
  REQUIRE(lines.size() == 1 + 15 * 7);
  std::set<std::string> lambdas;
  for (std::size_t i = 1; i < lines.size(); ++i)
    lambdas.insert(fields_of(lines[i]).at(0));
  REQUIRE(lambdas.size() == 15);
}

TEST_CASE("grid endpoints are inclusive", "[cli]") {
  const RunResult r = run_cli(
      kMixed + " sweep --grid 0.5:1.0:0.25 --pool-size 1000 --sweeps 30");
  REQUIRE(r.exit_code == 0);
  std::set<std::string> lambdas;
  const auto lines = lines_of(r.output);
  for (std::size_t i = 1; i < lines.size(); ++i)
    lambdas.insert(fields_of(lines[i]).at(0));
  REQUIRE(lambdas == std::set<std::string>{"0.5", "0.75", "1"});
}

TEST_CASE("empty result emits a header-only CSV", "[cli]") {
  REQUIRE(gwharm::csv_document({}) == std::string(gwharm::csv_header()) + "\n");
}

TEST_CASE("JSON output round-trips bit-exact and matches the CSV", "[cli]") {
  const fs::path jf = scratch_file("children.json");
  const fs::path cf = scratch_file("children.csv");
  const std::string base =
      kMixed + " children --lambda 1 --seed 11 --pool-size 2000 --sweeps 60";
  REQUIRE(run_cli(base + " --format json --out " + jf.string()).exit_code == 0);
  REQUIRE(run_cli(base + " --format csv --out " + cf.string()).exit_code == 0);

  const json doc = json::parse(slurp(jf));
  REQUIRE(json::parse(doc.dump()) == doc);  // serialization round trip
  REQUIRE(doc.at("config").at("seed") == 11);

  // The CSV's 17-significant-digit fields recover the same doubles.
  const auto lines = lines_of(slurp(cf));
  REQUIRE(lines.size() == 1 + doc.at("results").size());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = fields_of(lines[i]);
    const json& res = doc.at("results").at(i - 1);
    REQUIRE(f.at(1) == res.at("quantity").get<std::string>());
    REQUIRE(std::strtod(f.at(2).c_str(), nullptr) == res.at("mean").get<double>());
    REQUIRE(std::strtod(f.at(3).c_str(), nullptr) == res.at("se").get<double>());
  }
}

TEST_CASE("config file mirrors the flags, flags win", "[cli]") {
  const fs::path cfg = scratch_file("run.json");
  {
    std::ofstream out(cfg);
    out << R"({"dist": {"1":0.5,"2":0.5}, "lambda": 0.5, "pool_size": 2000,)"
        << R"( "sweeps": 60, "seed": 9})";
  }
  const fs::path a = scratch_file("cfg_a.csv");
  const fs::path b = scratch_file("cfg_b.csv");
  REQUIRE(run_cli("children --config " + cfg.string() + " --out " + a.string())
              .exit_code == 0);
  REQUIRE(run_cli(kMixed +
                  " children --lambda 0.5 --pool-size 2000 --sweeps 60 --seed 9"
                  " --out " + b.string())
              .exit_code == 0);
  REQUIRE(slurp(a) == slurp(b));

  // An explicit flag overrides the config value.
  const fs::path c = scratch_file("cfg_c.csv");
  REQUIRE(run_cli("children --config " + cfg.string() +
                  " --lambda 1.0 --out " + c.string())
              .exit_code == 0);
  REQUIRE(fields_of(lines_of(slurp(c)).at(1)).at(0) == "1");
}

TEST_CASE("errors exit with status 1", "[cli]") {
  REQUIRE(run_cli("beta --dist not-json").exit_code == 1);
  REQUIRE(run_cli(R"(beta --dist '{"2":1}')").exit_code == 1);  // degenerate gate
  REQUIRE(run_cli(kMixed + " sweep").exit_code == 1);         // missing grid
  REQUIRE(run_cli(kMixed + " sweep --grid 0.5:2.5:0.5").exit_code == 1);
}

TEST_CASE("beta subcommand recovers the b-ary escape probability", "[cli]") {
  const RunResult r = run_cli(
      R"(beta --dist '{"2":1}' --allow-deterministic --lambda 1 --replicas 4)");
  REQUIRE(r.exit_code == 0);
  for (const auto& line : lines_of(r.output)) {
    const auto f = fields_of(line);
    if (f.at(1) == "beta")
      REQUIRE(std::strtod(f.at(2).c_str(), nullptr) ==
              Catch::Approx(0.5).margin(1e-6));
  }
}

TEST_CASE("rde subcommand emits the requested histogram bins", "[cli]") {
  const RunResult r =
      run_cli(kMixed + " rde --lambda 1 --pool-size 1000 --sweeps 30 --bins 10");
  REQUIRE(r.exit_code == 0);
  int hist_rows = 0;
  for (const auto& line : lines_of(r.output))
    if (fields_of(line).at(1).rfind("hist_", 0) == 0) ++hist_rows;
  REQUIRE(hist_rows == 10);
}

TEST_CASE("sample subcommand reports exact b-ary sizes", "[cli]") {
  const RunResult r = run_cli(
      R"(sample --dist '{"2":1}' --allow-deterministic --depth 3 --replicas 2)");
  REQUIRE(r.exit_code == 0);
  for (const auto& line : lines_of(r.output)) {
    const auto f = fields_of(line);
    if (f.at(1).rfind("nodes_replica", 0) == 0)
      REQUIRE(std::strtod(f.at(2).c_str(), nullptr) == 15.0);
  }
}

TEST_CASE("worker count never changes the artifact", "[cli]") {
  const fs::path t1 = scratch_file("sweep_t1.csv");
  const fs::path t4 = scratch_file("sweep_t4.csv");
  const std::string base =
      kMixed + " sweep --grid 0.25:1.25:0.5 --pool-size 2000 --sweeps 50 --seed 3";
  REQUIRE(run_cli(base + " --threads 1 --out " + t1.string()).exit_code == 0);
  REQUIRE(run_cli(base + " --threads 4 --out " + t4.string()).exit_code == 0);
  REQUIRE(slurp(t1) == slurp(t4));
  REQUIRE(slurp(fs::path(t1.string() + ".meta.json")) ==
          slurp(fs::path(t4.string() + ".meta.json")));
}
