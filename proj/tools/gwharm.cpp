// Command-line front end: escape probabilities, RDE pools, dimension and
// children-average estimators, lambda sweeps, and the theorem check suite
// for lambda-biased walks on leafless supercritical Galton-Watson trees.

#include <cstdio>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gwharm/gwharm.hpp"

namespace {

using nlohmann::json;
using namespace gwharm;

constexpr const char* kVersion = "0.1.0";

struct Options {
  std::string dist_json = R"({"1":0.5,"2":0.5})";
  double lambda = 1.0;
  std::string grid;
  std::uint64_t seed = 12345;
  std::size_t pool_size = 100'000;
  std::size_t sweeps = 200;
  std::size_t walk_steps = 1'000'000;
  std::size_t replicas = 16;
  int depth_cap = 3000;
  double tol = 1e-6;
  std::string out;
  std::string format = "csv";
  std::size_t threads = 0;
  bool allow_deterministic = false;
  std::string config_path;
  // subcommand-specific
  int depth = 8;
  std::string method = "closed_form";
  std::size_t bins = 50;
};

OffspringDistribution parse_dist(const std::string& text, bool allow_deterministic) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad offspring JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("offspring spec must be a JSON object");
  std::vector<std::pair<int, double>> spec;
  for (const auto& [key, val] : j.items()) {
    int k;
    try {
      k = std::stoi(key);
    } catch (...) {
      throw ConfigError("offspring key is not an integer: " + key);
    }
    spec.emplace_back(k, val.get<double>());
  }
  return OffspringDistribution::validate(spec, allow_deterministic);
}

std::vector<double> parse_grid(const std::string& text) {
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw ConfigError("grid must be start:stop:step");
  const double start = std::stod(text.substr(0, c1));
  const double stop = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
  const double step = std::stod(text.substr(c2 + 1));
  if (step <= 0.0 || stop < start) throw ConfigError("grid must satisfy start <= stop, step > 0");
  std::vector<double> grid;
  // Endpoint-inclusive within 1e-12.
  for (int i = 0;; ++i) {
    const double x = start + i * step;
    if (x > stop + 1e-12) break;
    grid.push_back(std::min(x, stop));
  }
  return grid;
}

Budget make_budget(const Options& o) {
  Budget b;
  b.pool_size = o.pool_size;
  b.sweeps = o.sweeps;
  b.walk_steps = o.walk_steps;
  b.tol = o.tol;
  b.ray_depth_cap = std::min(o.depth_cap, 30);
  return b;
}

json effective_config(const Options& o, const std::string& subcommand) {
  // Deliberately excludes the thread count: artifacts must be identical
  // for any worker count, so only logical parameters are echoed.
  return json{{"subcommand", subcommand},
              {"dist", json::parse(o.dist_json)},
              {"lambda", o.lambda},
              {"grid", o.grid},
              {"seed", o.seed},
              {"pool_size", o.pool_size},
              {"sweeps", o.sweeps},
              {"walk_steps", o.walk_steps},
              {"replicas", o.replicas},
              {"depth_cap", o.depth_cap},
              {"tol", o.tol},
              {"format", o.format},
              {"allow_deterministic", o.allow_deterministic},
              {"depth", o.depth},
              {"method", o.method},
              {"bins", o.bins},
              {"version", kVersion}};
}

void emit(const std::vector<CsvRow>& rows, const Options& o,
          const std::string& subcommand) {
  std::string body;
  if (o.format == "csv") {
    body = csv_document(rows);
  } else if (o.format == "json") {
    json doc{{"config", effective_config(o, subcommand)}, {"results", rows_to_json(rows)}};
    body = doc.dump(2) + "\n";
  } else {
    throw ConfigError("format must be csv or json");
  }
  if (o.out.empty()) {
    std::fputs(body.c_str(), stdout);
    return;
  }
  write_file_atomic(o.out, body);
  if (o.format == "csv")
    write_file_atomic(o.out + ".meta.json",
                      effective_config(o, subcommand).dump(2) + "\n");
}

int run_sample(const Options& o) {
  const auto dist = parse_dist(o.dist_json, o.allow_deterministic);
  std::vector<CsvRow> rows;
  for (std::size_t r = 0; r < o.replicas; ++r) {
    Tree t = sample_tree(dist, o.depth, RngStream(o.seed, r));
    rows.push_back(CsvRow{0.0, "nodes_replica" + std::to_string(r),
                          EstimateWithCI::exact_value(static_cast<double>(t.size()))});
  }
  std::vector<double> level(o.depth + 1, 0.0);
  for (std::size_t r = 0; r < o.replicas; ++r) {
    Tree t = sample_tree(dist, o.depth, RngStream(o.seed, r));
    for (int d = 0; d <= o.depth; ++d)
      level[d] += static_cast<double>(t.level_size(d)) / static_cast<double>(o.replicas);
  }
  for (int d = 0; d <= o.depth; ++d)
    rows.push_back(CsvRow{0.0, "mean_level_size_" + std::to_string(d),
                          EstimateWithCI::exact_value(level[d])});
  emit(rows, o, "sample");
  return 0;
}

int run_beta(const Options& o) {
  const auto dist = parse_dist(o.dist_json, o.allow_deterministic);
  RefineOptions opts;
  opts.max_depth = o.depth_cap;
  const std::size_t threads = resolve_threads(o.threads);
  std::vector<double> mids(o.replicas), widths(o.replicas);
  parallel_for(o.replicas, threads, [&](std::size_t r) {
    Tree t(dist, RngStream(o.seed, r));
    BetaInterval bi;
    try {
      bi = beta_refined(t, o.lambda, o.tol, opts);
    } catch (const MaxDepthError& e) {
      bi = e.best_interval;
    }
    mids[r] = bi.mid();
    widths[r] = bi.width();
  });
  std::vector<CsvRow> rows;
  rows.push_back(CsvRow{o.lambda, "beta", mean_ci(mids, Method::closed_form_pool)});
  rows.push_back(
      CsvRow{o.lambda, "beta_width", mean_ci(widths, Method::closed_form_pool)});
  for (std::size_t r = 0; r < o.replicas; ++r)
    rows.push_back(CsvRow{o.lambda, "beta_replica" + std::to_string(r),
                          EstimateWithCI::exact_value(mids[r])});
  emit(rows, o, "beta");
  return 0;
}

int run_rde(const Options& o) {
  const auto dist = parse_dist(o.dist_json, o.allow_deterministic);
  const BetaPool pool =
      make_pool(dist, o.lambda, o.pool_size, o.sweeps, RngStream(o.seed, 1));
  std::vector<CsvRow> rows;
  for (const auto& [name, est] :
       pool_expectations(pool, default_pool_functionals(o.lambda)))
    rows.push_back(CsvRow{o.lambda, name, est});
  for (const auto& bin : pool_histogram(pool, o.bins)) {
    CsvRow row{o.lambda,
               "hist_" + format_full(bin.lo) + "_" + format_full(bin.hi),
               EstimateWithCI::exact_value(static_cast<double>(bin.count))};
    rows.push_back(row);
  }
  emit(rows, o, "rde");
  return 0;
}

int run_dim(const Options& o) {
  const auto dist = parse_dist(o.dist_json, o.allow_deterministic);
  const Budget b = make_budget(o);
  std::vector<CsvRow> rows;
  if (o.method == "closed_form" || o.method == "both") {
    rows.push_back(CsvRow{o.lambda, "dim",
                          dim_harmonic(dist, o.lambda, Method::closed_form_pool, b,
                                       RngStream(o.seed, 2))});
  }
  if (o.method == "ergodic" || o.method == "both") {
    Budget rb = b;
    rb.ray_steps = std::max<std::size_t>(2000, o.walk_steps / 500);
    rb.tol = std::max(o.tol, 1e-4);
    rows.push_back(CsvRow{o.lambda, "dim",
                          dim_harmonic(dist, o.lambda, Method::ergodic_ray, rb,
                                       RngStream(o.seed, 3))});
  }
  emit(rows, o, "dim");
  return 0;
}

int run_children(const Options& o) {
  const auto dist = parse_dist(o.dist_json, o.allow_deterministic);
  const Budget b = make_budget(o);
  const ClosedFormEstimates e = closed_form_suite(dist, o.lambda, b, RngStream(o.seed, 2));
  std::vector<CsvRow> rows{
      CsvRow{o.lambda, "harm_children", e.harm_children},
      CsvRow{o.lambda, "walk_children", e.walk_children},
      CsvRow{o.lambda, "rec_harm_children", e.rec_harm},
      CsvRow{o.lambda, "rec_walk_children", e.rec_walk},
  };
  emit(rows, o, "children");
  return 0;
}

int run_sweep(const Options& o) {
  const auto dist = parse_dist(o.dist_json, o.allow_deterministic);
  if (o.grid.empty()) throw ConfigError("sweep requires --grid start:stop:step");
  const std::vector<double> grid = parse_grid(o.grid);
  const Budget b = make_budget(o);
  const std::size_t threads = resolve_threads(o.threads);
  // Each grid point owns index-keyed streams, so the result is identical
  // for any worker count; rows are assembled sequentially afterwards.
  std::vector<SweepPoint> points(grid.size());
  RngStream base(o.seed, 4);
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const double lambda = grid[i];
    if (lambda <= 0.0 || lambda >= dist.mean())
      throw ConfigError("sweep grid point outside (0, m)");
    const BetaPool pool =
        make_pool(dist, lambda, b.pool_size, b.sweeps, base.substream(1));
    const ClosedFormEstimates e = closed_form_estimates(
        closed_form_draws(pool, dist, lambda, b.draws(), base.substream(2)));
    points[i].lambda = lambda;
    points[i].quantities["h"] = e.h;
    points[i].quantities["c"] = e.c;
    points[i].quantities["dim"] = e.dim;
    points[i].quantities["harm_children"] = e.harm_children;
    points[i].quantities["walk_children"] = e.walk_children;
    points[i].quantities["rec_harm_children"] = e.rec_harm;
    points[i].quantities["rec_walk_children"] = e.rec_walk;
  });
  std::vector<CsvRow> rows;
  for (const auto& pt : points)
    for (const auto& [name, est] : pt.quantities)
      rows.push_back(CsvRow{pt.lambda, name, est});
  emit(rows, o, "sweep");
  return 0;
}

json check_report_json(const CheckReport& rep) {
  json arr = json::array();
  for (const auto& e : rep.entries)
    arr.push_back(json{{"claim_id", e.claim_id},
                       {"direction", e.direction},
                       {"lambda", e.lambda},
                       {"value", e.value},
                       {"z", e.z},
                       {"verdict", verdict_name(e.verdict)}});
  return json{{"claims", arr},
              {"any_fail", rep.any_fail},
              {"any_inconclusive", rep.any_inconclusive}};
}

int run_check(const Options& o) {
  const auto dist = parse_dist(o.dist_json, o.allow_deterministic);
  const Budget b = make_budget(o);
  const CheckReport rep = theorem_suite(dist, b, RngStream(o.seed, 5));
  json doc{{"config", effective_config(o, "check")}, {"report", check_report_json(rep)}};
  const std::string body = doc.dump(2) + "\n";
  if (o.out.empty())
    std::fputs(body.c_str(), stdout);
  else
    write_file_atomic(o.out, body);
  if (rep.any_fail) return 1;
  if (rep.any_inconclusive) return 2;
  return 0;
}

void apply_config_file(CLI::App& app, Options& o) {
  if (o.config_path.empty()) return;
  json cfg;
  try {
    cfg = json::parse(read_file(o.config_path));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config file: ") + e.what());
  }
  if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
  auto take = [&](const char* flag, const char* key, auto& slot) {
    const CLI::Option* opt = app.get_option(flag);
    if (opt != nullptr && opt->count() > 0) return;  // explicit flag wins
    if (cfg.contains(key)) slot = cfg.at(key).template get<std::decay_t<decltype(slot)>>();
  };
  if (cfg.contains("dist") && app.get_option("--dist")->count() == 0)
    o.dist_json = cfg.at("dist").is_string() ? cfg.at("dist").get<std::string>()
                                             : cfg.at("dist").dump();
  take("--lambda", "lambda", o.lambda);
  take("--grid", "grid", o.grid);
  take("--seed", "seed", o.seed);
  take("--pool-size", "pool_size", o.pool_size);
  take("--sweeps", "sweeps", o.sweeps);
  take("--walk-steps", "walk_steps", o.walk_steps);
  take("--replicas", "replicas", o.replicas);
  take("--depth-cap", "depth_cap", o.depth_cap);
  take("--tol", "tol", o.tol);
  take("--out", "out", o.out);
  take("--format", "format", o.format);
  take("--threads", "threads", o.threads);
  take("--allow-deterministic", "allow_deterministic", o.allow_deterministic);
  take("--depth", "depth", o.depth);
  take("--method", "method", o.method);
  take("--bins", "bins", o.bins);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lambda-biased walks on Galton-Watson trees: escape probabilities, "
               "RDE pools, harmonic-measure dimension, children averages"};
  app.require_subcommand(1);

  Options o;
  app.add_option("--dist", o.dist_json, "offspring law as JSON, e.g. {\"1\":0.5,\"2\":0.5}");
  app.add_option("--lambda", o.lambda, "bias parameter");
  app.add_option("--grid", o.grid, "lambda grid start:stop:step (endpoint-inclusive)");
  app.add_option("--seed", o.seed, "master RNG seed");
  app.add_option("--pool-size", o.pool_size, "RDE pool size");
  app.add_option("--sweeps", o.sweeps, "RDE sweeps");
  app.add_option("--walk-steps", o.walk_steps, "walk steps for ergodic estimates");
  app.add_option("--replicas", o.replicas, "independent replicas");
  app.add_option("--depth-cap", o.depth_cap, "refinement depth cap");
  app.add_option("--tol", o.tol, "beta interval tolerance");
  app.add_option("--out", o.out, "output path (stdout if empty)");
  app.add_option("--format", o.format, "csv or json");
  app.add_option("--threads", o.threads, "worker threads (overrides GWH_THREADS)");
  app.add_flag("--allow-deterministic", o.allow_deterministic,
               "accept single-atom offspring laws");
  app.add_option("--config", o.config_path, "JSON config file mirroring the flags");
  app.add_option("--depth", o.depth, "tree depth (sample)");
  app.add_option("--method", o.method, "closed_form, ergodic, or both (dim)");
  app.add_option("--bins", o.bins, "histogram bins (rde)");

  auto* sample = app.add_subcommand("sample", "sample trees, report sizes");
  auto* beta = app.add_subcommand("beta", "escape probability with certified interval");
  auto* rde = app.add_subcommand("rde", "population-dynamics fixed point of beta");
  auto* dim = app.add_subcommand("dim", "harmonic-measure dimension");
  auto* children = app.add_subcommand("children", "stationary children averages");
  auto* sweep = app.add_subcommand("sweep", "all quantities over a lambda grid");
  auto* check = app.add_subcommand("check", "theorem verification suite");
  for (CLI::App* sub : {sample, beta, rde, dim, children, sweep, check})
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    apply_config_file(app, o);
    if (sample->parsed()) return run_sample(o);
    if (beta->parsed()) return run_beta(o);
    if (rde->parsed()) return run_rde(o);
    if (dim->parsed()) return run_dim(o);
    if (children->parsed()) return run_children(o);
    if (sweep->parsed()) return run_sweep(o);
    if (check->parsed()) return run_check(o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
