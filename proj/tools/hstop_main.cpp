// hstop command line: solve, simulate, boundary, verify.
// Talks to the library only through the C API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hstop/hstop.h"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kInput = 1, kSolver = 2, kVerification = 3 };

int exit_code(hstop_status s) {
  switch (s) {
    case HSTOP_OK: return kOk;
    case HSTOP_ERR_SOLVER: return kSolver;
    case HSTOP_ERR_VERIFICATION: return kVerification;
    default: return kInput;
  }
}

// Error JSON on stdout, exit code by status.
struct Failure {
  int code;
};

[[noreturn]] void raise_error(int code, const std::string& json) {
  std::cout << json << std::endl;
  throw Failure{code};
}

[[noreturn]] void raise_error(int code, const char* kind, const std::string& message) {
  raise_error(code, Json{{"error", kind}, {"message", message}}.dump());
}

void check(hstop_status s) {
  if (s != HSTOP_OK) raise_error(exit_code(s), hstop_last_error());
}

std::string take(char* s) {
  std::string out(s ? s : "");
  hstop_free_string(s);
  return out;
}

struct ModelHandle {
  hstop_model* ptr = nullptr;
  ~ModelHandle() { hstop_model_free(ptr); }
};

struct SolutionHandle {
  hstop_solution* ptr = nullptr;
  ~SolutionHandle() { hstop_solution_free(ptr); }
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) raise_error(kInput, "io", "cannot write " + path.string());
}

// Flags that were given on the command line, as JSON overrides.
class Overrides {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, T& target,
                   const std::string& help) {
    CLI::Option* opt = app->add_option(flag, target, help);
    entries_.push_back({opt, key, [&target] { return Json(target); }});
    return opt;
  }
  CLI::Option* add_flag(CLI::App* app, const std::string& flag, const std::string& key, bool& target,
                        const std::string& help) {
    CLI::Option* opt = app->add_flag(flag, target, help);
    entries_.push_back({opt, key, [&target] { return Json(target); }});
    return opt;
  }
  /// Values from `base` (a replayed artifact) first, then explicit flags.
  Json collect(const Json& base) const {
    Json out = base.is_object() ? base : Json::object();
    for (const auto& e : entries_)
      if (e.opt->count() > 0) out[e.key] = e.value();
    return out;
  }

 private:
  struct Entry {
    CLI::Option* opt;
    std::string key;
    std::function<Json()> value;
  };
  std::vector<Entry> entries_;
};

struct Common {
  std::string model_path;
  std::string replay_path;
  std::string out_dir = ".";
};

struct Loaded {
  ModelHandle model;
  Json model_json;
  Json overrides;
};

void load(const Common& c, const Overrides& flags, Loaded& out) {
  Json base = Json::object();
  if (!c.replay_path.empty()) {
    std::ifstream in(c.replay_path);
    if (!in) raise_error(kInput, "artifact_not_found", "cannot open " + c.replay_path);
    Json artifact;
    try {
      artifact = Json::parse(in);
    } catch (const Json::exception& e) {
      raise_error(kInput, "invalid_artifact", e.what());
    }
    if (!artifact.contains("model") || !artifact.contains("overrides"))
      raise_error(kInput, "invalid_artifact", "artifact lacks model/overrides");
    check(hstop_model_parse(artifact["model"].dump().c_str(), &out.model.ptr));
    base = artifact["overrides"];
  } else {
    if (c.model_path.empty()) raise_error(kInput, "invalid_argument", "--model or --replay is required");
    const hstop_status s = hstop_model_load(c.model_path.c_str(), &out.model.ptr);
    if (s != HSTOP_OK) raise_error(exit_code(s), hstop_last_error());
  }
  char* text = nullptr;
  check(hstop_model_json(out.model.ptr, &text));
  out.model_json = Json::parse(take(text));
  out.overrides = flags.collect(base);

  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) raise_error(kInput, "io", "cannot create " + c.out_dir + ": " + ec.message());
}

Json envelope(const char* command, const Loaded& l, const Json& seed) {
  return Json{{"command", command},
              {"tool_version", hstop_version()},
              {"model", l.model_json},
              {"overrides", l.overrides},
              {"seed", seed}};
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) && !j[key].is_null() ? j[key].get<T>() : fallback;
}

// ---- subcommands ----

int run_solve(const Common& c, const Overrides& flags) {
  Loaded l;
  load(c, flags, l);
  const double phi_min = get_or(l.overrides, "phi_min", 1e-2);
  const double phi_max = get_or(l.overrides, "phi_max", 1e2);
  const std::size_t points = get_or<std::size_t>(l.overrides, "phi_points", 201);

  SolutionHandle sol;
  check(hstop_solve(l.model.ptr, &sol.ptr));
  char* text = nullptr;
  check(hstop_solution_json(sol.ptr, &text));
  const Json solution = Json::parse(take(text));
  check(hstop_value_table_csv(sol.ptr, phi_min, phi_max, points, &text));
  const std::string csv = take(text);

  Json doc = envelope("solve", l, nullptr);
  doc["config"] = Json{{"phi_min", phi_min}, {"phi_max", phi_max}, {"phi_points", points}};
  doc["solution"] = solution;
  const fs::path out(c.out_dir);
  write_file(out / "solution.json", doc.dump(2) + "\n");
  write_file(out / "value.csv", csv);
  Json run = doc;
  run.erase("solution");
  run["outputs"] = {"solution.json", "value.csv"};
  write_file(out / "value.csv.json", run.dump(2) + "\n");
  std::cout << solution.dump() << std::endl;
  return kOk;
}

int run_simulate(const Common& c, const Overrides& flags) {
  Loaded l;
  load(c, flags, l);
  const auto n_paths = get_or<std::uint64_t>(l.overrides, "n_paths", 10);
  const auto seed = get_or<std::uint64_t>(l.overrides, "seed", 0);
  const std::string layout = get_or<std::string>(l.overrides, "layout", "long");
  if (layout != "long" && layout != "per-path") raise_error(kInput, "invalid_argument", "--layout must be long or per-path");
  const Json options{{"measure", get_or<std::string>(l.overrides, "measure", "ppi")},
                     {"t_max", get_or(l.overrides, "t_max", 1.0)},
                     {"dt", get_or(l.overrides, "dt", 1e-3)},
                     {"seed", seed},
                     {"filter", get_or(l.overrides, "filter", false)}};
  const std::string opts = options.dump();
  const fs::path out(c.out_dir);
  Json outputs = Json::array();

  if (layout == "long") {
    std::string csv;
    for (std::uint64_t i = 0; i < n_paths; ++i) {
      char* text = nullptr;
      check(hstop_simulate_path_csv(l.model.ptr, opts.c_str(), i, static_cast<int64_t>(i), i == 0, &text));
      csv += take(text);
    }
    write_file(out / "paths.csv", csv);
    outputs.push_back("paths.csv");
  } else {
    for (std::uint64_t i = 0; i < n_paths; ++i) {
      char* text = nullptr;
      check(hstop_simulate_path_csv(l.model.ptr, opts.c_str(), i, -1, 1, &text));
      char name[32];
      std::snprintf(name, sizeof name, "path_%05llu.csv", static_cast<unsigned long long>(i));
      write_file(out / name, take(text));
      outputs.push_back(name);
    }
  }
  Json run = envelope("simulate", l, seed);
  Json config = options;
  config["n_paths"] = n_paths;
  config["layout"] = layout;
  run["config"] = config;
  run["outputs"] = outputs;
  write_file(out / "simulate.run.json", run.dump(2) + "\n");
  return kOk;
}

int run_boundary(const Common& c, const Overrides& flags) {
  Loaded l;
  load(c, flags, l);
  const Json options{{"phi_min", get_or(l.overrides, "phi_min", 1e-4)},
                     {"phi_max", get_or(l.overrides, "phi_max", 1e4)},
                     {"grid_n", get_or<std::uint64_t>(l.overrides, "grid_n", 4001)},
                     {"relaxation", get_or(l.overrides, "relaxation", 0.0)}};
  char* csv = nullptr;
  char* info = nullptr;
  check(hstop_boundary(l.model.ptr, options.dump().c_str(), &csv, &info));
  Json doc = envelope("boundary", l, nullptr);
  doc["config"] = options;
  doc["result"] = Json::parse(take(info));
  const fs::path out(c.out_dir);
  write_file(out / "boundary.csv", take(csv));
  doc["outputs"] = {"boundary.csv", "boundary.json"};
  write_file(out / "boundary.json", doc.dump(2) + "\n");
  std::cerr << "boundary_estimates " << doc["result"]["boundary_estimates"].dump() << std::endl;
  return kOk;
}

int run_verify(const Common& c, const Overrides& flags) {
  Loaded l;
  load(c, flags, l);
  char* report = nullptr;
  int all_pass = 0;
  const hstop_status s = hstop_verify(l.model.ptr, l.overrides.dump().c_str(), &report, &all_pass);
  if (s != HSTOP_OK && s != HSTOP_ERR_VERIFICATION) check(s);
  const std::string text = take(report);
  write_file(fs::path(c.out_dir) / "verify_report.json", text);
  const Json doc = Json::parse(text);
  for (const auto& ch : doc["checks"]) {
    std::cerr << (ch["pass"].get<bool>() ? "PASS " : "FAIL ") << ch["name"].get<std::string>()
              << " estimate=" << ch["estimate"].dump() << " reference=" << ch["reference"].dump()
              << " tolerance=" << ch["tolerance"].dump() << "\n";
  }
  std::cout << Json{{"all_pass", all_pass != 0}, {"report", "verify_report.json"}}.dump() << std::endl;
  return all_pass ? kOk : kVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hstop: optimal stopping with a hidden drift and a random horizon"};
  app.set_version_flag("--version", std::string(hstop_version()));
  app.require_subcommand(1);

  Common common;
  // Storage for flag values; Overrides records which ones were given.
  std::uint64_t n_paths = 0, seed = 0, grid_n = 0, phi_points = 0, workers = 0, scan_points = 0;
  double dt = 0, t_max = 0, phi_min = 0, phi_max = 0, relaxation = 0, perturb = 0, off = 0, max_tail = 0;
  std::string measure, layout;
  bool filter = false;

  auto common_flags = [&](CLI::App* sub) {
    sub->add_option("--model", common.model_path, "model JSON file");
    sub->add_option("--replay", common.replay_path, "artifact whose model and overrides are re-run");
    sub->add_option("--out", common.out_dir, "output directory")->capture_default_str();
  };

  Overrides solve_o, sim_o, bnd_o, ver_o;
  CLI::App* solve = app.add_subcommand("solve", "closed-form thresholds, solution JSON and value table");
  common_flags(solve);
  solve_o.add(solve, "--phi-min", "phi_min", phi_min, "value table lower phi (default 1e-2)");
  solve_o.add(solve, "--phi-max", "phi_max", phi_max, "value table upper phi (default 1e2)");
  solve_o.add(solve, "--phi-points", "phi_points", phi_points, "value table size (default 201)");

  CLI::App* sim = app.add_subcommand("simulate", "sample paths as CSV");
  common_flags(sim);
  sim_o.add(sim, "--n-paths", "n_paths", n_paths, "number of paths (default 10)");
  sim_o.add(sim, "--dt", "dt", dt, "time step (default 1e-3)");
  sim_o.add(sim, "--t-max", "t_max", t_max, "horizon of the simulated grid (default 1)");
  sim_o.add(sim, "--seed", "seed", seed, "master seed (default 0)");
  sim_o.add(sim, "--measure", "measure", measure, "ppi or p0 (default ppi)");
  sim_o.add(sim, "--layout", "layout", layout, "long (one file, path_id column) or per-path");
  sim_o.add_flag(sim, "--filter", "filter", filter, "append filter columns");

  CLI::App* bnd = app.add_subcommand("boundary", "finite-difference value and free boundary");
  common_flags(bnd);
  bnd_o.add(bnd, "--phi-min", "phi_min", phi_min, "grid lower phi (default 1e-4)");
  bnd_o.add(bnd, "--phi-max", "phi_max", phi_max, "grid upper phi (default 1e4)");
  bnd_o.add(bnd, "--grid-n", "grid_n", grid_n, "grid nodes (default 4001)");
  bnd_o.add(bnd, "--relaxation", "relaxation", relaxation, "PSOR factor (default: optimal estimate)");

  CLI::App* ver = app.add_subcommand("verify", "run the check suite; exit 3 on any failure");
  common_flags(ver);
  ver_o.add(ver, "--n-paths", "n_paths", n_paths, "Monte Carlo paths, 0 skips (default 20000)");
  ver_o.add(ver, "--dt", "dt", dt, "time step (default 1e-3)");
  ver_o.add(ver, "--t-max", "t_max", t_max, "truncation time (default: from --max-tail-bound)");
  ver_o.add(ver, "--seed", "seed", seed, "master seed (default 0)");
  ver_o.add(ver, "--workers", "workers", workers, "threads (default: all cores)");
  ver_o.add(ver, "--max-tail-bound", "max_tail_bound", max_tail, "truncation error bound (default 1e-4)");
  ver_o.add(ver, "--grid-n", "grid_n", grid_n, "finite-difference nodes, 0 skips (default 4001)");
  ver_o.add(ver, "--phi-min", "phi_min", phi_min, "finite-difference lower phi (default 1e-4)");
  ver_o.add(ver, "--phi-max", "phi_max", phi_max, "finite-difference upper phi (default 1e4)");
  ver_o.add(ver, "--relaxation", "relaxation", relaxation, "PSOR factor (default: optimal estimate)");
  ver_o.add(ver, "--perturb-threshold", "perturb_threshold", perturb, "scale of the scanned reference threshold");
  ver_o.add(ver, "--off-threshold", "off_threshold", off, "scale of the off-policy threshold (default 0.5)");
  ver_o.add(ver, "--scan-points", "scan_points", scan_points, "candidates in the optimality scan (default 9)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInput;
  }

  try {
    if (solve->parsed()) return run_solve(common, solve_o);
    if (sim->parsed()) return run_simulate(common, sim_o);
    if (bnd->parsed()) return run_boundary(common, bnd_o);
    return run_verify(common, ver_o);
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cout << Json{{"error", "internal"}, {"message", e.what()}}.dump() << std::endl;
    return kInput;
  }
}
