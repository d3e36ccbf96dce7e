#ifndef MLKF_TOOLS_CLI_HPP
#define MLKF_TOOLS_CLI_HPP

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlkf/mlkf.hpp"

namespace mlkf::cli {

using json = nlohmann::json;

inline std::vector<double> parse_q_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    if (!io::detail::parse_double(io::detail::trim(item), v)) throw config_error("--q: '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw config_error("--q needs at least one value");
  return out;
}

inline json group_labels_json(const std::vector<Index>& groups, const std::vector<long long>& labels) {
  json arr = json::array();
  for (Index g : groups) arr.push_back(labels[g]);
  return arr;
}

inline json variables_json(const std::vector<Index>& vars) {
  json arr = json::array();
  for (Index j : vars) arr.push_back(j + 1);
  return arr;
}

inline json bound_report_json(const bounds::BoundReport& r) {
  json j;
  j["name"] = r.name;
  j["value"] = r.value;
  j["method"] = bounds::to_string(r.method);
  j["error_estimate"] = r.error_estimate;
  if (r.method == bounds::Method::monte_carlo) {
    j["ci_half_width"] = r.ci_half_width;
    j["standard_error"] = r.standard_error;
  }
  j["parameters"] = json::object();
  for (const auto& [k, v] : r.parameters) j["parameters"][k] = v;
  return j;
}

/// Writes result files and a manifest under `dir`; only paths inside `dir` are touched.
class OutputDir {
 public:
  explicit OutputDir(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw input_error(dir_ + ": cannot create output directory (" + ec.message() + ")");
  }

  std::string write(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::path(dir_) / name).string();
    io::write_file(path, content);
    outputs_.push_back(path);
    return path;
  }

  void write_manifest(const std::string& command, const json& config, const json& seeds, double wall_seconds) {
    json m;
    m["command"] = command;
    m["config"] = config;
    m["config_digest"] = io::digest(config);
    m["seeds"] = seeds;
    m["version"] = mlkf::version;
    m["wall_time_seconds"] = wall_seconds;
    const std::string path = (std::filesystem::path(dir_) / "manifest.json").string();
    outputs_.push_back(path);
    m["outputs"] = outputs_;
    io::write_file(path, io::to_string(m));
  }

 private:
  std::string dir_;
  std::vector<std::string> outputs_;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct MkfArgs {
  std::string x, y, groups, q = "0.2", variant = "plus", penalty = "l1", combiner = "signed_max", out;
  double c = 1.0;
  std::uint64_t seed = 1;
  bool dump_stats = false;
  bool export_knockoffs = false;
};

inline int cmd_mkf(const MkfArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto layers = io::read_layer_spec_csv(a.groups);
  const auto& spec = layers.spec;
  const Eigen::MatrixXd X = io::read_matrix_csv(a.x);
  const Eigen::VectorXd y = io::read_vector_csv(a.y);
  if (static_cast<Index>(X.cols()) != spec.num_variables()) {
    throw dimension_error(a.x + " has " + std::to_string(X.cols()) + " columns but " + a.groups + " describes " +
                          std::to_string(spec.num_variables()) + " variables");
  }
  if (y.size() != X.rows()) {
    throw dimension_error(a.y + " has " + std::to_string(y.size()) + " rows but " + a.x + " has " +
                          std::to_string(X.rows()));
  }
  FilterConfig cfg{parse_q_list(a.q), parse_variant(a.variant), a.c};
  cfg.validate(spec.num_layers());
  PenaltySpec pen;
  pen.kind = parse_penalty(a.penalty);
  const Combiner combiner = parse_combiner(a.combiner);
  const Dataset ds = standardize(Dataset(X, y));
  if (ds.n() < 2 * ds.num_variables()) {
    throw dimension_error("fixed-design knockoffs need n >= 2N (" + a.x + ": n = " + std::to_string(ds.n()) +
                          ", N = " + std::to_string(ds.num_variables()) + ")");
  }
  const auto designs = build_layer_designs(ds, spec, a.seed);
  const auto res = run_mkf(ds, spec, designs, pen, combiner, cfg);

  json config;
  config["x"] = a.x;
  config["y"] = a.y;
  config["groups"] = a.groups;
  config["q"] = cfg.q;
  config["variant"] = to_string(cfg.variant);
  config["c"] = cfg.c;
  config["penalty"] = to_string(pen.kind);
  config["combiner"] = to_string(combiner);
  config["seed"] = a.seed;

  json record;
  record["command"] = "mkf";
  record["config"] = config;
  record["selected_variables"] = variables_json(res.selection.variables);
  record["n_selected_variables"] = res.selection.variables.size();
  record["layers"] = json::array();
  for (Index m = 0; m < spec.num_layers(); ++m) {
    const double t = res.thresholds.t[m];
    json layer;
    layer["layer"] = m + 1;
    layer["t_star"] = io::number(t);
    layer["q"] = cfg.q[m];
    layer["v_hat"] = v_hat(res.statistics[m].W, t, cfg);
    layer["n_selected"] = res.selection.layer_groups[m].size();
    layer["groups"] = group_labels_json(res.selection.layer_groups[m], layers.group_labels[m]);
    record["layers"].push_back(layer);
  }

  OutputDir dir(a.out);
  dir.write("result.json", io::to_string(record));
  if (a.dump_stats) {
    std::ostringstream csv;
    csv << "layer,group,Z,Z_tilde,W\n";
    for (Index m = 0; m < spec.num_layers(); ++m) {
      for (Index g = 0; g < spec.num_groups(m); ++g) {
        csv << m + 1 << ',' << layers.group_labels[m][g] << ',' << io::format_double(res.importance[m].Z[g]) << ','
            << io::format_double(res.importance[m].Z_tilde[g]) << ',' << io::format_double(res.statistics[m].W[g])
            << '\n';
      }
    }
    dir.write("stats.csv", csv.str());
  }
  if (a.export_knockoffs) {
    for (Index m = 0; m < spec.num_layers(); ++m) {
      std::ostringstream csv;
      io::write_matrix_csv(csv, designs[m].X_tilde);
      dir.write("knockoffs_layer" + std::to_string(m + 1) + ".csv", csv.str());
    }
  }
  json seeds = json::array();
  for (Index m = 0; m < spec.num_layers(); ++m) seeds.push_back(derive_seed(a.seed, {m}));
  dir.write_manifest("mkf", config, {{"seed", a.seed}, {"layer_seeds", seeds}}, seconds_since(t0));
  out << io::to_string(record);
  return 0;
}

struct PfilterArgs {
  std::string pvalues, groups, q = "0.2", aggregation = "simes", correction = "none", out;
};

inline int cmd_pfilter(const PfilterArgs& a, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto layers = io::read_layer_spec_csv(a.groups);
  const auto& spec = layers.spec;
  PfilterConfig cfg{parse_q_list(a.q), parse_correction(a.correction)};
  cfg.validate(spec.num_layers());
  PValueLayers pv;
  Index clamped = 0;
  if (a.aggregation == "precomputed") {
    pv.values = io::read_group_pvalues_csv(a.pvalues, layers);
  } else {
    const auto how = parse_aggregation(a.aggregation);
    const auto base = io::read_variable_pvalues_csv(a.pvalues, spec.num_variables());
    auto agg = aggregate_pvalues(base, spec, how);
    pv = std::move(agg.layers);
    clamped = agg.zero_clamped;
    if (clamped > 0) {
      err << "warning: " << clamped << " group(s) contain a p-value of exactly 0; their Fisher p-value is set to 0\n";
    }
  }
  const auto res = generalized_pfilter(pv, spec, cfg);

  json config;
  config["pvalues"] = a.pvalues;
  config["groups"] = a.groups;
  config["q"] = cfg.q;
  config["aggregation"] = a.aggregation;
  config["correction"] = to_string(cfg.correction);

  json record;
  record["command"] = "pfilter";
  record["config"] = config;
  record["selected_variables"] = variables_json(res.selection.variables);
  record["n_selected_variables"] = res.selection.variables.size();
  record["zero_clamped_groups"] = clamped;
  record["layers"] = json::array();
  for (Index m = 0; m < spec.num_layers(); ++m) {
    json layer;
    layer["layer"] = m + 1;
    layer["t_star"] = res.thresholds.t[m];
    layer["q"] = cfg.q[m];
    layer["fdp_hat"] = pfilter_fdp_hat(pv, res.thresholds.t, m, spec, cfg);
    layer["n_selected"] = res.selection.layer_groups[m].size();
    layer["groups"] = group_labels_json(res.selection.layer_groups[m], layers.group_labels[m]);
    record["layers"].push_back(layer);
  }
  if (!a.out.empty()) {
    OutputDir dir(a.out);
    dir.write("result.json", io::to_string(record));
    dir.write_manifest("pfilter", config, json::object(), seconds_since(t0));
  }
  out << io::to_string(record);
  return 0;
}

struct BoundsArgs {
  std::string which;
  int k0 = 20;
  int k0_max = 20;
  std::size_t steps = 10000;
  std::size_t reps = 100000;
  std::uint64_t seed = 1;
  double g = 1e6;
  int n = 100;
  std::string out;
};

inline int cmd_bounds(const BoundsArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  json report;
  json config{{"which", a.which}};
  if (a.which == "akn-loose") {
    report = bound_report_json(bounds::akn_loose_bound());
  } else if (a.which == "akn-refined") {
    config["k0"] = a.k0;
    report = bound_report_json(bounds::akn_refined_bound(a.k0));
  } else if (a.which == "akn-mc") {
    config["steps"] = a.steps;
    config["reps"] = a.reps;
    config["seed"] = a.seed;
    report = bound_report_json(bounds::akn_monte_carlo(a.steps, a.reps, a.seed));
  } else if (a.which == "cpf") {
    config["g"] = a.g;
    report = bound_report_json({"cpf", bounds::cpf_formula(a.g), bounds::Method::closed_form, 0.0, 0.0, 0.0, {{"G", a.g}}});
  } else if (a.which == "apf-exact") {
    config["n"] = a.n;
    report = bound_report_json(bounds::apf_exact(a.n));
  } else if (a.which == "apf-mc") {
    config["n"] = a.n;
    config["reps"] = a.reps;
    config["seed"] = a.seed;
    report = bound_report_json(bounds::apf_monte_carlo(a.n, a.reps, a.seed));
  } else if (a.which == "gamma-integral") {
    report = bound_report_json(bounds::gamma_tail_integral());
  } else if (a.which == "table") {
    config["k0_max"] = a.k0_max;
    if (a.k0_max < 0 || a.k0_max > 24) throw cost_error("--k0-max must lie in [0, 24]");
    report["name"] = "akn_refined_table";
    report["rows"] = json::array();
    for (const auto& [k0, v] : bounds::akn_bound_table(a.k0_max)) report["rows"].push_back({{"k0", k0}, {"value", v}});
  } else {
    throw config_error("unknown bound '" + a.which + "'");
  }
  if (!a.out.empty()) {
    OutputDir dir(a.out);
    dir.write("bounds.json", io::to_string(report));
    dir.write_manifest("bounds", config, {{"seed", a.seed}}, seconds_since(t0));
  }
  out << io::to_string(report);
  return 0;
}

struct SimulateArgs {
  std::string config, out_dir, profile;
  long long reps = -1;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  json doc = a.config.empty() ? json::object() : toml::parse_file(a.config);
  if (!a.profile.empty()) {
    if (doc.contains("profile") && doc["profile"] != a.profile) {
      throw config_error("--profile " + a.profile + " conflicts with profile in " + a.config);
    }
    doc["profile"] = a.profile;
  }
  if (a.reps >= 0) doc["reps"] = a.reps;
  const auto cfg = sim::config_from_json(doc);
  const auto results = sim::run_sweep(cfg);

  std::ostringstream csv;
  sim::write_results_csv(csv, results);
  OutputDir dir(a.out_dir);
  dir.write("results.csv", csv.str());
  json failures = json::array();
  for (const auto& res : results) {
    for (const auto& rec : res.methods) {
      for (const auto& f : rec.failures) {
        failures.push_back({{"method", sim::to_string(rec.method)}, {"param_value", res.param_value}, {"error", f}});
        err << "warning: " << sim::to_string(rec.method) << " " << f << '\n';
      }
    }
  }
  if (!failures.empty()) dir.write("failures.json", io::to_string(failures));
  const json config = sim::config_to_json(cfg);
  dir.write_manifest("simulate", config,
                     {{"master_seed", cfg.master_seed}, {"pattern_seed", cfg.pattern_seed}},
                     seconds_since(t0));
  out << csv.str();
  return 0;
}

/// Parses arguments and runs one subcommand. Exit codes: 0 success, 1 internal numeric
/// failure, 2 invalid input or arguments.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Multilayer knockoff filter, generalized p-filter, bound laboratory and simulation harness.\n"
               "Default worker count comes from the MLKF_THREADS environment variable."};
  app.require_subcommand(1);
  app.set_version_flag("--version", mlkf::version);

  MkfArgs mkf;
  auto* mkf_cmd = app.add_subcommand("mkf", "Run the multilayer knockoff filter on a fixed design");
  mkf_cmd->add_option("--x", mkf.x, "Design matrix CSV (no header)")->required();
  mkf_cmd->add_option("--y", mkf.y, "Response CSV (single column, no header)")->required();
  mkf_cmd->add_option("--groups", mkf.groups, "LayerSpec CSV with header variable,layer,group")->required();
  mkf_cmd->add_option("--q", mkf.q, "Comma-separated FDR targets, one per layer");
  mkf_cmd->add_option("--variant", mkf.variant, "plus or basic");
  mkf_cmd->add_option("--c", mkf.c, "Multiplier on the false-discovery estimate");
  mkf_cmd->add_option("--penalty", mkf.penalty, "l1 or group_l2");
  mkf_cmd->add_option("--combiner", mkf.combiner, "signed_max or difference");
  mkf_cmd->add_option("--seed", mkf.seed, "Seed for the knockoff construction");
  mkf_cmd->add_option("--out", mkf.out, "Output directory")->required();
  mkf_cmd->add_flag("--dump-stats", mkf.dump_stats, "Also write stats.csv (layer,group,Z,Z_tilde,W)");
  mkf_cmd->add_flag("--export-knockoffs", mkf.export_knockoffs, "Also write the knockoff matrix of each layer");

  PfilterArgs pf;
  auto* pf_cmd = app.add_subcommand("pfilter", "Run the generalized p-filter");
  pf_cmd->add_option("--pvalues", pf.pvalues,
                     "p-value CSV: variable,pvalue (simes/fisher) or layer,group,pvalue (precomputed)")
      ->required();
  pf_cmd->add_option("--groups", pf.groups, "LayerSpec CSV with header variable,layer,group")->required();
  pf_cmd->add_option("--q", pf.q, "Comma-separated FDR targets, one per layer");
  pf_cmd->add_option("--aggregation", pf.aggregation, "simes, fisher or precomputed");
  pf_cmd->add_option("--correction", pf.correction, "none or cpf");
  pf_cmd->add_option("--out", pf.out, "Optional output directory");

  BoundsArgs bd;
  auto* bd_cmd = app.add_subcommand("bounds", "Compute inflation constants");
  bd_cmd->add_option("which", bd.which,
                     "akn-loose | akn-refined | akn-mc | cpf | apf-exact | apf-mc | gamma-integral | table")
      ->required();
  bd_cmd->add_option("--k0", bd.k0, "Conditioning depth for akn-refined (0..24)");
  bd_cmd->add_option("--k0-max", bd.k0_max, "Largest depth for table");
  bd_cmd->add_option("--steps", bd.steps, "Walk length for akn-mc (>= 1000)");
  bd_cmd->add_option("--reps", bd.reps, "Monte Carlo replicates");
  bd_cmd->add_option("--seed", bd.seed, "Monte Carlo seed");
  bd_cmd->add_option("--g", bd.g, "Number of groups G for cpf");
  bd_cmd->add_option("--n", bd.n, "Sample size for apf-exact / apf-mc");
  bd_cmd->add_option("--out", bd.out, "Optional output directory");

  SimulateArgs sm;
  auto* sm_cmd = app.add_subcommand("simulate", "Run a simulation study");
  sm_cmd->add_option("--config", sm.config, "TOML experiment config");
  sm_cmd->add_option("--out-dir", sm.out_dir, "Output directory")->required();
  sm_cmd->add_option("--profile", sm.profile, "desk, paper, figure1 or ztest");
  sm_cmd->add_option("--reps", sm.reps, "Override the replicate count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*mkf_cmd) return cmd_mkf(mkf, out);
    if (*pf_cmd) return cmd_pfilter(pf, out, err);
    if (*bd_cmd) return cmd_bounds(bd, out);
    if (*sm_cmd) {
      if (sm.config.empty() && sm.profile.empty()) throw config_error("simulate needs --config or --profile");
      return cmd_simulate(sm, out, err);
    }
  } catch (const input_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const numeric_error& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mlkf::cli

#endif  // MLKF_TOOLS_CLI_HPP
