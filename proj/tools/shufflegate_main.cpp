// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0
//
// shufflegate: gen-data, search, prune, retrain, pi, report.
// Exit codes: 0 ok, 1 runtime failure, 2 configuration error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "shufflegate/baseline_pi.hpp"
#include "shufflegate/checkpoint.hpp"
#include "shufflegate/error.hpp"
#include "shufflegate/pipeline.hpp"
#include "shufflegate/report.hpp"

namespace fs = std::filesystem;
using namespace shufflegate;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

// Flat run configuration: SearchConfig keys plus the ones below.
struct RunConfig {
  SearchConfig search;
  std::string out_dir = "out";
  std::string data;  // CSV path; empty means none given
  std::string roles;
  std::string label_column = "label";
  std::size_t emb_dim = 8;
  bool synthetic = false;
  SyntheticSpec spec;
  std::optional<std::size_t> spurious_field;
  double spurious_strength = 0.1;
  std::string strategy = "threshold";
  std::size_t k = 0;
  double threshold = 0.5;
  bool warm_start = false;
  std::size_t repeats = 3;
  std::string format = "csv";
  // Replace alpha with the auto-tuned value times alpha_multiplier.
  bool auto_alpha = false;
  double alpha_multiplier = 1.0;
};

Json run_config_json(const RunConfig& rc) {
  Json j = to_json(rc.search);
  j["out_dir"] = rc.out_dir;
  j["data"] = rc.data;
  j["roles"] = rc.roles;
  j["label_column"] = rc.label_column;
  j["emb_dim"] = rc.emb_dim;
  j["synthetic"] = rc.synthetic;
  j["n_informative"] = rc.spec.n_informative;
  j["n_redundant"] = rc.spec.n_redundant;
  j["n_noise"] = rc.spec.n_noise;
  j["vocab"] = rc.spec.vocab;
  j["effect_scale"] = rc.spec.effect_scale;
  j["n_samples"] = rc.spec.n_samples;
  if (rc.spurious_field) j["spurious_field"] = *rc.spurious_field;
  j["spurious_strength"] = rc.spurious_strength;
  j["strategy"] = rc.strategy;
  j["k"] = rc.k;
  j["threshold"] = rc.threshold;
  j["warm_start"] = rc.warm_start;
  j["repeats"] = rc.repeats;
  j["auto_alpha"] = rc.auto_alpha;
  j["alpha_multiplier"] = rc.alpha_multiplier;
  return j;
}

template <typename V>
V take(const Json& v, const std::string& key) {
  try {
    return v.get<V>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void apply_run_json(const Json& j, RunConfig& rc) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  Json search = Json::object();
  for (const auto& [key, v] : j.items()) {
    if (key == "out_dir") rc.out_dir = take<std::string>(v, key);
    else if (key == "data") rc.data = take<std::string>(v, key);
    else if (key == "roles") rc.roles = take<std::string>(v, key);
    else if (key == "label_column") rc.label_column = take<std::string>(v, key);
    else if (key == "emb_dim") rc.emb_dim = take<std::size_t>(v, key);
    else if (key == "synthetic") rc.synthetic = take<bool>(v, key);
    else if (key == "n_informative") rc.spec.n_informative = take<std::size_t>(v, key);
    else if (key == "n_redundant") rc.spec.n_redundant = take<std::size_t>(v, key);
    else if (key == "n_noise") rc.spec.n_noise = take<std::size_t>(v, key);
    else if (key == "vocab") rc.spec.vocab = take<std::size_t>(v, key);
    else if (key == "effect_scale") rc.spec.effect_scale = take<double>(v, key);
    else if (key == "n_samples") rc.spec.n_samples = take<std::size_t>(v, key);
    else if (key == "spurious_field") rc.spurious_field = take<std::size_t>(v, key);
    else if (key == "spurious_strength") rc.spurious_strength = take<double>(v, key);
    else if (key == "strategy") rc.strategy = take<std::string>(v, key);
    else if (key == "k") rc.k = take<std::size_t>(v, key);
    else if (key == "threshold") rc.threshold = take<double>(v, key);
    else if (key == "warm_start") rc.warm_start = take<bool>(v, key);
    else if (key == "repeats") rc.repeats = take<std::size_t>(v, key);
    else if (key == "format") rc.format = take<std::string>(v, key);
    else if (key == "auto_alpha") rc.auto_alpha = take<bool>(v, key);
    else if (key == "alpha_multiplier") rc.alpha_multiplier = take<double>(v, key);
    else search[key] = v;
  }
  apply_json(search, rc.search);
}

// Command-line values; only those actually given override the config file.
struct Flags {
  std::string config;
  Json given = Json::object();
};

void add_shared(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "flat JSON run config");
  auto str = [&f, cmd](const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(flag, [&f, key](const std::string& v) { f.given[key] = v; }, help);
  };
  auto uint = [&f, cmd](const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::uint64_t>(flag, [&f, key](std::uint64_t v) { f.given[key] = v; }, help);
  };
  auto real = [&f, cmd](const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<double>(flag, [&f, key](double v) { f.given[key] = v; }, help);
  };
  uint("--seed", "seed", "PRNG seed");
  str("--out-dir", "out_dir", "output directory");
  real("--alpha", "alpha", "sparsity weight");
  cmd->add_option_function<std::string>(
      "--granularity", [&f](const std::string& v) { f.given["granularity"] = v; },
      "gate granularity")->check(CLI::IsMember({"field", "dim", "entry"}));
  uint("--chunk", "chunk", "columns per dimension gate");
  uint("--epochs", "epochs", "search epochs");
  uint("--batch-size", "batch_size", "mini-batch size");
  str("--data", "data", "dataset CSV");
  str("--roles", "roles", "roles sidecar CSV");
  str("--label-column", "label_column", "label column name");
}

RunConfig resolve(const Flags& f) {
  RunConfig rc;
  if (!f.config.empty()) {
    Json file;
    try {
      file = read_json(f.config);
    } catch (const Error& e) {
      throw ConfigError(std::string("config file: ") + e.what());
    }
    apply_run_json(file, rc);
  }
  apply_run_json(f.given, rc);
  return rc;
}

std::string roles_path_for(const std::string& data) {
  fs::path p(data);
  return (p.parent_path() / (p.stem().string() + ".roles.csv")).string();
}

Dataset load_dataset(const RunConfig& rc) {
  Dataset ds;
  if (!rc.data.empty()) {
    ds = load_csv(rc.data, rc.label_column, rc.emb_dim);
    std::string roles = rc.roles.empty() ? roles_path_for(rc.data) : rc.roles;
    if (!rc.roles.empty() || fs::exists(roles)) ds.roles = load_roles(roles, ds.schema);
  } else if (rc.synthetic) {
    auto spec = rc.spec;
    spec.seed = rc.search.seed;
    spec.emb_dim = rc.emb_dim;
    ds = generate_synthetic(spec);
  } else {
    throw ConfigError("no dataset: pass --data <csv> (or set \"synthetic\": true)");
  }
  split(ds, rc.search.seed);
  if (rc.synthetic && rc.data.empty() && rc.spurious_field)
    inject_spurious_field(ds, *rc.spurious_field, rc.spurious_strength, rc.search.seed);
  return ds;
}

fs::path out_path(const RunConfig& rc, const std::string& name) {
  fs::create_directories(rc.out_dir);
  return fs::path(rc.out_dir) / name;
}

Json load_report(const RunConfig& rc) {
  auto p = fs::path(rc.out_dir) / "report.json";
  return fs::exists(p) ? read_json(p.string()) : Json::object();
}

void save_report(const RunConfig& rc, Json report, const std::string& command) {
  report["run_config"][command] = run_config_json(rc);
  write_json(out_path(rc, "report.json").string(), report);
}

int cmd_gen_data(const RunConfig& rc) {
  if (rc.spec.n_informative == 0) throw ConfigError("n_informative must be >= 1");
  auto spec = rc.spec;
  spec.seed = rc.search.seed;
  spec.emb_dim = rc.emb_dim;
  auto ds = generate_synthetic(spec);
  if (rc.spurious_field) {
    split(ds, rc.search.seed);
    inject_spurious_field(ds, *rc.spurious_field, rc.spurious_strength, rc.search.seed);
  }
  const auto csv = out_path(rc, "data.csv");
  write_csv(ds, csv.string(), rc.label_column);
  write_roles(ds, out_path(rc, "data.roles.csv").string());
  std::cout << "wrote " << csv.string() << " (" << ds.rows() << " rows, "
            << ds.schema.size() << " fields)\n";
  return 0;
}

int cmd_search(const RunConfig& rc) {
  const auto ds = load_dataset(rc);
  Json report = Json::object();
  auto cfg = rc.search;
  if (rc.auto_alpha) {
    if (!(rc.alpha_multiplier > 0.0)) throw ConfigError("alpha_multiplier must be > 0");
    const auto tune = auto_tune_alpha(cfg, ds);
    cfg.alpha = rc.alpha_multiplier * tune.alpha;
    Json probes = Json::array();
    for (auto [a, dep] : tune.probes) probes.push_back({{"alpha", a}, {"departure", dep}});
    report["alpha_tune"] = {{"tuned", tune.alpha},
                            {"multiplier", rc.alpha_multiplier},
                            {"probes", std::move(probes)}};
  }
  auto result = run_search(cfg, ds);
  report["search"] = to_json(result.report);
  save_report(rc, report, "search");
  write_trace_csv(out_path(rc, "gates.csv").string(), result.report);
  save_checkpoint(out_path(rc, "checkpoint.bin").string(), *result.trainer);
  if (result.report.failed) {
    std::cerr << "search diverged: " << result.report.failure << '\n';
    return kExitRuntime;
  }
  const auto& s = result.report.stats;
  std::cout << "search: " << result.report.steps << " steps, val AUC "
            << result.report.final_val_auc << ", mean gate " << s.mean
            << ", frac below 0.5 " << s.frac_below << '\n';
  return 0;
}

SearchReport stored_search(const RunConfig& rc, const Json& report) {
  if (!report.contains("search"))
    throw ConfigError("no search results in " + rc.out_dir + "/report.json; run search first");
  return search_report_from_json(report["search"]);
}

int cmd_prune(const RunConfig& rc) {
  const auto ds = load_dataset(rc);
  auto report = load_report(rc);
  auto search = stored_search(rc, report);
  const auto strategy = parse_prune_strategy(rc.strategy);
  if (search.final_gates.empty()) {
    // Entry-level reports omit per-entry gates; they live in the checkpoint.
    const auto ck = load_checkpoint((fs::path(rc.out_dir) / "checkpoint.bin").string());
    if (!ck.gates()) throw ConfigError("search checkpoint carries no gates");
    search.final_gates = gate_values_f64(*ck.gates());
  }
  const auto d = decide_prune(search, ds.schema, strategy, rc.k, rc.threshold);
  write_json(out_path(rc, "decision.json").string(), to_json(d));
  report["decision"] = to_json(d);
  save_report(rc, report, "prune");
  std::cout << "prune: kept " << d.kept.size() << " of " << d.total_units
            << " units (ratio " << d.ratio << ")\n";
  return 0;
}

int cmd_retrain(const RunConfig& rc) {
  const auto ds = load_dataset(rc);
  auto report = load_report(rc);
  const auto search = stored_search(rc, report);
  const auto d = decision_from_json(read_json((fs::path(rc.out_dir) / "decision.json").string()));
  std::optional<Trainer<float>> warm;
  if (rc.warm_start) {
    const auto ck = (fs::path(rc.out_dir) / "checkpoint.bin").string();
    const auto fp = checkpoint_fingerprint(ck);
    if (fp != ds.schema.fingerprint_hex())
      throw ConfigError("checkpoint schema " + fp + " does not match dataset schema " +
                        ds.schema.fingerprint_hex());
    warm.emplace(load_checkpoint(ck));
  }
  auto cfg = search.config;
  cfg.seed = rc.search.seed;
  const auto r = run_retrain(cfg, ds, d, warm ? &*warm : nullptr);
  report["retrain"] = to_json(r);
  report["retrain"]["warm_start"] = rc.warm_start;
  report["wysiwyg_gap"] = wysiwyg_gap(search, r);
  save_report(rc, report, "retrain");
  save_checkpoint(out_path(rc, "retrain_checkpoint.bin").string(), *r.trainer);
  std::cout << "retrain: val AUC " << r.val.auc << ", test AUC " << r.test.auc
            << ", wysiwyg gap " << wysiwyg_gap(search, r) << '\n';
  return 0;
}

int cmd_pi(const RunConfig& rc) {
  const auto ds = load_dataset(rc);
  auto report = load_report(rc);
  const auto plain = train_plain(rc.search, ds, rc.search.epochs);
  const auto pi = permutation_importance(*plain.trainer, ds, SplitName::Val, rc.repeats,
                                         rc.search.seed, rc.search.eval_batch_size);
  report["pi"] = to_json(pi);
  report["pi"]["model"] = to_json(plain);
  if (report.contains("search")) {
    const auto search = search_report_from_json(report["search"]);
    if (search.config.granularity == Granularity::Field &&
        search.schema_fingerprint == ds.schema.fingerprint_hex())
      report["pi"]["rank_agreement"] = rank_agreement(pi, search.final_gates);
  }
  save_report(rc, report, "pi");
  std::cout << "pi: base AUC " << pi.base_auc << ", " << pi.n_eval_passes << " passes\n";
  return 0;
}

int cmd_report(const RunConfig& rc) {
  const auto report = load_report(rc);
  const auto search = stored_search(rc, report);
  if (rc.format == "csv") {
    const auto hist = out_path(rc, "gate_histogram.csv");
    const auto curve = out_path(rc, "auc_curve.csv");
    write_gate_histogram_csv(hist.string(), search.final_gates);
    write_auc_curve_csv(curve.string(), search);
    std::cout << hist.string() << '\n' << curve.string() << '\n';
  } else if (rc.format == "json") {
    std::cout << report.dump(2) << '\n';
  } else {
    throw ConfigError("unknown report format '" + rc.format + "' (expected csv or json)");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gate-based sensitivity learning: search, prune, retrain"};
  app.require_subcommand(1);
  Flags flags;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset CSV and roles sidecar");
  add_shared(gen, flags);
  struct GenOpt {
    const char* flag;
    const char* key;
    const char* help;
  };
  for (auto [flag, key, help] : {GenOpt{"--n-informative", "n_informative", "informative fields"},
                                 GenOpt{"--n-redundant", "n_redundant", "recoded copies of informative fields"},
                                 GenOpt{"--n-noise", "n_noise", "label-independent fields"},
                                 GenOpt{"--vocab", "vocab", "categories per field"},
                                 GenOpt{"--n-samples", "n_samples", "rows"},
                                 GenOpt{"--spurious-field", "spurious_field", "field replaced by a train-only signal"}}) {
    const std::string k = key;
    gen->add_option_function<std::uint64_t>(flag, [&flags, k](std::uint64_t v) { flags.given[k] = v; }, help);
  }
  gen->add_option_function<double>("--effect-scale", [&flags](double v) { flags.given["effect_scale"] = v; },
                                   "scale of informative log-odds effects");
  gen->add_option_function<double>("--spurious-strength",
                                   [&flags](double v) { flags.given["spurious_strength"] = v; },
                                   "label agreement of the spurious field in train");

  auto* search = app.add_subcommand("search", "train backbone and gates jointly");
  add_shared(search, flags);
  search->add_flag_function("--auto-alpha", [&flags](std::int64_t) { flags.given["auto_alpha"] = true; },
                            "tune alpha by doubling until the mean gate moves in epoch 1");
  search->add_option_function<double>("--alpha-multiplier",
                                      [&flags](double v) { flags.given["alpha_multiplier"] = v; },
                                      "scale applied to the tuned alpha");
  auto* prune = app.add_subcommand("prune", "turn the search report into a prune decision");
  add_shared(prune, flags);
  prune->add_option_function<std::string>("--strategy", [&flags](const std::string& v) { flags.given["strategy"] = v; },
                                          "threshold (0.5 cut) or topk")
      ->check(CLI::IsMember({"threshold", "topk"}));
  prune->add_option_function<std::uint64_t>("--k", [&flags](std::uint64_t v) { flags.given["k"] = v; },
                                             "units kept by topk");
  prune->add_option_function<double>("--threshold", [&flags](double v) { flags.given["threshold"] = v; },
                                     "gate cut for threshold");
  auto* retrain = app.add_subcommand("retrain", "physically prune and retrain");
  add_shared(retrain, flags);
  retrain->add_flag_function("--warm-start", [&flags](std::int64_t) { flags.given["warm_start"] = true; },
                             "fine-tune from the search weights");
  auto* pi = app.add_subcommand("pi", "permutation importance baseline");
  add_shared(pi, flags);
  pi->add_option_function<std::uint64_t>("--repeats", [&flags](std::uint64_t v) { flags.given["repeats"] = v; },
                                          "shuffles per field");
  auto* rep = app.add_subcommand("report", "export plot data");
  add_shared(rep, flags);
  rep->add_option_function<std::string>("--format", [&flags](const std::string& v) { flags.given["format"] = v; },
                                         "csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const auto rc = resolve(flags);
    if (*gen) return cmd_gen_data(rc);
    if (*search) return cmd_search(rc);
    if (*prune) return cmd_prune(rc);
    if (*retrain) return cmd_retrain(rc);
    if (*pi) return cmd_pi(rc);
    return cmd_report(rc);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
