// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "shufflegate/error.hpp"

namespace shufflegate {

namespace {

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double number_of(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

template <typename V>
V get_as(const Json& j, const std::string& key) {
  try {
    return j.get<V>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

Json to_json(const SearchConfig& c) {
  return Json{{"granularity", to_string(c.granularity)},
              {"chunk", c.chunk},
              {"alpha", c.alpha},
              {"tau", c.tau},
              {"init_gate", c.init_gate},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"warmup_steps", c.warmup_steps},
              {"eval_every", c.eval_every},
              {"trace_every", c.trace_every},
              {"seed", c.seed},
              {"lr", c.lr},
              {"hidden", c.hidden},
              {"eval_batch_size", c.eval_batch_size},
              {"retrain_epochs", c.retrain_epochs},
              {"finetune_epochs", c.finetune_epochs}};
}

void apply_json(const Json& j, SearchConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "granularity") {
      c.granularity = parse_granularity(get_as<std::string>(v, key));
    } else if (key == "chunk") {
      c.chunk = get_as<std::size_t>(v, key);
    } else if (key == "alpha") {
      c.alpha = get_as<double>(v, key);
    } else if (key == "tau") {
      c.tau = get_as<double>(v, key);
    } else if (key == "init_gate") {
      c.init_gate = get_as<double>(v, key);
    } else if (key == "epochs") {
      c.epochs = get_as<std::size_t>(v, key);
    } else if (key == "batch_size") {
      c.batch_size = get_as<std::size_t>(v, key);
    } else if (key == "warmup_steps") {
      c.warmup_steps = get_as<std::size_t>(v, key);
    } else if (key == "eval_every") {
      c.eval_every = get_as<std::size_t>(v, key);
    } else if (key == "trace_every") {
      c.trace_every = get_as<std::size_t>(v, key);
    } else if (key == "seed") {
      c.seed = get_as<std::uint64_t>(v, key);
    } else if (key == "lr") {
      c.lr = get_as<double>(v, key);
    } else if (key == "hidden") {
      c.hidden = get_as<std::vector<std::size_t>>(v, key);
    } else if (key == "eval_batch_size") {
      c.eval_batch_size = get_as<std::size_t>(v, key);
    } else if (key == "retrain_epochs") {
      c.retrain_epochs = get_as<std::size_t>(v, key);
    } else if (key == "finetune_epochs") {
      c.finetune_epochs = get_as<std::size_t>(v, key);
    } else {
      throw ConfigError("unknown search config key '" + key + "'");
    }
  }
  c.validate();
}

Json to_json(const EvalResult& r) {
  return Json{{"auc", number(r.auc)}, {"logloss", number(r.logloss)}, {"n", r.n}};
}

Json to_json(const PolarizationReport& p) {
  return Json{{"frac_low", p.frac_low},
              {"frac_high", p.frac_high},
              {"mid_band_mass", p.mid_band_mass},
              {"margin", number(p.margin)}};
}

Json to_json(const GateStats& s) {
  return Json{{"mean", number(s.mean)},
              {"frac_below_0.5", s.frac_below},
              {"frac_above_0.5", s.frac_above},
              {"min_kept", number(s.min_kept)},
              {"max_pruned", number(s.max_pruned)}};
}

Json to_json(const SearchReport& r) {
  Json j;
  j["config"] = to_json(r.config);
  j["schema_fingerprint"] = r.schema_fingerprint;
  j["steps"] = r.steps;
  j["failed"] = r.failed;
  if (r.failed) j["failure"] = r.failure;
  j["init_mean_gate"] = r.init_mean_gate;
  j["final_val_auc"] = number(r.final_val_auc);
  j["eval_passes"] = r.eval_passes;
  j["gate_stats"] = to_json(r.stats);
  j["polarization"] = to_json(r.polarization);
  if (r.config.granularity != Granularity::Entry) {
    j["unit_names"] = r.unit_names;
    Json g = Json::array();
    for (double v : r.final_gates) g.push_back(number(v));
    j["final_gates"] = std::move(g);
  } else {
    j["total_gates"] = r.final_gates.size();
  }
  j["ranking"] = r.ranking;
  Json curve = Json::array();
  for (const auto& p : r.curve)
    curve.push_back({{"step", p.step}, {"val_auc", number(p.val_auc)}, {"mean_g", p.mean_g}});
  j["auc_curve"] = std::move(curve);
  j["wall_time_search"] = r.wall_time;
  return j;
}

Json to_json(const PruneDecision& d) {
  return Json{{"strategy", to_string(d.strategy)},
              {"threshold", d.threshold},
              {"k", d.k},
              {"granularity", to_string(d.granularity)},
              {"chunk", d.chunk},
              {"total_units", d.total_units},
              {"kept", d.kept},
              {"ratio", d.ratio},
              {"schema_fingerprint", d.schema_fingerprint}};
}

PruneDecision decision_from_json(const Json& j) {
  try {
    PruneDecision d;
    d.strategy = parse_prune_strategy(j.at("strategy").get<std::string>());
    d.threshold = j.at("threshold").get<double>();
    d.k = j.at("k").get<std::size_t>();
    d.granularity = parse_granularity(j.at("granularity").get<std::string>());
    d.chunk = j.at("chunk").get<std::size_t>();
    d.total_units = j.at("total_units").get<std::size_t>();
    d.kept = j.at("kept").get<std::vector<std::size_t>>();
    d.ratio = j.at("ratio").get<double>();
    d.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed prune decision: ") + e.what());
  }
}

Json to_json(const RetrainResult& r) {
  Json fields = Json::array();
  for (const auto& f : r.schema.fields) fields.push_back({{"name", f.name}, {"dim", f.dim}});
  return Json{{"val", to_json(r.val)},
              {"test", to_json(r.test)},
              {"epochs", r.epochs},
              {"steps", r.steps},
              {"schema_fingerprint", r.schema.fingerprint_hex()},
              {"fields", std::move(fields)},
              {"wall_time_retrain", r.wall_time}};
}

Json to_json(const PiReport& r) {
  Json imp = Json::array();
  for (double v : r.importance) imp.push_back(number(v));
  return Json{{"base_auc", number(r.base_auc)},
              {"importance", std::move(imp)},
              {"ranking", ranking_desc(r.importance)},
              {"repeats", r.repeats},
              {"n_eval_passes", r.n_eval_passes},
              {"wall_time_pi", r.wall_time}};
}

SearchReport search_report_from_json(const Json& j) {
  try {
    SearchReport r;
    apply_json(j.at("config"), r.config);
    r.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
    r.steps = j.at("steps").get<std::uint64_t>();
    r.failed = j.at("failed").get<bool>();
    r.failure = j.value("failure", std::string{});
    r.final_val_auc = number_of(j.at("final_val_auc"));
    r.eval_passes = j.at("eval_passes").get<std::size_t>();
    r.init_mean_gate = j.at("init_mean_gate").get<double>();
    if (j.contains("final_gates")) {
      for (const auto& v : j["final_gates"]) r.final_gates.push_back(number_of(v));
      r.unit_names = j.at("unit_names").get<std::vector<std::string>>();
    }
    r.ranking = j.at("ranking").get<std::vector<std::size_t>>();
    for (const auto& p : j.at("auc_curve"))
      r.curve.push_back({p.at("step").get<std::uint64_t>(), number_of(p.at("val_auc")),
                         p.at("mean_g").get<double>()});
    r.stats = gate_stats(r.final_gates);
    r.polarization = polarization_report(r.final_gates);
    r.wall_time = j.value("wall_time_search", 0.0);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed search report: ") + e.what());
  }
}

Json strip_wall_time(Json j) {
  if (j.is_object()) {
    Json out = Json::object();
    for (auto& [k, v] : j.items())
      if (k.rfind("wall_time", 0) != 0) out[k] = strip_wall_time(v);
    return out;
  }
  if (j.is_array())
    for (auto& v : j) v = strip_wall_time(v);
  return j;
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

void write_trace_csv(const std::string& path, const SearchReport& r,
                     const std::vector<std::string>& gate_names) {
  auto out = open_out(path);
  out << "step,gate_id,g_value,mean_g,frac_below_0.5,val_auc\n";
  for (const auto& t : r.trace) {
    out << t.step << ',';
    if (t.gate_id < 0)
      out << "summary";
    else if (static_cast<std::size_t>(t.gate_id) < gate_names.size())
      out << gate_names[static_cast<std::size_t>(t.gate_id)];
    else
      out << t.gate_id;
    out << ',' << fmt(t.g_value) << ',' << fmt(t.mean_g) << ',' << fmt(t.frac_below) << ','
        << (t.val_auc ? fmt(*t.val_auc) : "") << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

void write_gate_histogram_csv(const std::string& path, const std::vector<double>& gates,
                              std::size_t bins) {
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  for (double g : gates) {
    if (!std::isfinite(g)) continue;
    auto b = static_cast<std::size_t>(g * static_cast<double>(bins));
    counts[std::min(b, bins - 1)]++;
  }
  auto out = open_out(path);
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < bins; ++b)
    out << fmt(static_cast<double>(b) / static_cast<double>(bins)) << ','
        << fmt(static_cast<double>(b + 1) / static_cast<double>(bins)) << ',' << counts[b] << '\n';
  if (!out) throw IoError("failed writing " + path);
}

void write_auc_curve_csv(const std::string& path, const SearchReport& r) {
  auto out = open_out(path);
  out << "step,val_auc,mean_g\n";
  for (const auto& p : r.curve) out << p.step << ',' << fmt(p.val_auc) << ',' << fmt(p.mean_g) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace shufflegate
