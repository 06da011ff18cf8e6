#include "infersim/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "infersim/errors.hpp"
#include "infersim/grid.hpp"
#include "infersim/hash.hpp"

namespace infersim {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

ArrivalTrace TraceSource::build(std::uint64_t seed) const {
  if (file) {
    ArrivalTrace t = load_trace_csv(file->string());
    t.validate();
    return t;
  }
  if (generator == "constant") return gen_constant(rate, duration_s, jitter, seed);
  if (generator == "burst") {
    return gen_burst(base_rate, peak_rate, peak_start_s, peak_len_s, duration_s, jitter, seed);
  }
  if (generator == "periodic_burst") {
    return gen_periodic_burst(base_rate, peak_rate, period_s, peak_len_s, first_peak_s, duration_s, jitter, seed,
                              ramp_steps, ramp_step_s);
  }
  throw ValidationError("unknown trace generator '" + generator + "'");
}

ordered_json trace_source_to_json(const TraceSource& t) {
  ordered_json j;
  if (t.file) {
    j["file"] = t.file->string();
    return j;
  }
  j["generator"] = t.generator;
  if (t.generator == "constant") {
    j["rate"] = t.rate;
  } else {
    j["base_rate"] = t.base_rate;
    j["peak_rate"] = t.peak_rate;
    j["peak_len_s"] = t.peak_len_s;
    if (t.generator == "burst") {
      j["peak_start_s"] = t.peak_start_s;
    } else {
      j["period_s"] = t.period_s;
      j["first_peak_s"] = t.first_peak_s;
      j["ramp_steps"] = t.ramp_steps;
      j["ramp_step_s"] = t.ramp_step_s;
    }
  }
  j["duration_s"] = t.duration_s;
  j["jitter"] = t.jitter == Jitter::kNone ? "none" : "poisson";
  return j;
}

namespace {

// Collects every configuration problem so the user sees them all at once.
class Problems {
 public:
  void add(const std::string& where, const std::string& what) { items_.push_back(where + ": " + what); }

  template <typename F>
  void guard(const std::string& where, F&& f) {
    try {
      f();
    } catch (const json::exception& e) {
      add(where, e.what());
    } catch (const std::exception& e) {
      add(where, e.what());
    }
  }

  void throw_if_any() const {
    if (items_.empty()) return;
    std::string msg = "invalid experiment config (" + std::to_string(items_.size()) + " problem" +
                      (items_.size() == 1 ? "" : "s") + "):";
    for (const auto& i : items_) msg += "\n  - " + i;
    throw ConfigError(msg);
  }

 private:
  std::vector<std::string> items_;
};

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where, Problems& p) {
  if (!j.is_object()) {
    p.add(where, "must be an object");
    return;
  }
  for (const auto& [k, _] : j.items()) {
    if (!allowed.contains(k)) p.add(where, "unknown key '" + k + "'");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

TraceSource parse_trace(const json& j, const fs::path& base, Problems& p) {
  TraceSource t;
  if (!j.is_object()) {
    p.add("trace", "must be an object");
    return t;
  }
  if (j.contains("file")) {
    reject_unknown(j, {"file"}, "trace", p);
    t.file = resolve(base, j["file"].get<std::string>());
    if (!fs::exists(*t.file)) p.add("trace", "file not found: " + t.file->string());
    return t;
  }
  if (!j.contains("generator")) {
    p.add("trace", "needs 'file' or 'generator'");
    return t;
  }
  t.generator = j["generator"].get<std::string>();
  std::set<std::string> keys = {"generator", "duration_s", "jitter"};
  std::vector<std::string> required;
  if (t.generator == "constant") {
    required = {"rate"};
  } else if (t.generator == "burst") {
    required = {"base_rate", "peak_rate", "peak_start_s", "peak_len_s"};
  } else if (t.generator == "periodic_burst") {
    required = {"base_rate", "peak_rate", "period_s", "peak_len_s", "first_peak_s"};
    keys.insert({"ramp_steps", "ramp_step_s"});
  } else {
    p.add("trace", "unknown generator '" + t.generator + "' (constant|burst|periodic_burst)");
    return t;
  }
  keys.insert(required.begin(), required.end());
  reject_unknown(j, keys, "trace", p);
  for (const auto& k : required) {
    if (!j.contains(k)) p.add("trace", "missing '" + k + "'");
  }
  p.guard("trace", [&] {
    t.rate = j.value("rate", 0.0);
    t.base_rate = j.value("base_rate", 0.0);
    t.peak_rate = j.value("peak_rate", 0.0);
    t.peak_start_s = j.value("peak_start_s", 0.0);
    t.peak_len_s = j.value("peak_len_s", 0.0);
    t.period_s = j.value("period_s", 0.0);
    t.first_peak_s = j.value("first_peak_s", 0.0);
    t.ramp_steps = j.value("ramp_steps", 0);
    t.ramp_step_s = j.value("ramp_step_s", 0.0);
    t.duration_s = j.value("duration_s", 3600.0);
    t.jitter = jitter_from_string(j.value("jitter", std::string("poisson")));
  });
  return t;
}

}  // namespace

ExperimentConfig experiment_from_json(const json& j, const fs::path& base_dir) {
  Problems p;
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  reject_unknown(j,
                 {"trace", "mix", "catalog", "rate_card", "policies", "baseline", "output", "seed", "repetitions",
                  "simulation"},
                 "config", p);
  for (const char* k : {"trace", "catalog", "rate_card", "policies", "baseline", "output"}) {
    if (!j.contains(k)) p.add("config", std::string("missing section '") + k + "'");
  }

  if (j.contains("trace")) c.trace = parse_trace(j["trace"], base_dir, p);

  if (j.contains("mix")) {
    p.guard("mix", [&] {
      json m = j["mix"];
      if (m.contains("selection")) {
        c.selection = selection_mode_from_string(m["selection"].get<std::string>());
        m.erase("selection");
      }
      if (m.contains("rng_seed")) throw ValidationError("rng_seed comes from the top-level seed");
      c.mix = mix_from_json(m);
    });
  }

  if (j.contains("catalog")) {
    const json& cj = j["catalog"];
    reject_unknown(cj, {"path", "vm_type", "reference_vm_type"}, "catalog", p);
    p.guard("catalog", [&] {
      c.catalog_path = resolve(base_dir, cj.at("path").get<std::string>());
      c.simulation.vm_type = cj.value("vm_type", c.simulation.vm_type);
      c.simulation.reference_vm_type = cj.value("reference_vm_type", c.simulation.vm_type);
      c.catalog = load_catalog(c.catalog_path.string());
    });
  }
  if (j.contains("rate_card")) {
    const json& rj = j["rate_card"];
    reject_unknown(rj, {"path"}, "rate_card", p);
    p.guard("rate_card", [&] {
      c.rate_card_path = resolve(base_dir, rj.at("path").get<std::string>());
      c.card = load_rate_card(c.rate_card_path.string());
      c.card.vm(c.simulation.vm_type);
      c.card.vm(c.simulation.reference_vm_type);
    });
  }

  if (j.contains("policies")) {
    if (!j["policies"].is_array() || j["policies"].empty()) {
      p.add("policies", "must be a non-empty list");
    } else {
      std::set<std::string> labels;
      for (std::size_t i = 0; i < j["policies"].size(); ++i) {
        p.guard("policies[" + std::to_string(i) + "]", [&] {
          PolicySpec s = policy_from_json(j["policies"][i]);
          if (!labels.insert(s.label()).second) throw ValidationError("duplicate policy name '" + s.label() + "'");
          c.policies.push_back(std::move(s));
        });
      }
    }
  }
  if (j.contains("baseline")) {
    p.guard("baseline", [&] {
      c.baseline = j["baseline"].get<std::string>();
      const bool found = std::any_of(c.policies.begin(), c.policies.end(),
                                     [&](const PolicySpec& s) { return s.label() == c.baseline; });
      if (!found) throw ValidationError("baseline '" + c.baseline + "' is not in the policy list");
    });
  }

  if (j.contains("output")) {
    const json& oj = j["output"];
    reject_unknown(oj, {"dir", "ledger", "request_csv"}, "output", p);
    p.guard("output", [&] {
      c.output.dir = resolve(base_dir, oj.at("dir").get<std::string>());
      c.output.ledger = oj.value("ledger", true);
      c.output.request_csv = oj.value("request_csv", false);
      if (c.output.request_csv && !c.output.ledger) throw ValidationError("request_csv needs ledger");
    });
  }

  p.guard("seed", [&] { c.seed = j.value("seed", std::uint64_t{0}); });
  p.guard("repetitions", [&] {
    c.repetitions = j.value("repetitions", 1);
    if (c.repetitions < 1) throw ValidationError("must be >= 1");
  });

  if (j.contains("simulation")) {
    const json& sj = j["simulation"];
    reject_unknown(sj, {"initial_vms", "warm_window_s", "autoscale"}, "simulation", p);
    p.guard("simulation", [&] {
      if (sj.contains("initial_vms")) {
        const json& iv = sj["initial_vms"];
        if (iv.is_string()) {
          if (iv.get<std::string>() != "auto") throw ValidationError("initial_vms must be a count or \"auto\"");
          c.simulation.initial_vms_auto = true;
        } else {
          c.simulation.initial_vms = iv.get<int>();
          if (c.simulation.initial_vms < 0) throw ValidationError("initial_vms must be >= 0");
        }
      }
      c.simulation.warm_window_s = sj.value("warm_window_s", c.simulation.warm_window_s);
      if (c.simulation.warm_window_s < 1) throw ValidationError("warm_window_s must be >= 1");
      c.simulation.autoscale = sj.value("autoscale", true);
    });
  }
  c.simulation.keep_ledger = c.output.ledger;

  p.throw_if_any();
  return c;
}

ExperimentConfig load_experiment(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("experiment config " + path.string() + " is not valid JSON: " + e.what());
  }
  ExperimentConfig c = experiment_from_json(j, path.parent_path());
  c.source = path;
  return c;
}

const ComparisonRow& ComparisonTable::row(const std::string& policy) const {
  for (const auto& r : rows) {
    if (r.policy == policy) return r;
  }
  throw ComparisonError("no row for policy '" + policy + "'");
}

ComparisonTable compare(std::span<const MetricsReport> reports, const std::string& baseline_name) {
  if (reports.empty()) throw ComparisonError("nothing to compare");
  const MetricsReport* base = nullptr;
  std::set<std::string> seen;
  for (const auto& r : reports) {
    if (!seen.insert(r.policy.label()).second) {
      throw ComparisonError("two reports carry the policy name '" + r.policy.label() + "'");
    }
    if (r.policy.label() == baseline_name) base = &r;
  }
  if (!base) throw ComparisonError("baseline '" + baseline_name + "' not among the reports");
  for (const auto& r : reports) {
    if (r.trace_hash != base->trace_hash) {
      throw ComparisonError("report '" + r.policy.label() + "' comes from a different trace (" + r.trace_hash +
                            " vs baseline " + base->trace_hash + ")");
    }
  }
  if (base->total_cost == Money{}) throw ComparisonError("baseline total cost is zero");

  ComparisonTable t;
  t.baseline = baseline_name;
  const double base_cost = base->total_cost.to_double();
  for (const auto& r : reports) {
    ComparisonRow row;
    row.policy = r.policy.label();
    row.normalized_cost = &r == base ? 1.0 : r.total_cost.to_double() / base_cost;
    row.slo_violation_pct = r.slo_violation_pct;
    row.over_provision_ratio = &r == base ? 1.0 : over_provision_ratio(r, *base);
    row.serverless_share_pct = r.serverless_share_pct();
    row.normalized_cost_min = row.normalized_cost_max = row.normalized_cost;
    row.slo_violation_pct_min = row.slo_violation_pct_max = row.slo_violation_pct;
    row.over_provision_ratio_min = row.over_provision_ratio_max = row.over_provision_ratio;
    t.rows.push_back(row);
  }
  return t;
}

ComparisonTable aggregate(std::span<const ComparisonTable> tables) {
  if (tables.empty()) throw ComparisonError("no tables to aggregate");
  ComparisonTable out = tables.front();
  const double n = static_cast<double>(tables.size());
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    ComparisonRow& a = out.rows[i];
    double cost = 0, viol = 0, opr = 0, share = 0;
    for (const auto& t : tables) {
      if (t.rows.size() != out.rows.size() || t.rows[i].policy != a.policy || t.baseline != out.baseline) {
        throw ComparisonError("repetition tables disagree on their policy rows");
      }
      const ComparisonRow& r = t.rows[i];
      cost += r.normalized_cost;
      viol += r.slo_violation_pct;
      opr += r.over_provision_ratio;
      share += r.serverless_share_pct;
      a.normalized_cost_min = std::min(a.normalized_cost_min, r.normalized_cost_min);
      a.normalized_cost_max = std::max(a.normalized_cost_max, r.normalized_cost_max);
      a.slo_violation_pct_min = std::min(a.slo_violation_pct_min, r.slo_violation_pct_min);
      a.slo_violation_pct_max = std::max(a.slo_violation_pct_max, r.slo_violation_pct_max);
      a.over_provision_ratio_min = std::min(a.over_provision_ratio_min, r.over_provision_ratio_min);
      a.over_provision_ratio_max = std::max(a.over_provision_ratio_max, r.over_provision_ratio_max);
    }
    // The baseline stays exactly 1.0 whatever the rounding of the mean.
    const bool is_base = a.policy == out.baseline;
    a.normalized_cost = is_base ? 1.0 : cost / n;
    a.over_provision_ratio = is_base ? 1.0 : opr / n;
    a.slo_violation_pct = viol / n;
    a.serverless_share_pct = share / n;
  }
  return out;
}

ordered_json table_to_json(const ComparisonTable& t) {
  ordered_json j;
  j["baseline"] = t.baseline;
  j["rows"] = ordered_json::array();
  for (const auto& r : t.rows) {
    j["rows"].push_back({{"policy", r.policy},
                         {"normalized_cost", r.normalized_cost},
                         {"slo_violation_pct", r.slo_violation_pct},
                         {"over_provision_ratio", r.over_provision_ratio},
                         {"serverless_share_pct", r.serverless_share_pct},
                         {"normalized_cost_min", r.normalized_cost_min},
                         {"normalized_cost_max", r.normalized_cost_max},
                         {"slo_violation_pct_min", r.slo_violation_pct_min},
                         {"slo_violation_pct_max", r.slo_violation_pct_max},
                         {"over_provision_ratio_min", r.over_provision_ratio_min},
                         {"over_provision_ratio_max", r.over_provision_ratio_max}});
  }
  return j;
}

std::string emit_plot_data(const ComparisonTable& table) {
  if (table.rows.empty()) throw ValidationError("cannot plot an empty table");
  std::string out = "policy,normalized_cost,slo_violation_pct,over_provision_ratio\n";
  char buf[128];
  for (const auto& r : table.rows) {
    if (r.policy.find_first_of(",\n\"") != std::string::npos) {
      throw ValidationError("policy name '" + r.policy + "' cannot appear in CSV unquoted");
    }
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f\n", r.normalized_cost, r.slo_violation_pct,
                  r.over_provision_ratio);
    out += r.policy + buf;
  }
  return out;
}

ComparisonTable parse_plot_data(std::istream& in) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line) || line != "policy,normalized_cost,slo_violation_pct,over_provision_ratio") {
    throw ParseError("unexpected plot CSV header", line_no);
  }
  ComparisonTable t;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[4];
    for (auto& s : f) {
      if (!std::getline(ss, s, ',')) throw ParseError("expected 4 fields", line_no);
    }
    ComparisonRow r;
    r.policy = f[0];
    try {
      r.normalized_cost = std::stod(f[1]);
      r.slo_violation_pct = std::stod(f[2]);
      r.over_provision_ratio = std::stod(f[3]);
    } catch (const std::logic_error&) {
      throw ParseError("malformed number", line_no);
    }
    if (r.normalized_cost == 1.0 && t.baseline.empty()) t.baseline = r.policy;
    r.normalized_cost_min = r.normalized_cost_max = r.normalized_cost;
    r.slo_violation_pct_min = r.slo_violation_pct_max = r.slo_violation_pct;
    r.over_provision_ratio_min = r.over_provision_ratio_max = r.over_provision_ratio;
    t.rows.push_back(r);
  }
  return t;
}

namespace {

fs::path write_stamped(const fs::path& dir, const std::string& stem, const std::string& ext,
                       const std::string& content) {
  const fs::path path = dir / (stem + "_" + fnv1a_hex(content).substr(0, 12) + ext);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return path;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& c, int threads, bool write) {
  const auto estimator = [&](const ModelProfile& m) {
    return cost_per_million(m, c.card, c.simulation.vm_type, c.simulation.reference_vm_type);
  };
  const auto reps = static_cast<std::size_t>(c.repetitions);
  std::vector<ArrivalTrace> traces(reps);
  std::vector<std::vector<QuerySpec>> queries(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const std::uint64_t seed = c.seed + r;
    traces[r] = c.trace.build(seed);
    MixSpec mix = c.mix;
    mix.rng_seed = seed;
    queries[r] = assign_constraints(traces[r], mix, c.catalog, c.selection, estimator);
  }
  std::vector<GridJob> jobs;
  for (std::size_t r = 0; r < reps; ++r) {
    for (const auto& p : c.policies) jobs.push_back({&traces[r], queries[r], p, c.seed + r});
  }

  ExperimentResult res;
  res.reports = threads == 1 ? run_grid_serial(jobs, c.card, c.catalog, c.simulation)
                             : run_grid_parallel(jobs, c.card, c.catalog, c.simulation, threads);
  std::vector<ComparisonTable> tables;
  const std::size_t np = c.policies.size();
  for (std::size_t r = 0; r < reps; ++r) {
    tables.push_back(compare(std::span(res.reports).subspan(r * np, np), c.baseline));
  }
  res.table = aggregate(tables);
  if (!write) return res;

  fs::create_directories(c.output.dir);
  ordered_json manifest;
  manifest["config"] = c.source.string();
  manifest["seed"] = c.seed;
  manifest["repetitions"] = c.repetitions;
  manifest["trace"] = trace_source_to_json(c.trace);
  manifest["reports"] = ordered_json::array();
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < np; ++i) {
      const MetricsReport& rep = res.reports[r * np + i];
      const std::string stem = rep.policy.label() + "_rep" + std::to_string(r);
      const fs::path f = write_stamped(c.output.dir, stem, ".json", report_to_json(rep, c.card).dump(2) + "\n");
      res.files.push_back(f);
      ordered_json entry = {{"policy", rep.policy.label()}, {"repetition", r}, {"report", f.filename().string()}};
      if (c.output.request_csv) {
        std::ostringstream csv;
        write_request_csv(rep, csv);
        const fs::path rf = write_stamped(c.output.dir, stem + "_requests", ".csv", csv.str());
        res.files.push_back(rf);
        entry["requests"] = rf.filename().string();
      }
      manifest["reports"].push_back(entry);
    }
  }
  const fs::path tf = write_stamped(c.output.dir, "table", ".json", table_to_json(res.table).dump(2) + "\n");
  const fs::path pf = write_stamped(c.output.dir, "plot", ".csv", emit_plot_data(res.table));
  res.files.push_back(tf);
  res.files.push_back(pf);
  manifest["table"] = tf.filename().string();
  manifest["plot"] = pf.filename().string();

  const fs::path mf = c.output.dir / "manifest.json";
  std::ofstream out(mf, std::ios::binary | std::ios::trunc);
  out << manifest.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + mf.string());
  res.files.push_back(mf);
  return res;
}

}  // namespace infersim
