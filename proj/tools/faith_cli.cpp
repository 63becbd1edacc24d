// faith: audit a classifier for individual fairness from the command line.
//
//   faith audit    --config c.json --data d.csv [--predictions p.csv] [--out r.json]
//   faith localize --config c.json --data d.csv --rows a,b [--cols c] [--label y] [--out prefix]
//   faith simulate --spec s.json [--samples raw.csv] [--out summary.json]
//   faith select   --config c.json --manifest m.json [--out s.json]
//
// Exit codes: 0 success, 2 the audit rejects delta-fairness, 1 any error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "faith/errors.hpp"
#include "faith/ingestion.hpp"
#include "faith/localization.hpp"
#include "faith/pipeline.hpp"
#include "faith/selection.hpp"
#include "faith/simulate.hpp"

namespace fs = std::filesystem;
using namespace faith;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitReject = 2;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::optional<long> B;
  std::optional<double> alpha;
  std::optional<double> delta;
  std::optional<double> epsilon;
  std::optional<int> threads;
  std::optional<std::string> predictions;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--method", o.method, "bootstrap method")->check(CLI::IsMember({"mn", "nd"}));
  cmd->add_option("--B", o.B, "bootstrap draws");
  cmd->add_option("--alpha", o.alpha, "significance level");
  cmd->add_option("--delta", o.delta, "fairness threshold");
  cmd->add_option("--epsilon", o.epsilon, "transport budget");
  cmd->add_option("--threads", o.threads, "worker threads (0: all cores)");
}

template <class T>
void note_override(const char* flag, const T& value, const nlohmann::json& config, const char* key) {
  if (config.contains(key) && config[key] != nlohmann::json(value)) {
    std::cerr << "note: " << flag << " " << value << " overrides config value " << config[key].dump() << "\n";
  }
}

// Flags win over the config file; a flag that disagrees with an explicit
// config value is reported on stderr.
void apply_overrides(AuditConfig& c, const Overrides& o) {
  const auto& src = c.source;
  const nlohmann::json boot = src.contains("bootstrap") ? src["bootstrap"] : nlohmann::json::object();
  if (o.seed) {
    note_override("--seed", *o.seed, src, "seed");
    c.seed = c.bootstrap.seed = *o.seed;
  }
  if (o.method) {
    auto m = detail::parse_method(*o.method);
    if (boot.contains("method") && detail::parse_method(boot["method"].get<std::string>()) != m) {
      std::cerr << "note: --method " << *o.method << " overrides config value " << boot["method"].dump() << "\n";
    }
    c.bootstrap.method = m;
  }
  if (o.B) {
    note_override("--B", *o.B, boot, "B");
    c.bootstrap.B = *o.B;
  }
  if (o.alpha) {
    note_override("--alpha", *o.alpha, src, "alpha");
    c.alpha = *o.alpha;
  }
  if (o.delta) {
    note_override("--delta", *o.delta, src, "delta");
    c.delta = *o.delta;
  }
  if (o.epsilon) {
    note_override("--epsilon", *o.epsilon, src, "epsilon");
    c.epsilon = *o.epsilon;
  }
  if (o.threads) c.threads = c.bootstrap.threads = *o.threads;
  if (o.predictions) {
    if (c.model.source == ModelSource::http) {
      throw ConfigError("--predictions conflicts with the config's http_endpoint model source");
    }
    c.model.source = ModelSource::predictions_file;
    c.model.path = *o.predictions;
  }
  c.validate();
}

// Writes the whole text at once: to stdout, or to `path` through a temporary
// file so a failure leaves nothing behind.
void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size() && !s.empty()) {
    auto comma = s.find(',', start);
    auto part = detail::trim(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!part.empty()) out.push_back(part);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int run_audit_cmd(const std::string& config_path, const std::string& data, const Overrides& o, const std::string& out) {
  auto config = load_config(config_path);
  apply_overrides(config, o);
  auto inputs = load_audit_inputs(config, data);
  auto result = run_audit(inputs.records, config, inputs.sources());
  emit(audit_report_json(result, config).dump(2) + "\n", out);
  return result.verdict.reject ? kExitReject : kExitOk;
}

int run_localize_cmd(const std::string& config_path, const std::string& data, const Overrides& o,
                     const std::string& rows, const std::string& cols, const std::optional<std::string>& label,
                     const std::string& out) {
  auto config = load_config(config_path);
  apply_overrides(config, o);
  auto inputs = load_audit_inputs(config, data);
  auto prepared = prepare_audit(inputs.records, config, inputs.sources());
  auto solution = solve_audit_lp(prepared.problem, prepared.fn.f);
  auto diff = transport_diff(solution, prepared.space, prepared.fn);
  auto grid = marginal_heatmap(diff, prepared.space, split_list(rows), split_list(cols), label);

  nlohmann::ordered_json j;
  j["spec_version"] = kReportVersion;
  j["faith"] = solution.value;
  j["n"] = diff.n;
  j["label"] = label ? nlohmann::ordered_json(*label) : nlohmann::ordered_json(nullptr);
  j["heatmap"] = heatmap_json(grid);
  j["flows"] = nlohmann::ordered_json::array();
  for (const auto& f : diff.flows) {
    j["flows"].push_back({{"from", prepared.space.describe(f.source)},
                          {"to", prepared.space.describe(f.destination)},
                          {"mass", f.mass},
                          {"count", f.count}});
  }
  const std::string csv = heatmap_csv(grid);
  if (out.empty() || out == "-") {
    emit(csv, "");
  } else {
    emit(csv, out + ".csv");
    emit(j.dump(2) + "\n", out + ".json");
  }
  return kExitOk;
}

int run_simulate_cmd(const std::string& spec_path, const Overrides& o, const std::string& samples,
                     const std::string& out) {
  auto spec = sim::parse_spec(read_json_file(spec_path));
  if (o.seed) spec.seed = *o.seed;
  if (o.method) spec.bootstrap.method = detail::parse_method(*o.method);
  if (o.B) spec.bootstrap.B = *o.B;
  if (o.alpha) spec.alpha = *o.alpha;
  if (o.delta) spec.delta = *o.delta;
  if (o.threads) spec.threads = *o.threads;
  if (o.epsilon) spec.instance.problem.epsilon = *o.epsilon;
  auto summary = sim::simulate(spec);
  auto text = sim::summary_json(summary, spec).dump(2) + "\n";
  auto raw = sim::samples_csv(summary);
  if (!samples.empty()) emit(raw, samples);
  emit(text, out);
  return kExitOk;
}

int run_select_cmd(const std::string& config_path, const std::string& manifest_path, const Overrides& o,
                   const std::string& out) {
  auto config = load_config(config_path);
  apply_overrides(config, o);
  std::vector<Candidate> candidates;
  for (const auto& entry : load_manifest(manifest_path)) {
    candidates.push_back(Candidate::from_records(entry.name, load_audit_csv(entry.predictions_csv, *config.schema)));
  }
  auto report = select_model(candidates, config);
  emit(selection_report_json(report, config).dump(2) + "\n", out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistical audit of individual fairness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("faith ") + kReportVersion);

  std::string config, data, out, rows, cols, spec, samples, manifest;
  std::optional<std::string> label;
  Overrides o;

  auto* audit = app.add_subcommand("audit", "compute the statistic, intervals and verdict");
  audit->add_option("--config", config, "audit config JSON")->required();
  audit->add_option("--data", data, "audit CSV")->required();
  audit->add_option("--predictions", o.predictions, "predictions CSV");
  audit->add_option("--out", out, "report path (default stdout)");
  add_override_flags(audit, o);

  auto* localize = app.add_subcommand("localize", "heat map of the worst-case transport");
  localize->add_option("--config", config, "audit config JSON")->required();
  localize->add_option("--data", data, "audit CSV")->required();
  localize->add_option("--predictions", o.predictions, "predictions CSV");
  localize->add_option("--rows", rows, "comma-separated row features")->required();
  localize->add_option("--cols", cols, "comma-separated column features");
  localize->add_option("--label", label, "keep only points with this label");
  localize->add_option("--out", out, "output prefix; writes <prefix>.csv and <prefix>.json");
  add_override_flags(localize, o);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of the limit law and bootstraps");
  simulate->add_option("--spec,--config", spec, "simulation spec JSON")->required();
  simulate->add_option("--samples", samples, "raw draws CSV");
  simulate->add_option("--out", out, "summary path (default stdout)");
  add_override_flags(simulate, o);

  auto* select = app.add_subcommand("select", "pick the best candidate that passes the fairness test");
  select->add_option("--config", config, "audit config JSON")->required();
  select->add_option("--manifest", manifest, "candidate manifest JSON")->required();
  select->add_option("--out", out, "report path (default stdout)");
  add_override_flags(select, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*audit) return run_audit_cmd(config, data, o, out);
    if (*localize) return run_localize_cmd(config, data, o, rows, cols, label, out);
    if (*simulate) return run_simulate_cmd(spec, o, samples, out);
    if (*select) return run_select_cmd(config, manifest, o, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
