#pragma once

// Pick the most accurate candidate model among those that pass the
// delta-fairness test on validation data.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "faith/errors.hpp"
#include "faith/ingestion.hpp"
#include "faith/parallel.hpp"
#include "faith/pipeline.hpp"
#include "json.hpp"

namespace faith {

struct Candidate {
  std::string name;
  std::vector<PredictionRecord> records;  // validation rows with predictions
  double error = 0.0;                     // mean zero-one loss over `records`

  static Candidate from_records(std::string name, std::vector<PredictionRecord> records) {
    if (records.empty()) throw EmptyDataError("candidate '" + name + "' has no validation rows");
    long long wrong = 0;
    for (const auto& r : records) wrong += zero_one_loss(r);
    Candidate c{std::move(name), std::move(records), 0.0};
    c.error = static_cast<double>(wrong) / static_cast<double>(c.records.size());
    return c;
  }
};

struct SelectionRow {
  std::string name;
  double error = 0.0;
  std::optional<double> faith;
  std::optional<double> ci_lower;  // one-sided lower bound
  bool pass = false;
  std::string failure;  // set when the candidate could not be evaluated
};

struct SelectionReport {
  std::vector<SelectionRow> rows;  // in input order
  std::optional<std::string> chosen;
};

/// Evaluates every candidate; one that throws is recorded as not passing and
/// does not stop the others. A candidate passes iff its one-sided lower bound
/// is at most delta. The winner has the lowest validation error among passers,
/// ties going to the smaller name.
inline SelectionReport select_model(const std::vector<Candidate>& candidates, const AuditConfig& config) {
  if (candidates.empty()) throw ConfigError("no candidates to select from");
  config.validate();
  AuditConfig inner = config;
  inner.bootstrap.threads = 1;  // parallelism is across candidates

  SelectionReport report;
  report.rows.resize(candidates.size());
  parallel_for(candidates.size(), config.threads, [&](std::size_t i) {
    const auto& c = candidates[i];
    auto& row = report.rows[i];
    row.name = c.name;
    row.error = c.error;
    try {
      auto prepared = prepare_audit(c.records, inner);
      auto dist = bootstrap(prepared.problem, prepared.fn, inner.bootstrap);
      auto ci = one_sided_ci(dist, inner.alpha);
      row.faith = dist.psi_n;
      row.ci_lower = ci.lower;
      row.pass = ci.lower <= inner.delta;
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
  });

  const SelectionRow* best = nullptr;
  for (const auto& row : report.rows) {
    if (!row.pass) continue;
    if (!best || row.error < best->error || (row.error == best->error && row.name < best->name)) best = &row;
  }
  if (best) report.chosen = best->name;
  return report;
}

struct ManifestEntry {
  std::string name;
  std::filesystem::path predictions_csv;
};

/// Candidate manifest: [{"name": ..., "predictions_csv_path": ...}, ...].
/// Relative paths resolve against the manifest's directory.
inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  auto j = read_json_file(path);
  if (!j.is_array() || j.empty()) throw ConfigError("manifest must be a non-empty array");
  std::vector<ManifestEntry> out;
  std::set<std::string> names;
  for (const auto& e : j) {
    detail::check_keys(e, {"name", "predictions_csv_path"}, "manifest entry");
    ManifestEntry m;
    m.name = detail::get_as<std::string>(e, "name", "manifest entry");
    std::filesystem::path p = detail::get_as<std::string>(e, "predictions_csv_path", "manifest entry");
    m.predictions_csv = p.is_relative() ? path.parent_path() / p : p;
    if (!names.insert(m.name).second) throw ConfigError("duplicate candidate name '" + m.name + "'");
    out.push_back(std::move(m));
  }
  return out;
}

inline nlohmann::ordered_json selection_report_json(const SelectionReport& report, const AuditConfig& config) {
  using json = nlohmann::ordered_json;
  json j;
  j["spec_version"] = kReportVersion;
  j["delta"] = config.delta;
  j["alpha"] = config.alpha;
  j["method"] = method_name(config.bootstrap.method);
  j["seed"] = config.bootstrap.seed;
  j["candidates"] = json::array();
  for (const auto& r : report.rows) {
    json row;
    row["name"] = r.name;
    row["validation_error"] = r.error;
    row["faith"] = detail::optional_number(r.faith);
    row["ci_one_sided_lower"] = detail::optional_number(r.ci_lower);
    row["pass"] = r.pass;
    row["error"] = r.failure.empty() ? json(nullptr) : json(r.failure);
    j["candidates"].push_back(std::move(row));
  }
  j["chosen"] = report.chosen ? json(*report.chosen) : json(nullptr);
  return j;
}

}  // namespace faith
