#pragma once

// Records + config -> audit problem -> statistic, intervals and verdict, and
// the JSON report for it.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "faith/errors.hpp"
#include "faith/faith.hpp"
#include "faith/inference.hpp"
#include "faith/ingestion.hpp"
#include "faith/localization.hpp"
#include "faith/lp.hpp"
#include "faith/sample_space.hpp"
#include "json.hpp"

namespace faith {

inline constexpr const char* kReportVersion = "1.0";

/// Audit rows with predictions attached, plus whatever can answer for cells
/// that have no rows.
struct AuditInputs {
  std::vector<PredictionRecord> records;
  std::optional<PredictionTable> table;
  std::optional<HttpModel> http;

  CellPredictionSources sources() const { return {table ? &*table : nullptr, http ? &*http : nullptr}; }
};

/// Loads the audit CSV and fills predictions from the configured model
/// source. Predictions already in the CSV are kept; a row without one needs
/// a source unless the loss is custom.
inline AuditInputs load_audit_inputs(const AuditConfig& config, const std::filesystem::path& data) {
  AuditInputs in;
  in.records = load_audit_csv(data, *config.schema);
  const bool have_all = std::all_of(in.records.begin(), in.records.end(),
                                    [](const PredictionRecord& r) { return r.prediction.has_value(); });
  switch (config.model.source) {
    case ModelSource::predictions_file:
      in.table = PredictionTable::load(config.model.path, *config.schema);
      if (!have_all) {
        for (auto& r : in.records) {
          if (r.prediction) continue;
          auto y = in.table->lookup(r.raw);
          if (!y) throw DataError("line " + std::to_string(r.row) + ": no prediction for this feature tuple");
          r.prediction = *y;
        }
      }
      break;
    case ModelSource::http: {
      in.http.emplace(*config.schema, config.model.http);
      std::vector<std::size_t> missing;
      std::vector<std::vector<std::string>> rows;
      for (std::size_t i = 0; i < in.records.size(); ++i) {
        if (in.records[i].prediction) continue;
        missing.push_back(i);
        rows.push_back(in.records[i].raw);
      }
      if (!rows.empty()) {
        auto ys = in.http->predict(rows);
        for (std::size_t i = 0; i < missing.size(); ++i) in.records[missing[i]].prediction = ys[i];
      }
      break;
    }
    case ModelSource::none:
      break;
  }
  if (config.loss == LossKind::zero_one) {
    for (const auto& r : in.records) {
      if (!r.prediction) {
        throw DataError("line " + std::to_string(r.row) + ": no prediction and no model source configured");
      }
    }
  }
  return in;
}

struct PreparedAudit {
  FiniteSampleSpace space;
  EmpiricalDistribution fn;
  AuditProblem problem;
};

inline PreparedAudit prepare_audit(const std::vector<PredictionRecord>& records, const AuditConfig& config,
                                   const CellPredictionSources& sources = {}) {
  if (records.empty()) throw EmptyDataError("no audit records");
  std::vector<Observation> obs;
  obs.reserve(records.size());
  for (const auto& r : records) obs.push_back(r.observation());
  auto [space, fn] = build_space(obs, config.schema, {.complete = config.complete_space});
  auto loss = cell_losses(space, records, config.loss, sources);
  auto problem = AuditProblem::from(loss, build_costs(space, config.similarity), config.epsilon);
  return {std::move(space), std::move(fn), std::move(problem)};
}

/// Group metrics need a privileged group and predictions on every row; the
/// positive class is `config.positive_label`.
inline std::optional<GroupMetrics> audit_group_metrics(const std::vector<PredictionRecord>& records,
                                                       const AuditConfig& config) {
  if (!config.privileged) return std::nullopt;
  const int feature = config.schema->feature_index(config.privileged->feature);
  std::vector<GroupRecord> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    if (!r.prediction) return std::nullopt;
    rows.push_back({config.privileged->values.count(r.features[feature]) > 0, r.label == config.positive_label,
                    *r.prediction == config.positive_label});
  }
  return group_fairness_metrics(rows);
}

struct AuditResult {
  PreparedAudit prepared;
  LpSolution solution;
  BootstrapDistribution bootstrap;
  ConfidenceInterval two_sided;
  ConfidenceInterval one_sided;
  FairnessVerdict verdict;
  bool dual_unique = false;
  std::optional<GroupMetrics> groups;
  double mean_loss = 0.0;
};

inline AuditResult run_audit(const std::vector<PredictionRecord>& records, const AuditConfig& config,
                             const CellPredictionSources& sources = {}) {
  config.validate();
  AuditResult r{prepare_audit(records, config, sources)};
  const auto& p = r.prepared;
  r.solution = solve_audit_lp(p.problem, p.fn.f);
  r.bootstrap = bootstrap(p.problem, p.fn, config.bootstrap);
  r.two_sided = two_sided_ci(r.bootstrap, config.alpha);
  r.one_sided = one_sided_ci(r.bootstrap, config.alpha);
  r.verdict = delta_fairness_test(r.bootstrap, config.delta, config.alpha);
  r.dual_unique = is_dual_unique(p.problem, p.fn.f);
  r.groups = audit_group_metrics(records, config);
  for (int k = 0; k < p.space.size(); ++k) r.mean_loss += p.fn.f[k] * p.problem.loss[k];
  return r;
}

namespace detail {

inline nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

inline nlohmann::ordered_json audit_report_json(const AuditResult& r, const AuditConfig& config) {
  using json = nlohmann::ordered_json;
  const auto& b = r.bootstrap;
  json j;
  j["spec_version"] = kReportVersion;
  j["n"] = r.prepared.fn.n;
  j["support_size"] = r.prepared.space.size();
  j["faith"] = r.solution.value;
  j["mean_loss"] = r.mean_loss;
  j["ci_two_sided"] = {{"lower", r.two_sided.lower},
                       {"upper", r.two_sided.upper},
                       {"level", r.two_sided.level},
                       {"lower_clamped", r.two_sided.lower_clamped}};
  j["ci_one_sided_lower"] = {{"lower", r.one_sided.lower},
                             {"level", r.one_sided.level},
                             {"lower_clamped", r.one_sided.lower_clamped}};
  j["verdict"] = {{"delta", r.verdict.delta},
                  {"alpha", r.verdict.alpha},
                  {"reject", r.verdict.reject},
                  {"decision", r.verdict.reject ? "unfair" : "fair"}};
  if (r.groups) {
    j["group_metrics"] = {{"spd", detail::optional_number(r.groups->spd)},
                          {"eod", detail::optional_number(r.groups->eod)},
                          {"aod", detail::optional_number(r.groups->aod)}};
  } else {
    j["group_metrics"] = nullptr;
  }
  json diag;
  diag["method"] = method_name(b.method);
  diag["B"] = b.S.size();
  if (b.method == BootstrapMethod::m_out_of_n) {
    diag["m"] = b.m;
  } else {
    diag["eps_n"] = b.eps_n;
  }
  diag["rejections"] = b.rejections;
  diag["dual_unique"] = r.dual_unique;
  diag["budget_active"] = r.solution.budget_active;
  diag["transport_cost"] = r.solution.transport_cost;
  j["diagnostics"] = std::move(diag);
  j["parameters"] = {{"epsilon", config.epsilon},
                     {"delta", config.delta},
                     {"alpha", config.alpha},
                     {"loss", config.loss == LossKind::zero_one ? "zero_one" : "custom"},
                     {"complete_space", config.complete_space}};
  j["seeds"] = {{"bootstrap", config.bootstrap.seed}};
  j["config"] = json::parse(config.source.dump());
  return j;
}

}  // namespace faith
