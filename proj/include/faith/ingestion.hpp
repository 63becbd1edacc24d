#pragma once

// Audit data, model predictions and run configuration.
//
// Audit CSV: header = schema feature names + `label`, optionally
// `prediction` and `loss`. Predictions CSV: feature names + `prediction`.
// Rows are joined on the raw feature strings. The HTTP model endpoint takes
// POST {"instances": [[v, ...], ...]} and answers {"predictions": [y, ...]}.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "faith/errors.hpp"
#include "faith/inference.hpp"
#include "faith/sample_space.hpp"
#include "httplib.h"
#include "json.hpp"

namespace faith {

struct PredictionRecord {
  std::size_t row = 0;              // 1-based line number in the source file
  std::vector<std::string> raw;     // feature values as read
  std::vector<std::string> features;  // after bucketing
  std::string label;
  std::optional<std::string> prediction;
  std::optional<double> loss;

  Observation observation() const { return {features, label}; }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                        : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line, cells)
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw DataError(path.filename().string() + " line " + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()));
    }
    t.rows.emplace_back(lineno, std::move(cells));
  }
  if (t.header.empty()) throw EmptyDataError("'" + path.string() + "' has no header row");
  return t;
}

inline std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::map<std::string, std::size_t> column_index(const std::vector<std::string>& header,
                                                       const std::string& file) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!idx.emplace(header[i], i).second) throw DataError(file + ": duplicate column '" + header[i] + "'");
  }
  return idx;
}

// Maps a raw value to its category, bucketing continuous features.
inline std::string categorize(const Feature& f, const std::string& raw, const std::string& where) {
  if (f.continuous()) {
    auto v = parse_double(raw);
    if (!v) throw DataError(where + ": feature '" + f.name + "' value '" + raw + "' is not a number");
    return f.bucket(*v);
  }
  if (f.index_of(raw) < 0) {
    throw SchemaError(where + ": feature '" + f.name + "' has unknown category '" + raw + "'");
  }
  return raw;
}

}  // namespace detail

/// Reads an audit CSV. Continuous columns are bucketed by the schema edges.
inline std::vector<PredictionRecord> load_audit_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
  schema.validate();
  auto table = detail::read_csv(path);
  const std::string file = path.filename().string();
  auto idx = detail::column_index(table.header, file);
  for (const auto& f : schema.features) {
    if (!idx.count(f.name)) throw DataError(file + ": missing column '" + f.name + "'");
  }
  if (!idx.count("label")) throw DataError(file + ": missing column 'label'");
  for (const auto& name : table.header) {
    if (schema.feature_index(name) < 0 && name != "label" && name != "prediction" && name != "loss") {
      throw DataError(file + ": unexpected column '" + name + "'");
    }
  }
  if (table.rows.empty()) throw EmptyDataError(file + ": no data rows");

  std::vector<PredictionRecord> out;
  out.reserve(table.rows.size());
  for (const auto& [line, cells] : table.rows) {
    const std::string where = file + " line " + std::to_string(line);
    PredictionRecord r;
    r.row = line;
    for (const auto& f : schema.features) {
      const auto& raw = cells[idx.at(f.name)];
      r.raw.push_back(raw);
      r.features.push_back(detail::categorize(f, raw, where));
    }
    r.label = cells[idx.at("label")];
    if (schema.label_index(r.label) < 0) throw SchemaError(where + ": unknown label '" + r.label + "'");
    if (auto it = idx.find("prediction"); it != idx.end() && !cells[it->second].empty()) {
      r.prediction = cells[it->second];
      if (schema.label_index(*r.prediction) < 0) {
        throw SchemaError(where + ": unknown predicted label '" + *r.prediction + "'");
      }
    }
    if (auto it = idx.find("loss"); it != idx.end() && !cells[it->second].empty()) {
      auto v = detail::parse_double(cells[it->second]);
      if (!v || *v < 0.0) throw DataError(where + ": loss '" + cells[it->second] + "' is not a number >= 0");
      r.loss = *v;
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Writes records back in the audit CSV layout, using the raw values.
inline std::string write_audit_csv(const std::vector<PredictionRecord>& records, const FeatureSchema& schema) {
  bool pred = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.prediction.has_value(); });
  bool loss = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.loss.has_value(); });
  std::ostringstream os;
  for (const auto& f : schema.features) os << f.name << ",";
  os << "label" << (pred ? ",prediction" : "") << (loss ? ",loss" : "") << "\n";
  os.precision(17);
  for (const auto& r : records) {
    for (const auto& v : r.raw) os << v << ",";
    os << r.label;
    if (pred) os << "," << r.prediction.value_or("");
    if (loss) {
      os << ",";
      if (r.loss) os << *r.loss;
    }
    os << "\n";
  }
  return os.str();
}

/// Raw feature tuple -> predicted label, from a predictions CSV.
class PredictionTable {
 public:
  static PredictionTable load(const std::filesystem::path& path, const FeatureSchema& schema) {
    auto table = detail::read_csv(path);
    const std::string file = path.filename().string();
    auto idx = detail::column_index(table.header, file);
    for (const auto& f : schema.features) {
      if (!idx.count(f.name)) throw DataError(file + ": missing column '" + f.name + "'");
    }
    if (!idx.count("prediction")) throw DataError(file + ": missing column 'prediction'");
    PredictionTable out;
    for (const auto& [line, cells] : table.rows) {
      const std::string where = file + " line " + std::to_string(line);
      std::vector<std::string> key, cats;
      for (const auto& f : schema.features) {
        key.push_back(cells[idx.at(f.name)]);
        cats.push_back(detail::categorize(f, key.back(), where));
      }
      const auto& y = cells[idx.at("prediction")];
      if (schema.label_index(y) < 0) throw SchemaError(where + ": unknown predicted label '" + y + "'");
      auto [it, fresh] = out.by_raw_.emplace(key, y);
      if (!fresh && it->second != y) {
        throw DataError(where + ": conflicting predictions for the same feature tuple");
      }
      if (fresh) out.by_cell_[cats].push_back(y);
    }
    if (out.by_raw_.empty()) throw EmptyDataError(file + ": no data rows");
    return out;
  }

  std::optional<std::string> lookup(const std::vector<std::string>& raw) const {
    auto it = by_raw_.find(raw);
    if (it == by_raw_.end()) return std::nullopt;
    return it->second;
  }

  /// Predictions of every distinct tuple that falls in the bucketed cell.
  const std::vector<std::string>* in_cell(const std::vector<std::string>& categories) const {
    auto it = by_cell_.find(categories);
    return it == by_cell_.end() ? nullptr : &it->second;
  }

  std::size_t size() const noexcept { return by_raw_.size(); }

 private:
  std::map<std::vector<std::string>, std::string> by_raw_;
  std::map<std::vector<std::string>, std::vector<std::string>> by_cell_;
};

/// Fills in predictions from the table. Every record must find its tuple.
inline void join_predictions(std::vector<PredictionRecord>& records, const PredictionTable& table) {
  for (auto& r : records) {
    auto y = table.lookup(r.raw);
    if (!y) throw DataError("line " + std::to_string(r.row) + ": no prediction for this feature tuple");
    r.prediction = *y;
  }
}

struct HttpModelOptions {
  std::string url;  // scheme://host[:port]/path
  std::size_t batch_size = 1024;
  int retries = 3;
  std::chrono::milliseconds backoff{200};
  std::chrono::seconds timeout{30};
};

inline constexpr std::size_t kMaxHttpBatch = 1024;

/// Black-box model behind an HTTP endpoint.
class HttpModel {
 public:
  HttpModel(const FeatureSchema& schema, HttpModelOptions opts) : schema_(&schema), opts_(std::move(opts)) {
    if (opts_.batch_size < 1 || opts_.batch_size > kMaxHttpBatch) {
      throw ConfigError("HTTP batch size must be in [1, 1024]");
    }
    if (opts_.retries < 0) throw ConfigError("HTTP retries must be >= 0");
    auto scheme = opts_.url.find("://");
    if (scheme == std::string::npos) throw ConfigError("model url '" + opts_.url + "' has no scheme");
    auto slash = opts_.url.find('/', scheme + 3);
    base_ = opts_.url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : opts_.url.substr(slash);
  }

  /// Predicted labels for feature rows given in schema order.
  std::vector<std::string> predict(const std::vector<std::vector<std::string>>& rows) const {
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (std::size_t start = 0; start < rows.size(); start += opts_.batch_size) {
      std::size_t end = std::min(rows.size(), start + opts_.batch_size);
      auto batch = post_batch(rows, start, end);
      out.insert(out.end(), batch.begin(), batch.end());
    }
    return out;
  }

 private:
  nlohmann::json instance(const std::vector<std::string>& row) const {
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (schema_->features[i].continuous()) {
        auto v = detail::parse_double(row[i]);
        if (v) {
          j.push_back(*v);
          continue;
        }
      }
      j.push_back(row[i]);
    }
    return j;
  }

  std::vector<std::string> post_batch(const std::vector<std::vector<std::string>>& rows, std::size_t start,
                                      std::size_t end) const {
    nlohmann::json body;
    body["instances"] = nlohmann::json::array();
    for (std::size_t i = start; i < end; ++i) body["instances"].push_back(instance(rows[i]));
    const std::string payload = body.dump();

    std::string failure;
    auto delay = opts_.backoff;
    for (int attempt = 0; attempt <= opts_.retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      httplib::Client client(base_);
      client.set_connection_timeout(opts_.timeout);
      client.set_read_timeout(opts_.timeout);
      auto res = client.Post(path_, payload, "application/json");
      if (!res) {
        failure = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500 || res->status == 429) {
        failure = "HTTP status " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw ProtocolError("model endpoint returned HTTP status " + std::to_string(res->status));
      return parse_response(res->body, end - start);
    }
    throw ProtocolError("model endpoint failed after " + std::to_string(opts_.retries + 1) + " attempts: " + failure);
  }

  std::vector<std::string> parse_response(const std::string& body, std::size_t expected) const {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("model response is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("predictions") || !j["predictions"].is_array()) {
      throw ProtocolError("model response lacks a 'predictions' array");
    }
    const auto& p = j["predictions"];
    if (p.size() != expected) {
      throw ProtocolError("model returned " + std::to_string(p.size()) + " predictions for " +
                          std::to_string(expected) + " instances");
    }
    std::vector<std::string> out;
    for (const auto& v : p) {
      std::string y;
      if (v.is_string()) {
        y = v.get<std::string>();
      } else if (v.is_number_integer()) {
        y = std::to_string(v.get<long long>());
      } else if (v.is_boolean()) {
        y = v.get<bool>() ? "1" : "0";
      } else {
        throw ProtocolError("model returned a non-label value: " + v.dump());
      }
      if (schema_->label_index(y) < 0) throw ProtocolError("model returned unknown label '" + y + "'");
      out.push_back(std::move(y));
    }
    return out;
  }

  const FeatureSchema* schema_;
  HttpModelOptions opts_;
  std::string base_;
  std::string path_;
};

inline void fetch_predictions(std::vector<PredictionRecord>& records, const HttpModel& model) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(r.raw);
  auto ys = model.predict(rows);
  for (std::size_t i = 0; i < records.size(); ++i) records[i].prediction = ys[i];
}

inline int zero_one_loss(const PredictionRecord& r) {
  if (!r.prediction) throw DataError("line " + std::to_string(r.row) + ": no prediction");
  return *r.prediction != r.label ? 1 : 0;
}

enum class LossKind { zero_one, custom };

inline double record_loss(const PredictionRecord& r, LossKind kind) {
  if (kind == LossKind::zero_one) return zero_one_loss(r);
  if (!r.loss) throw DataError("line " + std::to_string(r.row) + ": custom loss selected but no loss value");
  return *r.loss;
}

/// Where predictions for cells without audit rows may come from.
struct CellPredictionSources {
  const PredictionTable* table = nullptr;
  const HttpModel* http = nullptr;
};

/// Per-point loss on a space built from `records`. An observed point gets the
/// mean loss of its rows. An unobserved point (complete spaces only) gets the
/// error rate of the model's predictions on its feature cell, taken from
/// audit rows with the same features, then the predictions table, then the
/// HTTP model when every feature is categorical.
inline std::vector<double> cell_losses(const FiniteSampleSpace& space, const std::vector<PredictionRecord>& records,
                                       LossKind kind, const CellPredictionSources& sources = {}) {
  const auto& schema = space.schema();
  const int K = space.size();
  std::vector<double> sum(K, 0.0);
  std::vector<long long> count(K, 0);
  std::map<std::vector<int>, std::vector<std::string>> cell_predictions;
  for (const auto& r : records) {
    auto codes = detail::encode(schema, r.observation(), r.row);
    const int label = codes.back();
    codes.pop_back();
    auto k = space.find(codes, label);
    if (!k) throw DataError("line " + std::to_string(r.row) + ": record is not in the sample space");
    sum[*k] += record_loss(r, kind);
    ++count[*k];
    if (r.prediction) cell_predictions[codes].push_back(*r.prediction);
  }
  const bool categorical = std::none_of(schema.features.begin(), schema.features.end(),
                                        [](const Feature& f) { return f.continuous(); });
  std::vector<double> loss(K, 0.0);
  for (int k = 0; k < K; ++k) {
    if (count[k] > 0) {
      loss[k] = sum[k] / static_cast<double>(count[k]);
      continue;
    }
    if (kind == LossKind::custom) {
      throw DataError("no loss available for unobserved point " + space.describe(k));
    }
    const auto& p = space.point(k);
    const std::string& label = schema.labels[p.label];
    std::vector<std::string> cats;
    for (std::size_t i = 0; i < p.features.size(); ++i) cats.push_back(schema.features[i].categories[p.features[i]]);
    const std::vector<std::string>* preds = nullptr;
    std::vector<std::string> fetched;
    if (auto it = cell_predictions.find(p.features); it != cell_predictions.end()) {
      preds = &it->second;
    } else if (sources.table && sources.table->in_cell(cats)) {
      preds = sources.table->in_cell(cats);
    } else if (sources.http && categorical) {
      fetched = sources.http->predict({cats});
      preds = &fetched;
    } else {
      throw DataError("no prediction available for unobserved point " + space.describe(k));
    }
    long long wrong = std::count_if(preds->begin(), preds->end(), [&](const std::string& y) { return y != label; });
    loss[k] = static_cast<double>(wrong) / static_cast<double>(preds->size());
  }
  return loss;
}

// ---------------------------------------------------------------- config

enum class ModelSource { none, predictions_file, http };

struct ModelSpec {
  ModelSource source = ModelSource::none;
  std::filesystem::path path;
  HttpModelOptions http;
};

struct PrivilegedGroup {
  std::string feature;
  std::set<std::string> values;
};

struct AuditConfig {
  std::shared_ptr<FeatureSchema> schema;
  SimilaritySpec similarity;
  double epsilon = 0.0;
  double delta = 0.0365;
  double alpha = 0.05;
  LossKind loss = LossKind::zero_one;
  BootstrapConfig bootstrap;
  ModelSpec model;
  bool complete_space = false;
  std::optional<PrivilegedGroup> privileged;
  std::string positive_label;
  std::uint64_t seed = 0;
  int threads = 1;
  nlohmann::json source;  // the document this was parsed from

  void validate() const {
    if (!schema) throw ConfigError("config has no schema");
    schema->validate();
    similarity.validate(*schema);
    if (!(std::isfinite(epsilon) && epsilon >= 0.0)) throw ConfigError("epsilon must be finite and >= 0");
    if (!(std::isfinite(delta) && delta >= 0.0)) throw ConfigError("delta must be finite and >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (bootstrap.B < 1) throw ConfigError("bootstrap B must be >= 1");
    if (bootstrap.m < 0) throw ConfigError("bootstrap m must be >= 1");
    if (!(std::isfinite(bootstrap.eps_n) && bootstrap.eps_n >= 0.0)) throw ConfigError("bootstrap eps_n must be > 0");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    if (schema->label_index(positive_label) < 0) {
      throw ConfigError("positive_label '" + positive_label + "' is not a label");
    }
    if (privileged) {
      int idx = schema->feature_index(privileged->feature);
      if (idx < 0) throw ConfigError("privileged feature '" + privileged->feature + "' is not in the schema");
      for (const auto& v : privileged->values) {
        if (schema->features[idx].index_of(v) < 0) {
          throw ConfigError("privileged value '" + v + "' is not a category of '" + privileged->feature + "'");
        }
      }
    }
  }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_as(const nlohmann::json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + " is missing or has the wrong type");
  }
}

inline std::string label_string(const nlohmann::json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ConfigError(where + " must be a string or an integer");
}

inline BootstrapMethod parse_method(const std::string& s) {
  if (s == "mn" || s == "m_out_of_n") return BootstrapMethod::m_out_of_n;
  if (s == "nd" || s == "numerical_derivative") return BootstrapMethod::numerical_derivative;
  throw ConfigError("unknown bootstrap method '" + s + "' (expected mn or nd)");
}

}  // namespace detail

namespace detail {

inline AuditConfig parse_config_unchecked(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  check_keys(j,
                     {"schema", "similarity", "epsilon", "delta", "alpha", "loss", "bootstrap", "model",
                      "complete_space", "privileged", "positive_label", "seed", "threads"},
                     "config");
  AuditConfig c;

  if (!j.contains("schema")) throw ConfigError("config.schema is required");
  const auto& js = j["schema"];
  detail::check_keys(js, {"features", "labels"}, "schema");
  auto schema = std::make_shared<FeatureSchema>();
  if (!js.contains("features") || !js["features"].is_array()) throw ConfigError("schema.features must be an array");
  for (const auto& jf : js["features"]) {
    detail::check_keys(jf, {"name", "categories", "edges"}, "schema.features[]");
    auto name = get_as<std::string>(jf, "name", "schema.features[]");
    if (jf.contains("categories") == jf.contains("edges")) {
      throw ConfigError("feature '" + name + "' needs exactly one of categories or edges");
    }
    if (jf.contains("edges")) {
      schema->features.push_back(Feature::bucketed(name, get_as<std::vector<double>>(jf, "edges", name)));
    } else {
      std::vector<std::string> cats;
      if (!jf["categories"].is_array()) throw ConfigError("feature '" + name + "': categories must be an array");
      for (const auto& v : jf["categories"]) cats.push_back(detail::label_string(v, name + ".categories[]"));
      schema->features.push_back(Feature::categorical(name, std::move(cats)));
    }
  }
  if (!js.contains("labels") || !js["labels"].is_array()) throw ConfigError("schema.labels must be an array");
  for (const auto& v : js["labels"]) schema->labels.push_back(detail::label_string(v, "schema.labels[]"));
  schema->validate();
  c.schema = schema;

  if (j.contains("similarity")) {
    const auto& sim = j["similarity"];
    detail::check_keys(sim, {"zero_cost_features", "feature_costs", "forbidden_features"}, "similarity");
    if (sim.contains("zero_cost_features")) {
      for (const auto& s : get_as<std::vector<std::string>>(sim, "zero_cost_features", "similarity")) {
        c.similarity.zero_cost_features.insert(s);
      }
    }
    if (sim.contains("feature_costs")) {
      c.similarity.feature_costs = get_as<std::map<std::string, double>>(sim, "feature_costs", "similarity");
    }
    if (sim.contains("forbidden_features")) {
      for (const auto& s : get_as<std::vector<std::string>>(sim, "forbidden_features", "similarity")) {
        c.similarity.forbidden_features.insert(s);
      }
    }
  }

  if (!j.contains("epsilon")) throw ConfigError("config.epsilon is required");
  c.epsilon = get_as<double>(j, "epsilon", "config");
  if (j.contains("delta")) c.delta = get_as<double>(j, "delta", "config");
  if (j.contains("alpha")) c.alpha = get_as<double>(j, "alpha", "config");
  if (j.contains("loss")) {
    auto s = get_as<std::string>(j, "loss", "config");
    if (s == "zero_one") c.loss = LossKind::zero_one;
    else if (s == "custom") c.loss = LossKind::custom;
    else throw ConfigError("loss must be zero_one or custom");
  }
  if (j.contains("bootstrap")) {
    const auto& b = j["bootstrap"];
    detail::check_keys(b, {"method", "B", "m", "eps_n"}, "bootstrap");
    if (b.contains("method")) c.bootstrap.method = detail::parse_method(get_as<std::string>(b, "method", "bootstrap"));
    if (b.contains("B")) c.bootstrap.B = get_as<long>(b, "B", "bootstrap");
    if (b.contains("m")) c.bootstrap.m = get_as<long long>(b, "m", "bootstrap");
    if (b.contains("eps_n")) c.bootstrap.eps_n = get_as<double>(b, "eps_n", "bootstrap");
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    detail::check_keys(m, {"source", "path", "url", "batch_size", "retries", "backoff_ms", "timeout_s"}, "model");
    auto source = get_as<std::string>(m, "source", "model");
    if (source == "predictions_file") {
      c.model.source = ModelSource::predictions_file;
      if (m.contains("path")) {
        std::filesystem::path p = get_as<std::string>(m, "path", "model");
        c.model.path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
      }
    } else if (source == "http_endpoint" || source == "http") {
      c.model.source = ModelSource::http;
      c.model.http.url = get_as<std::string>(m, "url", "model");
      if (m.contains("batch_size")) c.model.http.batch_size = get_as<std::size_t>(m, "batch_size", "model");
      if (m.contains("retries")) c.model.http.retries = get_as<int>(m, "retries", "model");
      if (m.contains("backoff_ms")) c.model.http.backoff = std::chrono::milliseconds(get_as<long>(m, "backoff_ms", "model"));
      if (m.contains("timeout_s")) c.model.http.timeout = std::chrono::seconds(get_as<long>(m, "timeout_s", "model"));
    } else {
      throw ConfigError("model.source must be predictions_file or http_endpoint");
    }
  }
  if (j.contains("complete_space")) c.complete_space = get_as<bool>(j, "complete_space", "config");
  if (j.contains("privileged")) {
    const auto& p = j["privileged"];
    detail::check_keys(p, {"feature", "values"}, "privileged");
    PrivilegedGroup g;
    g.feature = get_as<std::string>(p, "feature", "privileged");
    if (!p.contains("values") || !p["values"].is_array()) throw ConfigError("privileged.values must be an array");
    for (const auto& v : p["values"]) g.values.insert(detail::label_string(v, "privileged.values[]"));
    c.privileged = std::move(g);
  }
  c.positive_label = j.contains("positive_label") ? detail::label_string(j["positive_label"], "positive_label")
                                                  : schema->labels.back();
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed", "config");
  if (j.contains("threads")) c.threads = get_as<int>(j, "threads", "config");
  c.bootstrap.seed = c.seed;
  c.bootstrap.threads = c.threads;
  c.source = j;
  c.validate();
  return c;
}

}  // namespace detail

/// Parses and validates a config document. Relative model paths resolve
/// against `base_dir`. Unknown keys are rejected at every level.
inline AuditConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  try {
    return detail::parse_config_unchecked(j, base_dir);
  } catch (const SchemaError& e) {
    throw ConfigError(e.what());
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline AuditConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json_file(path), path.parent_path());
}

}  // namespace faith
