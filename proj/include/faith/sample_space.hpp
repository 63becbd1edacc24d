#pragma once

// Finite sample space, empirical distribution and transport cost structure.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "faith/errors.hpp"

namespace faith {

/// One column of the audit data. A feature is either categorical (finite
/// named domain) or continuous with bucket edges; continuous values are
/// mapped to left-closed buckets `<e0`, `e0-e1`, ..., `>=ek`.
struct Feature {
  std::string name;
  std::vector<std::string> categories;
  std::vector<double> bucket_edges;

  static Feature categorical(std::string name, std::vector<std::string> categories) {
    Feature f;
    f.name = std::move(name);
    f.categories = std::move(categories);
    return f;
  }

  static Feature bucketed(std::string name, std::vector<double> edges) {
    Feature f;
    f.name = std::move(name);
    f.bucket_edges = std::move(edges);
    if (f.bucket_edges.empty()) throw SchemaError("feature '" + f.name + "': no bucket edges");
    for (std::size_t i = 1; i < f.bucket_edges.size(); ++i) {
      if (!(f.bucket_edges[i - 1] < f.bucket_edges[i])) {
        throw SchemaError("feature '" + f.name + "': bucket edges must be strictly increasing");
      }
    }
    const auto& e = f.bucket_edges;
    f.categories.push_back("<" + format_edge(e.front()));
    for (std::size_t i = 1; i < e.size(); ++i) {
      f.categories.push_back(format_edge(e[i - 1]) + "-" + format_edge(e[i]));
    }
    f.categories.push_back(">=" + format_edge(e.back()));
    return f;
  }

  bool continuous() const noexcept { return !bucket_edges.empty(); }

  int index_of(const std::string& value) const {
    auto it = std::find(categories.begin(), categories.end(), value);
    return it == categories.end() ? -1 : static_cast<int>(it - categories.begin());
  }

  /// Bucket label for a raw continuous value.
  const std::string& bucket(double value) const {
    auto it = std::upper_bound(bucket_edges.begin(), bucket_edges.end(), value);
    return categories[static_cast<std::size_t>(it - bucket_edges.begin())];
  }

  static std::string format_edge(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }
};

struct FeatureSchema {
  std::vector<Feature> features;
  std::vector<std::string> labels;

  int feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (features[i].name == name) return static_cast<int>(i);
    }
    return -1;
  }

  int label_index(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
  }

  void validate() const {
    if (features.empty()) throw SchemaError("schema declares no features");
    if (labels.empty()) throw SchemaError("schema declares no labels");
    std::set<std::string> names;
    for (const auto& f : features) {
      if (f.name.empty()) throw SchemaError("feature with empty name");
      if (f.name == "label" || f.name == "prediction" || f.name == "loss") {
        throw SchemaError("feature name '" + f.name + "' is reserved");
      }
      if (!names.insert(f.name).second) throw SchemaError("duplicate feature '" + f.name + "'");
      if (f.categories.empty()) throw SchemaError("feature '" + f.name + "' has an empty domain");
      std::set<std::string> cats(f.categories.begin(), f.categories.end());
      if (cats.size() != f.categories.size()) {
        throw SchemaError("feature '" + f.name + "' repeats a category");
      }
    }
    std::set<std::string> labs(labels.begin(), labels.end());
    if (labs.size() != labels.size()) throw SchemaError("duplicate label in schema");
  }
};

/// A record in string form (already bucketed).
struct Observation {
  std::vector<std::string> features;
  std::string label;
};

struct SamplePoint {
  int id = 0;
  std::vector<int> features;  // category index per schema feature
  int label = 0;              // index into schema labels
};

class FiniteSampleSpace {
 public:
  FiniteSampleSpace(std::shared_ptr<const FeatureSchema> schema, std::vector<SamplePoint> points)
      : schema_(std::move(schema)), points_(std::move(points)) {
    if (points_.size() < 2) throw DataError("a sample space needs at least two points");
    for (std::size_t k = 0; k < points_.size(); ++k) {
      if (points_[k].id != static_cast<int>(k)) throw DataError("point ids must be 0..K-1 in order");
      auto key = points_[k].features;
      key.push_back(points_[k].label);
      if (!index_.emplace(std::move(key), static_cast<int>(k)).second) {
        throw DataError("duplicate (features, label) point in sample space");
      }
    }
  }

  int size() const noexcept { return static_cast<int>(points_.size()); }
  const SamplePoint& point(int k) const { return points_.at(static_cast<std::size_t>(k)); }
  const std::vector<SamplePoint>& points() const noexcept { return points_; }
  const FeatureSchema& schema() const noexcept { return *schema_; }
  std::shared_ptr<const FeatureSchema> schema_ptr() const noexcept { return schema_; }

  std::optional<int> find(const std::vector<int>& features, int label) const {
    auto key = features;
    key.push_back(label);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::string describe(int k) const {
    const auto& p = point(k);
    std::string out;
    for (std::size_t i = 0; i < p.features.size(); ++i) {
      out += schema_->features[i].name + "=" + schema_->features[i].categories[p.features[i]] + ",";
    }
    out += "label=" + schema_->labels[p.label];
    return out;
  }

 private:
  std::shared_ptr<const FeatureSchema> schema_;
  std::vector<SamplePoint> points_;
  std::map<std::vector<int>, int> index_;
};

struct EmpiricalDistribution {
  std::vector<long long> counts;
  long long n = 0;
  std::vector<double> f;

  static EmpiricalDistribution from_counts(std::vector<long long> counts) {
    EmpiricalDistribution d;
    for (long long c : counts) {
      if (c < 0) throw DataError("negative count");
      d.n += c;
    }
    if (d.n < 1) throw EmptyDataError("empirical distribution has no observations");
    d.f.resize(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
      d.f[k] = static_cast<double>(counts[k]) / static_cast<double>(d.n);
    }
    d.counts = std::move(counts);
    return d;
  }
};

struct SpaceOptions {
  // Include every cell of features x labels, with count 0 when unobserved.
  bool complete = false;
};

namespace detail {

inline std::vector<int> encode(const FeatureSchema& schema, const Observation& obs, std::size_t row) {
  if (obs.features.size() != schema.features.size()) {
    throw SchemaError("record " + std::to_string(row) + ": expected " +
                      std::to_string(schema.features.size()) + " features, got " +
                      std::to_string(obs.features.size()));
  }
  std::vector<int> key(schema.features.size() + 1);
  for (std::size_t i = 0; i < obs.features.size(); ++i) {
    int idx = schema.features[i].index_of(obs.features[i]);
    if (idx < 0) {
      throw SchemaError("record " + std::to_string(row) + ": unknown value '" + obs.features[i] +
                        "' for feature '" + schema.features[i].name + "'");
    }
    key[i] = idx;
  }
  int lab = schema.label_index(obs.label);
  if (lab < 0) {
    throw SchemaError("record " + std::to_string(row) + ": unknown label '" + obs.label + "'");
  }
  key.back() = lab;
  return key;
}

}  // namespace detail

/// Number of cells in the complete space (product of domain sizes times |Y|).
inline long long complete_space_size(const FeatureSchema& schema) {
  long long k = static_cast<long long>(schema.labels.size());
  for (const auto& f : schema.features) {
    k *= static_cast<long long>(f.categories.size());
    if (k > 10'000'000) throw ConfigError("complete sample space is too large");
  }
  return k;
}

/// Builds the sample space and the empirical distribution of `records`.
/// Points are ordered lexicographically by (feature indices..., label index).
inline std::pair<FiniteSampleSpace, EmpiricalDistribution> build_space(
    const std::vector<Observation>& records, std::shared_ptr<const FeatureSchema> schema,
    SpaceOptions options = {}) {
  schema->validate();
  if (records.empty()) throw EmptyDataError("no records to build a sample space from");

  std::map<std::vector<int>, long long> tally;
  for (std::size_t row = 0; row < records.size(); ++row) {
    ++tally[detail::encode(*schema, records[row], row)];
  }

  std::vector<std::vector<int>> keys;
  if (options.complete) {
    long long total = complete_space_size(*schema);
    const std::size_t width = schema->features.size() + 1;
    std::vector<int> radix(width);
    for (std::size_t i = 0; i < schema->features.size(); ++i) {
      radix[i] = static_cast<int>(schema->features[i].categories.size());
    }
    radix.back() = static_cast<int>(schema->labels.size());
    std::vector<int> key(width, 0);
    keys.reserve(static_cast<std::size_t>(total));
    for (long long c = 0; c < total; ++c) {
      keys.push_back(key);
      for (std::size_t pos = width; pos-- > 0;) {
        if (++key[pos] < radix[pos]) break;
        key[pos] = 0;
      }
    }
  } else {
    for (const auto& [key, count] : tally) keys.push_back(key);
  }

  std::vector<SamplePoint> points;
  std::vector<long long> counts;
  points.reserve(keys.size());
  for (std::size_t k = 0; k < keys.size(); ++k) {
    SamplePoint p;
    p.id = static_cast<int>(k);
    p.features.assign(keys[k].begin(), keys[k].end() - 1);
    p.label = keys[k].back();
    points.push_back(std::move(p));
    auto it = tally.find(keys[k]);
    counts.push_back(it == tally.end() ? 0 : it->second);
  }
  FiniteSampleSpace space(std::move(schema), std::move(points));
  return {std::move(space), EmpiricalDistribution::from_counts(std::move(counts))};
}

/// Which features may differ between comparable individuals, and at what
/// price. Features named in none of the three sets are treated as forbidden:
/// a pair differing in them cannot be transported.
struct SimilaritySpec {
  std::set<std::string> zero_cost_features;
  std::map<std::string, double> feature_costs;
  std::set<std::string> forbidden_features;
  bool forbid_label_change = true;

  void validate(const FeatureSchema& schema) const {
    auto known = [&](const std::string& name) {
      if (schema.feature_index(name) < 0) {
        throw SchemaError("similarity spec names unknown feature '" + name + "'");
      }
    };
    for (const auto& n : zero_cost_features) known(n);
    for (const auto& n : forbidden_features) known(n);
    for (const auto& [n, c] : feature_costs) {
      known(n);
      if (!std::isfinite(c) || c < 0.0) {
        throw SchemaError("feature cost for '" + n + "' must be finite and nonnegative");
      }
      if (zero_cost_features.count(n) || forbidden_features.count(n)) {
        throw SchemaError("feature '" + n + "' is listed twice in the similarity spec");
      }
    }
    for (const auto& n : zero_cost_features) {
      if (forbidden_features.count(n)) {
        throw SchemaError("feature '" + n + "' is both zero-cost and forbidden");
      }
    }
    if (!forbid_label_change) throw SchemaError("label changes are always forbidden");
  }
};

/// C holds squared feature distances, D flags prohibited moves. Entries with
/// D = 1 carry C = 0.
struct CostStructure {
  Eigen::MatrixXd cost;
  Eigen::MatrixXi forbidden;
};

inline CostStructure build_costs(const FiniteSampleSpace& space, const SimilaritySpec& spec) {
  const auto& schema = space.schema();
  spec.validate(schema);

  enum class Kind { free, priced, forbidden };
  std::vector<Kind> kind(schema.features.size(), Kind::forbidden);
  std::vector<double> price(schema.features.size(), 0.0);
  for (std::size_t i = 0; i < schema.features.size(); ++i) {
    const auto& name = schema.features[i].name;
    if (spec.zero_cost_features.count(name)) {
      kind[i] = Kind::free;
    } else if (auto it = spec.feature_costs.find(name); it != spec.feature_costs.end()) {
      kind[i] = Kind::priced;
      price[i] = it->second;
    }
  }

  const int K = space.size();
  CostStructure cs{Eigen::MatrixXd::Zero(K, K), Eigen::MatrixXi::Zero(K, K)};
  for (int i = 0; i < K; ++i) {
    const auto& a = space.point(i);
    for (int j = i + 1; j < K; ++j) {
      const auto& b = space.point(j);
      bool blocked = a.label != b.label;
      double d = 0.0;
      for (std::size_t f = 0; f < a.features.size() && !blocked; ++f) {
        if (a.features[f] == b.features[f]) continue;
        if (kind[f] == Kind::forbidden) blocked = true;
        else if (kind[f] == Kind::priced) d += price[f];
      }
      if (blocked) {
        cs.forbidden(i, j) = cs.forbidden(j, i) = 1;
      } else {
        cs.cost(i, j) = cs.cost(j, i) = d * d;
      }
    }
  }
  return cs;
}

}  // namespace faith
