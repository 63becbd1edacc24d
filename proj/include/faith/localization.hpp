#pragma once

// Where the worst-case transport moves mass, and the usual group metrics
// for comparison.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "faith/errors.hpp"
#include "faith/lp.hpp"
#include "faith/sample_space.hpp"
#include "json.hpp"

namespace faith {

/// Rounds values that sum to an integer so the rounded values keep that sum
/// (largest remainder; ties go to the lower index).
inline std::vector<long long> largest_remainder_round(const std::vector<double>& x) {
  std::vector<long long> out(x.size());
  std::vector<double> rem(x.size());
  double total = 0.0;
  long long floors = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double fl = std::floor(x[i]);
    out[i] = static_cast<long long>(fl);
    rem[i] = x[i] - fl;
    floors += out[i];
    total += x[i];
  }
  long long missing = std::llround(total) - floors;
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (long long i = 0; i < missing && i < static_cast<long long>(order.size()); ++i) ++out[order[i]];
  return out;
}

struct Flow {
  int source = 0;
  int destination = 0;
  double mass = 0.0;
  long long count = 0;
};

/// Net change per point between the worst-case distribution and the data,
/// as probability mass and as counts out of n.
struct TransportDiff {
  long long n = 0;
  std::vector<double> net_mass;
  std::vector<double> net;  // n * net_mass
  std::vector<long long> net_counts;
  std::vector<Flow> flows;
};

inline TransportDiff transport_diff(const LpSolution& solution, const FiniteSampleSpace& space,
                                    const EmpiricalDistribution& fn, long long n) {
  const int K = space.size();
  if (solution.plan.pi.rows() != K || static_cast<int>(fn.f.size()) != K) {
    throw ConfigError("transport plan, space and distribution sizes disagree");
  }
  if (n < 1) throw ConfigError("n must be >= 1");
  TransportDiff d;
  d.n = n;
  const Eigen::MatrixXd& pi = solution.plan.pi;
  d.net_mass.resize(K);
  d.net.resize(K);
  for (int k = 0; k < K; ++k) {
    d.net_mass[k] = pi.col(k).sum() - fn.f[k];
    d.net[k] = static_cast<double>(n) * d.net_mass[k];
  }
  // Transport never changes the label, so each label class balances on its
  // own; rounding per class keeps every class and the total at zero.
  d.net_counts.assign(K, 0);
  std::map<int, std::vector<int>> by_label;
  for (int k = 0; k < K; ++k) by_label[space.point(k).label].push_back(k);
  for (const auto& [label, members] : by_label) {
    std::vector<double> vals;
    for (int k : members) vals.push_back(d.net[k]);
    auto rounded = largest_remainder_round(vals);
    for (std::size_t i = 0; i < members.size(); ++i) d.net_counts[members[i]] = rounded[i];
  }
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      if (i == j || pi(i, j) <= 1e-10) continue;
      d.flows.push_back({i, j, pi(i, j), std::llround(static_cast<double>(n) * pi(i, j))});
    }
  }
  return d;
}

inline TransportDiff transport_diff(const LpSolution& solution, const FiniteSampleSpace& space,
                                    const EmpiricalDistribution& fn) {
  return transport_diff(solution, space, fn, fn.n);
}

struct HeatmapGrid {
  std::vector<std::string> row_features;
  std::vector<std::string> col_features;
  std::vector<std::string> row_headers;
  std::vector<std::string> col_headers;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<long long>> counts;
};

namespace detail {

struct Axis {
  std::vector<int> features;  // schema indices, in schema order
  std::vector<std::string> headers;
  std::vector<int> radix;

  int cell(const SamplePoint& p) const {
    int c = 0;
    for (std::size_t i = 0; i < features.size(); ++i) c = c * radix[i] + p.features[features[i]];
    return c;
  }
};

inline Axis make_axis(const FeatureSchema& schema, const std::vector<std::string>& names) {
  Axis axis;
  for (const auto& name : names) {
    int idx = schema.feature_index(name);
    if (idx < 0) throw SchemaError("unknown feature '" + name + "'");
    if (std::find(axis.features.begin(), axis.features.end(), idx) != axis.features.end()) {
      throw SchemaError("feature '" + name + "' named twice");
    }
    axis.features.push_back(idx);
  }
  std::sort(axis.features.begin(), axis.features.end());
  std::vector<std::string> headers{""};
  for (int idx : axis.features) {
    const auto& f = schema.features[idx];
    axis.radix.push_back(static_cast<int>(f.categories.size()));
    std::vector<std::string> next;
    for (const auto& h : headers) {
      for (const auto& c : f.categories) next.push_back(h + (h.empty() ? "" : "|") + f.name + "=" + c);
    }
    headers = std::move(next);
  }
  if (axis.features.empty()) headers = {"all"};
  axis.headers = std::move(headers);
  return axis;
}

}  // namespace detail

/// Sums net changes over a cross-tabulation of features, keeping only points
/// whose label is `label_filter` when given. Headers run over categories in
/// domain order, with features in schema declaration order.
inline HeatmapGrid marginal_heatmap(const TransportDiff& diff, const FiniteSampleSpace& space,
                                    const std::vector<std::string>& row_features,
                                    const std::vector<std::string>& col_features,
                                    const std::optional<std::string>& label_filter = std::nullopt) {
  const auto& schema = space.schema();
  for (const auto& r : row_features) {
    if (std::find(col_features.begin(), col_features.end(), r) != col_features.end()) {
      throw SchemaError("feature '" + r + "' is on both axes");
    }
  }
  auto rows = detail::make_axis(schema, row_features);
  auto cols = detail::make_axis(schema, col_features);
  int label = -1;
  if (label_filter) {
    label = schema.label_index(*label_filter);
    if (label < 0) throw SchemaError("unknown label '" + *label_filter + "'");
  }
  if (static_cast<int>(diff.net.size()) != space.size()) throw ConfigError("diff does not match the space");

  HeatmapGrid g;
  for (int idx : rows.features) g.row_features.push_back(schema.features[idx].name);
  for (int idx : cols.features) g.col_features.push_back(schema.features[idx].name);
  g.row_headers = rows.headers;
  g.col_headers = cols.headers;
  const std::size_t R = rows.headers.size(), C = cols.headers.size();
  g.values.assign(R, std::vector<double>(C, 0.0));
  for (int k = 0; k < space.size(); ++k) {
    const auto& p = space.point(k);
    if (label >= 0 && p.label != label) continue;
    g.values[rows.cell(p)][cols.cell(p)] += diff.net[k];
  }
  std::vector<double> flat;
  for (const auto& row : g.values) flat.insert(flat.end(), row.begin(), row.end());
  auto rounded = largest_remainder_round(flat);
  g.counts.assign(R, std::vector<long long>(C, 0));
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) g.counts[r][c] = rounded[r * C + c];
  }
  return g;
}

/// Integer counts as CSV; the corner cell names the row and column features.
inline std::string heatmap_csv(const HeatmapGrid& g) {
  auto join = [](const std::vector<std::string>& v, const char* sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
  };
  std::ostringstream os;
  os << join(g.row_features, "|") << "\\" << join(g.col_features, "|");
  for (const auto& h : g.col_headers) os << "," << h;
  os << "\n";
  for (std::size_t r = 0; r < g.row_headers.size(); ++r) {
    os << g.row_headers[r];
    for (long long v : g.counts[r]) os << "," << v;
    os << "\n";
  }
  return os.str();
}

inline nlohmann::ordered_json heatmap_json(const HeatmapGrid& g) {
  nlohmann::ordered_json j;
  j["row_features"] = g.row_features;
  j["col_features"] = g.col_features;
  j["row_headers"] = g.row_headers;
  j["col_headers"] = g.col_headers;
  j["counts"] = g.counts;
  j["values"] = g.values;
  return j;
}

struct GroupRecord {
  bool privileged = false;
  int label = 0;      // 1 = positive class
  int predicted = 0;  // 1 = positive class
};

/// Statistical parity, equal opportunity and average odds differences,
/// unprivileged minus privileged. A metric whose conditional rates are
/// undefined for some group is left empty.
struct GroupMetrics {
  std::optional<double> spd;
  std::optional<double> eod;
  std::optional<double> aod;
};

inline GroupMetrics group_fairness_metrics(const std::vector<GroupRecord>& records) {
  struct Tally {
    long long n = 0, predicted_pos = 0, pos = 0, true_pos = 0, neg = 0, false_pos = 0;
  };
  Tally t[2];  // [0] unprivileged, [1] privileged
  for (const auto& r : records) {
    if ((r.label != 0 && r.label != 1) || (r.predicted != 0 && r.predicted != 1)) {
      throw DataError("group metrics need binary labels and predictions");
    }
    auto& g = t[r.privileged ? 1 : 0];
    ++g.n;
    g.predicted_pos += r.predicted;
    if (r.label == 1) {
      ++g.pos;
      g.true_pos += r.predicted;
    } else {
      ++g.neg;
      g.false_pos += r.predicted;
    }
  }
  auto rate = [](long long a, long long b) { return static_cast<double>(a) / static_cast<double>(b); };
  GroupMetrics m;
  if (t[0].n > 0 && t[1].n > 0) m.spd = rate(t[0].predicted_pos, t[0].n) - rate(t[1].predicted_pos, t[1].n);
  if (t[0].pos > 0 && t[1].pos > 0) {
    double tpr_gap = rate(t[0].true_pos, t[0].pos) - rate(t[1].true_pos, t[1].pos);
    m.eod = tpr_gap;
    if (t[0].neg > 0 && t[1].neg > 0) {
      m.aod = 0.5 * ((rate(t[0].false_pos, t[0].neg) - rate(t[1].false_pos, t[1].neg)) + tpr_gap);
    }
  }
  return m;
}

}  // namespace faith
