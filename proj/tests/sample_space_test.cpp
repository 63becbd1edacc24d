#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "faith/sample_space.hpp"

using namespace faith;

namespace {

std::shared_ptr<FeatureSchema> binary_schema() {
  auto s = std::make_shared<FeatureSchema>();
  s->features.push_back(Feature::categorical("group", {"A", "B"}));
  s->labels = {"0", "1"};
  return s;
}

std::shared_ptr<FeatureSchema> three_feature_schema() {
  auto s = std::make_shared<FeatureSchema>();
  s->features.push_back(Feature::categorical("race", {"black", "white", "other"}));
  s->features.push_back(Feature::categorical("sex", {"f", "m"}));
  s->features.push_back(Feature::bucketed("age", {25, 45}));
  s->labels = {"0", "1"};
  return s;
}

}  // namespace

TEST(BuildSpace, AllDistinctIsUniform) {
  std::vector<Observation> recs{{{"A"}, "0"}, {{"A"}, "1"}, {{"B"}, "0"}, {{"B"}, "1"}};
  auto [space, dist] = build_space(recs, binary_schema());
  EXPECT_EQ(space.size(), 4);
  EXPECT_EQ(dist.counts, (std::vector<long long>{1, 1, 1, 1}));
  for (double v : dist.f) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(BuildSpace, TalliesDuplicates) {
  std::vector<Observation> recs{{{"A"}, "0"}, {{"A"}, "0"}, {{"B"}, "1"}};
  auto [space, dist] = build_space(recs, binary_schema());
  ASSERT_EQ(space.size(), 2);
  EXPECT_EQ(dist.counts, (std::vector<long long>{2, 1}));
  EXPECT_NEAR(dist.f[0], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(dist.n, 3);
  EXPECT_EQ(space.describe(1), "group=B,label=1");
}

TEST(BuildSpace, CompleteSpaceIsCartesianProduct) {
  std::vector<Observation> recs{{{"white", "f", "25-45"}, "1"}, {{"black", "m", "<25"}, "0"}};
  auto [space, dist] = build_space(recs, three_feature_schema(), {.complete = true});
  EXPECT_EQ(space.size(), 3 * 2 * 3 * 2);
  EXPECT_EQ(std::count(dist.counts.begin(), dist.counts.end(), 0LL), space.size() - 2);
  EXPECT_EQ(dist.n, 2);
  for (int k = 1; k < space.size(); ++k) {
    auto a = space.point(k - 1).features;
    a.push_back(space.point(k - 1).label);
    auto b = space.point(k).features;
    b.push_back(space.point(k).label);
    EXPECT_LT(a, b);
  }
}

TEST(BuildSpace, Errors) {
  EXPECT_THROW(build_space({}, binary_schema()), EmptyDataError);
  EXPECT_THROW(build_space({{{"C"}, "0"}, {{"A"}, "0"}}, binary_schema()), SchemaError);
  EXPECT_THROW(build_space({{{"A"}, "7"}, {{"A"}, "0"}}, binary_schema()), SchemaError);
  EXPECT_THROW(build_space({{{"A"}, "0"}, {{"A"}, "0"}}, binary_schema()), DataError);
}

TEST(BuildSpace, PermutationInvariant) {
  std::vector<Observation> recs;
  std::mt19937_64 rng(1);
  const char* races[] = {"black", "white", "other"};
  const char* ages[] = {"<25", "25-45", ">=45"};
  for (int i = 0; i < 60; ++i) {
    recs.push_back({{races[rng() % 3], rng() % 2 ? "f" : "m", ages[rng() % 3]}, rng() % 2 ? "1" : "0"});
  }
  auto [s1, d1] = build_space(recs, three_feature_schema());
  std::shuffle(recs.begin(), recs.end(), rng);
  auto [s2, d2] = build_space(recs, three_feature_schema());
  EXPECT_EQ(d1.counts, d2.counts);
  SimilaritySpec spec;
  spec.zero_cost_features = {"race"};
  spec.feature_costs = {{"age", 1.5}, {"sex", 0.5}};
  EXPECT_EQ(build_costs(s1, spec).cost, build_costs(s2, spec).cost);
}

TEST(Bucketing, LeftClosedLabels) {
  auto age = Feature::bucketed("age", {25, 45});
  EXPECT_EQ(age.bucket(30), "25-45");
  EXPECT_EQ(age.bucket(25), "25-45");
  EXPECT_EQ(age.bucket(45), ">=45");
  EXPECT_EQ(age.bucket(24.9), "<25");
  EXPECT_THROW(Feature::bucketed("x", {3, 3}), SchemaError);
}

TEST(BuildCosts, ZeroInfinityMetricRules) {
  auto schema = three_feature_schema();
  std::vector<Observation> recs{
      {{"black", "f", "<25"}, "0"},    // 0
      {{"black", "f", "<25"}, "1"},    // 1
      {{"black", "f", "25-45"}, "0"},  // 2
      {{"white", "f", "<25"}, "0"},    // 3
      {{"black", "m", "<25"}, "0"},    // 4
  };
  auto [space, dist] = build_space(recs, schema);
  SimilaritySpec spec;
  spec.zero_cost_features = {"race"};
  spec.feature_costs = {{"age", 2.0}};
  auto cs = build_costs(space, spec);
  auto id = [&](const Observation& o) {
    std::vector<int> key;
    for (std::size_t i = 0; i < o.features.size(); ++i) key.push_back(schema->features[i].index_of(o.features[i]));
    return *space.find(key, schema->label_index(o.label));
  };
  int a = id(recs[0]), lab = id(recs[1]), older = id(recs[2]), white = id(recs[3]), male = id(recs[4]);
  EXPECT_EQ(cs.forbidden(a, white), 0);
  EXPECT_EQ(cs.cost(a, white), 0.0);
  EXPECT_EQ(cs.forbidden(a, lab), 1);
  EXPECT_EQ(cs.cost(a, lab), 0.0);
  EXPECT_EQ(cs.cost(a, older), 4.0);
  EXPECT_EQ(cs.forbidden(a, male), 1);  // unlisted feature
  EXPECT_TRUE(cs.cost.isApprox(cs.cost.transpose()));
  EXPECT_EQ(cs.forbidden, cs.forbidden.transpose());
  EXPECT_EQ(cs.cost.diagonal().sum(), 0.0);
  EXPECT_EQ(cs.forbidden.diagonal().sum(), 0);
}

TEST(BuildCosts, SymmetricOnRandomSpecs) {
  std::mt19937_64 rng(9);
  auto schema = three_feature_schema();
  std::vector<Observation> recs;
  const char* races[] = {"black", "white", "other"};
  const char* ages[] = {"<25", "25-45", ">=45"};
  for (int i = 0; i < 40; ++i) {
    recs.push_back({{races[rng() % 3], rng() % 2 ? "f" : "m", ages[rng() % 3]}, rng() % 2 ? "1" : "0"});
  }
  auto [space, dist] = build_space(recs, schema, {.complete = true});
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    SimilaritySpec spec;
    for (const auto& f : schema->features) {
      switch (rng() % 3) {
        case 0: spec.zero_cost_features.insert(f.name); break;
        case 1: spec.feature_costs[f.name] = u(rng); break;
        default: spec.forbidden_features.insert(f.name);
      }
    }
    auto cs = build_costs(space, spec);
    EXPECT_EQ(cs.cost, cs.cost.transpose());
    EXPECT_EQ(cs.forbidden, cs.forbidden.transpose());
    EXPECT_EQ(cs.cost.diagonal().cwiseAbs().sum(), 0.0);
    EXPECT_EQ(cs.forbidden.diagonal().sum(), 0);
    EXPECT_TRUE((cs.cost.array() >= 0.0).all());
    EXPECT_EQ((cs.cost.array() * cs.forbidden.cast<double>().array()).abs().sum(), 0.0);
  }
}

TEST(SimilaritySpec, Validation) {
  auto schema = binary_schema();
  SimilaritySpec spec;
  spec.feature_costs = {{"nope", 1.0}};
  EXPECT_THROW(spec.validate(*schema), SchemaError);
  spec.feature_costs = {{"group", -1.0}};
  EXPECT_THROW(spec.validate(*schema), SchemaError);
  spec.feature_costs = {{"group", 1.0}};
  spec.zero_cost_features = {"group"};
  EXPECT_THROW(spec.validate(*schema), SchemaError);
}
