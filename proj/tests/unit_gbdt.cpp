#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dial/gbdt.hpp"

using namespace dial;
using Catch::Approx;

namespace {

std::vector<TrainingSample> separable_set(std::size_t n, std::uint64_t seed) {
  // two informative features; boundary x0 + x1 > 1
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TrainingSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    TrainingSample s;
    s.features = {u(rng), u(rng)};
    s.label = s.features[0] + s.features[1] > 1.0 ? 1 : 0;
    s.op = OpType::Write;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("logistic gradient matches central finite differences") {
  // oracle: d/dz loss(y, z) computed by central differences; code uses p - y
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uz(-4.0, 4.0);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const double z = uz(rng);
    const double y = (i % 2 == 0) ? 1.0 : 0.0;
    const double numeric = (logistic_loss(y, z + h) - logistic_loss(y, z - h)) / (2 * h);
    const double analytic = sigmoid(z) - y;
    REQUIRE(std::abs(numeric - analytic) / std::max(1e-12, std::abs(analytic)) < 1e-6);
  }
}

TEST_CASE("training loss is nonincreasing over boosting rounds") {
  auto samples = separable_set(500, 3);
  Hyperparams hp;
  hp.num_trees = 60;
  hp.max_depth = 3;
  hp.min_samples_leaf = 5;
  GbdtModel m = train(samples, hp);
  REQUIRE(m.train_loss.size() == 60);
  for (std::size_t i = 1; i < m.train_loss.size(); ++i)
    REQUIRE(m.train_loss[i] <= m.train_loss[i - 1] + 1e-12);
}

TEST_CASE("separable synthetic set: held-out error under 0.05") {
  auto train_set = separable_set(2000, 10);
  auto test_set = separable_set(500, 11);
  Hyperparams hp;
  hp.num_trees = 200;
  hp.max_depth = 3;
  hp.min_samples_leaf = 5;
  GbdtModel m = train(train_set, hp);
  EvalReport r = evaluate(m, test_set);
  CHECK(r.error_rate < 0.05);
}

TEST_CASE("conflicting duplicates predict one half") {
  std::vector<TrainingSample> samples;
  for (int i = 0; i < 50; ++i) {
    samples.push_back({{0.5, 0.5}, 1, OpType::Write, 1.0});
    samples.push_back({{0.5, 0.5}, 0, OpType::Write, 1.0});
  }
  Hyperparams hp;
  hp.num_trees = 50;
  hp.min_samples_leaf = 5;
  GbdtModel m = train(samples, hp);
  CHECK(m.predict_proba({0.5, 0.5}) == Approx(0.5).margin(1e-9));
}

TEST_CASE("training is deterministic: identical seeds give identical bytes") {
  auto samples = separable_set(600, 21);
  Hyperparams hp;
  hp.num_trees = 40;
  hp.subsample_fraction = 0.7;
  hp.min_samples_leaf = 5;
  GbdtModel a = train(samples, hp);
  GbdtModel b = train(samples, hp);
  CHECK(serialize(a) == serialize(b));
}

TEST_CASE("rejects single-class and inconsistent data") {
  std::vector<TrainingSample> ones;
  for (int i = 0; i < 30; ++i) ones.push_back({{double(i), 0.0}, 1, OpType::Write, 1.0});
  CHECK_THROWS_WITH(train(ones, {}), Catch::Matchers::ContainsSubstring("class 0"));
  std::vector<TrainingSample> zeros;
  for (int i = 0; i < 30; ++i) zeros.push_back({{double(i), 0.0}, 0, OpType::Write, 1.0});
  CHECK_THROWS_WITH(train(zeros, {}), Catch::Matchers::ContainsSubstring("class 1"));
  auto mixed = separable_set(50, 5);
  mixed[10].features.push_back(1.0);
  CHECK_THROWS_AS(train(mixed, Hyperparams{}), std::invalid_argument);
}

TEST_CASE("empty ensemble predicts the label prior") {
  GbdtModel m;
  m.base_score = std::log(0.25 / 0.75);
  m.feature_count = 2;
  CHECK(m.predict_proba({0.0, 0.0}) == Approx(0.25));
}

TEST_CASE("single split tree steps at the threshold") {
  GbdtModel m;
  m.feature_count = 1;
  m.base_score = 0.0;
  m.learning_rate = 1.0;
  Tree t;
  t.nodes.push_back({0, 2.5, 1, 2, 0.0});
  t.nodes.push_back({-1, 0.0, -1, -1, -2.0});
  t.nodes.push_back({-1, 0.0, -1, -1, 2.0});
  m.trees.push_back(t);
  CHECK(m.predict_proba({2.49}) == Approx(sigmoid(-2.0)));
  CHECK(m.predict_proba({2.51}) == Approx(sigmoid(2.0)));
  CHECK(m.predict_proba({-100.0}) == Approx(sigmoid(-2.0)));
}

TEST_CASE("serialize/deserialize round-trips predictions bitwise") {
  auto samples = separable_set(800, 33);
  Hyperparams hp;
  hp.num_trees = 80;
  hp.min_samples_leaf = 5;
  GbdtModel m = train(samples, hp);
  GbdtModel back = deserialize(serialize(m));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x = {u(rng), u(rng)};
    REQUIRE(back.predict_proba(x) == m.predict_proba(x));
  }
}

TEST_CASE("truncated model file is rejected with no partial model") {
  auto samples = separable_set(100, 8);
  Hyperparams hp;
  hp.num_trees = 5;
  hp.min_samples_leaf = 5;
  const std::string bytes = serialize(train(samples, hp));
  CHECK_THROWS_AS(deserialize(bytes.substr(0, bytes.size() / 2)), std::invalid_argument);
}

TEST_CASE("invalid node contents are rejected with a node path") {
  const std::string fixture = R"({
    "format_version": 1, "schema_version": 1, "feature_count": 2, "op": "write",
    "learning_rate": 0.1, "base_score": 0.0,
    "trees": [[{"feature": 7, "threshold": 0.5, "left": 1, "right": 2},
               {"leaf": 1.0}, {"leaf": -1.0}]]
  })";
  CHECK_THROWS_WITH(deserialize(fixture), Catch::Matchers::ContainsSubstring("trees[0].nodes[0]"));
}

TEST_CASE("hand-written one-tree fixture gives the hand-computed probability") {
  const std::string fixture = R"({
    "format_version": 1, "schema_version": 1, "feature_count": 2, "op": "read",
    "learning_rate": 0.5, "base_score": 0.25,
    "trees": [[{"feature": 1, "threshold": 10.0, "left": 1, "right": 2},
               {"leaf": -0.8}, {"leaf": 1.2}]]
  })";
  GbdtModel m = deserialize(fixture);
  // x[1] = 12 -> raw = 0.25 + 0.5 * 1.2 = 0.85
  CHECK(m.predict_proba({0.0, 12.0}) == Approx(1.0 / (1.0 + std::exp(-0.85))));
  // x[1] = 3 -> raw = 0.25 - 0.4 = -0.15
  CHECK(m.predict_proba({0.0, 3.0}) == Approx(1.0 / (1.0 + std::exp(0.15))));
}

TEST_CASE("monotone rescaling of a feature leaves predictions unchanged") {
  auto samples = separable_set(700, 55);
  Hyperparams hp;
  hp.num_trees = 60;
  hp.min_samples_leaf = 5;
  GbdtModel base = train(samples, hp);

  auto rescaled = samples;
  for (auto& s : rescaled) s.features[0] = std::exp(3.0 * s.features[0]);  // strictly monotone
  GbdtModel scaled = train(rescaled, hp);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> x = {u(rng), u(rng)};
    std::vector<double> xs = {std::exp(3.0 * x[0]), x[1]};
    REQUIRE(scaled.predict_proba(xs) == Approx(base.predict_proba(x)).margin(1e-9));
  }
}

TEST_CASE("mean predicted probability matches the class prior") {
  // imbalanced but learnable-noise set
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TrainingSample> samples;
  for (int i = 0; i < 3000; ++i) {
    TrainingSample s;
    s.features = {u(rng), u(rng)};
    const double p = 0.15 + 0.2 * s.features[0];  // noisy relation
    s.label = u(rng) < p ? 1 : 0;
    samples.push_back(std::move(s));
  }
  double prior = 0;
  for (const auto& s : samples) prior += s.label;
  prior /= double(samples.size());
  Hyperparams hp;
  hp.num_trees = 150;
  GbdtModel m = train(samples, hp);
  double mean_p = 0;
  for (const auto& s : samples) mean_p += m.predict_proba(s.features);
  mean_p /= double(samples.size());
  CHECK(std::abs(mean_p - prior) < 0.02);
}

TEST_CASE("schema mismatch at prediction is rejected") {
  auto samples = separable_set(100, 9);
  Hyperparams hp;
  hp.num_trees = 3;
  hp.min_samples_leaf = 5;
  GbdtModel m = train(samples, hp);
  CHECK_THROWS_AS(m.predict_proba({1.0, 2.0, 3.0}), std::invalid_argument);
}
