#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dial/metrics.hpp"
#include "dial/types.hpp"

namespace dial {

struct TrainingSample {
  std::vector<double> features;
  int label = 0;  // 1 iff the applied configuration improved throughput by > epsilon
  OpType op = OpType::Write;
  double weight = 1.0;
};

inline nlohmann::json to_json(const TrainingSample& s) {
  return {{"schema_version", kSchemaVersion},
          {"features", s.features},
          {"label", s.label},
          {"op", to_string(s.op)},
          {"weight", s.weight}};
}

inline TrainingSample sample_from_json(const nlohmann::json& j) {
  TrainingSample s;
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw std::invalid_argument("training sample: schema version mismatch");
  s.features = j.at("features").get<std::vector<double>>();
  s.label = j.at("label").get<int>();
  if (s.label != 0 && s.label != 1) throw std::invalid_argument("training sample: label must be 0/1");
  s.op = op_from_string(j.at("op").get<std::string>());
  s.weight = j.value("weight", 1.0);
  for (double v : s.features)
    if (!std::isfinite(v)) throw std::invalid_argument("training sample: non-finite feature");
  return s;
}

struct Hyperparams {
  int num_trees = 200;
  int max_depth = 4;
  double learning_rate = 0.1;
  int min_samples_leaf = 20;
  double subsample_fraction = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (num_trees < 1) throw std::invalid_argument("hyperparams: num_trees >= 1");
    if (max_depth < 1) throw std::invalid_argument("hyperparams: max_depth >= 1");
    if (learning_rate <= 0.0 || learning_rate > 1.0)
      throw std::invalid_argument("hyperparams: learning_rate in (0,1]");
    if (min_samples_leaf < 1) throw std::invalid_argument("hyperparams: min_samples_leaf >= 1");
    if (subsample_fraction <= 0.0 || subsample_fraction > 1.0)
      throw std::invalid_argument("hyperparams: subsample_fraction in (0,1]");
  }
};

// Binary regression-tree node. Internal nodes route x[feature] < threshold to
// `left`; leaves carry the additive log-odds contribution.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;
  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  double eval(const std::vector<double>& x) const {
    int i = 0;
    while (!nodes[i].is_leaf()) i = x[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].leaf_value;
  }
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Gradient-boosted ensemble with logistic output; immutable once trained.
class GbdtModel {
 public:
  std::vector<Tree> trees;
  double learning_rate = 0.1;
  double base_score = 0.0;  // log-odds of the label prior
  int schema_version = kSchemaVersion;
  std::size_t feature_count = kFeatureCount;
  OpType op = OpType::Write;
  std::vector<double> train_loss;  // mean logistic loss after each boosting round

  double raw_score(const std::vector<double>& x) const {
    if (x.size() != feature_count)
      throw std::invalid_argument("predict: feature length " + std::to_string(x.size()) +
                                  " does not match schema length " + std::to_string(feature_count));
    double acc = 0.0;
    for (const Tree& t : trees) acc += t.eval(x);
    return base_score + learning_rate * acc;
  }

  double predict_proba(const std::vector<double>& x) const { return sigmoid(raw_score(x)); }
};

namespace detail {

struct SplitResult {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Per-node sample view: one index list per feature, each presorted by that
// feature's value (ties by index). Sorted once at the root; splits partition
// the lists stably, so no re-sorting happens during tree growth.
using SortedLists = std::vector<std::vector<int>>;

// Exact greedy split search by variance reduction on the gradient targets.
// Ties resolve to the lowest feature index, then the lowest threshold, which
// the ascending scan order guarantees with a strict improvement test.
inline SplitResult best_split(const std::vector<std::vector<double>>& features_by_col,
                              const std::vector<double>& grad, const SortedLists& lists,
                              int min_leaf) {
  SplitResult best;
  const std::size_t n = lists.empty() ? 0 : lists[0].size();
  if (n < std::size_t(2 * min_leaf)) return best;
  double total = 0.0;
  for (int i : lists[0]) total += grad[i];
  const double parent_score = total * total / double(n);

  for (std::size_t f = 0; f < lists.size(); ++f) {
    const std::vector<double>& col = features_by_col[f];
    const std::vector<int>& order = lists[f];
    double left_sum = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      left_sum += grad[order[k]];
      if (col[order[k]] == col[order[k + 1]]) continue;  // can't split between equal values
      const std::size_t nl = k + 1, nr = n - nl;
      if (nl < std::size_t(min_leaf) || nr < std::size_t(min_leaf)) continue;
      const double right_sum = total - left_sum;
      const double gain =
          left_sum * left_sum / double(nl) + right_sum * right_sum / double(nr) - parent_score;
      if (gain > best.gain + 1e-12) {
        best.found = true;
        best.feature = int(f);
        best.threshold = (col[order[k]] + col[order[k + 1]]) / 2.0;
        best.gain = gain;
      }
    }
  }
  return best;
}

inline int build_node(Tree& tree, const std::vector<std::vector<double>>& features_by_col,
                      const std::vector<double>& grad, const std::vector<double>& hess,
                      SortedLists&& lists, int depth, const Hyperparams& hp) {
  double g = 0.0, h = 0.0;
  if (!lists.empty())
    for (int i : lists[0]) {
      g += grad[i];
      h += hess[i];
    }
  auto make_leaf = [&]() {
    TreeNode leaf;
    leaf.leaf_value = h > 0.0 ? g / h : 0.0;  // Newton step per leaf
    tree.nodes.push_back(leaf);
    return int(tree.nodes.size() - 1);
  };
  if (depth >= hp.max_depth) return make_leaf();
  SplitResult split = best_split(features_by_col, grad, lists, hp.min_samples_leaf);
  if (!split.found) return make_leaf();

  const std::vector<double>& split_col = features_by_col[split.feature];
  SortedLists left(lists.size()), right(lists.size());
  for (std::size_t f = 0; f < lists.size(); ++f) {
    left[f].reserve(lists[f].size());
    right[f].reserve(lists[f].size());
    for (int i : lists[f]) (split_col[i] < split.threshold ? left[f] : right[f]).push_back(i);
  }
  lists.clear();

  const int self = int(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes[self].feature = split.feature;
  tree.nodes[self].threshold = split.threshold;
  const int l = build_node(tree, features_by_col, grad, hess, std::move(left), depth + 1, hp);
  const int r = build_node(tree, features_by_col, grad, hess, std::move(right), depth + 1, hp);
  tree.nodes[self].left = l;
  tree.nodes[self].right = r;
  return self;
}

}  // namespace detail

inline double logistic_loss(double y, double raw) {
  // -[y log p + (1-y) log(1-p)] in the numerically stable form
  const double z = y > 0.5 ? raw : -raw;
  if (z > 0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

// Trains one boosted ensemble for one operation type. Deterministic given the
// hyperparameter seed: single threaded, stable sorts, strict tie-breaking.
inline GbdtModel train(const std::vector<TrainingSample>& samples, const Hyperparams& hp) {
  hp.validate();
  if (samples.size() < 2) throw std::invalid_argument("train: need at least 2 samples");
  const std::size_t dim = samples[0].features.size();
  std::size_t pos = 0, neg = 0;
  for (const auto& s : samples) {
    if (s.features.size() != dim)
      throw std::invalid_argument("train: inconsistent feature length (schema mismatch)");
    if (s.op != samples[0].op) throw std::invalid_argument("train: mixed operation types");
    for (double v : s.features)
      if (!std::isfinite(v)) throw std::invalid_argument("train: non-finite feature value");
    (s.label == 1 ? pos : neg)++;
  }
  if (pos == 0) throw std::invalid_argument("train: single-class data, class 1 missing");
  if (neg == 0) throw std::invalid_argument("train: single-class data, class 0 missing");

  const std::size_t n = samples.size();
  std::vector<std::vector<double>> cols(dim, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = double(samples[i].label);
    for (std::size_t f = 0; f < dim; ++f) cols[f][i] = samples[i].features[f];
  }

  GbdtModel model;
  model.op = samples[0].op;
  model.learning_rate = hp.learning_rate;
  model.feature_count = dim;
  const double prior = double(pos) / double(n);
  model.base_score = std::log(prior / (1.0 - prior));

  std::vector<double> raw(n, model.base_score);
  std::vector<double> grad(n), hess(n);
  std::mt19937_64 rng(hp.seed);
  std::vector<int> all_idx(n);
  std::iota(all_idx.begin(), all_idx.end(), 0);

  // Presort indices by each feature once; per-tree lists start from these.
  detail::SortedLists base_lists(dim);
  for (std::size_t f = 0; f < dim; ++f) {
    base_lists[f] = all_idx;
    std::sort(base_lists[f].begin(), base_lists[f].end(), [&](int a, int b) {
      if (cols[f][a] != cols[f][b]) return cols[f][a] < cols[f][b];
      return a < b;
    });
  }

  for (int t = 0; t < hp.num_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(raw[i]);
      grad[i] = y[i] - p;  // negative gradient of logistic loss
      hess[i] = std::max(p * (1.0 - p), 1e-12);
    }
    detail::SortedLists lists;
    if (hp.subsample_fraction < 1.0) {
      const std::size_t take = std::max<std::size_t>(2, std::size_t(double(n) * hp.subsample_fraction));
      std::vector<char> in_set(n, 0);
      std::vector<int> pool(all_idx);
      for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        in_set[pool[i]] = 1;
      }
      lists.resize(dim);
      for (std::size_t f = 0; f < dim; ++f)
        for (int i : base_lists[f])
          if (in_set[i]) lists[f].push_back(i);
    } else {
      lists = base_lists;
    }

    Tree tree;
    detail::build_node(tree, cols, grad, hess, std::move(lists), 0, hp);
    for (std::size_t i = 0; i < n; ++i) raw[i] += hp.learning_rate * tree.eval(samples[i].features);
    model.trees.push_back(std::move(tree));

    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) loss += logistic_loss(y[i], raw[i]);
    model.train_loss.push_back(loss / double(n));
  }
  return model;
}

inline nlohmann::json to_json(const GbdtModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& nd : t.nodes) {
      if (nd.is_leaf())
        nodes.push_back({{"leaf", nd.leaf_value}});
      else
        nodes.push_back(
            {{"feature", nd.feature}, {"threshold", nd.threshold}, {"left", nd.left}, {"right", nd.right}});
    }
    trees.push_back(std::move(nodes));
  }
  return {{"format_version", 1},
          {"schema_version", m.schema_version},
          {"feature_count", m.feature_count},
          {"op", to_string(m.op)},
          {"learning_rate", m.learning_rate},
          {"base_score", m.base_score},
          {"trees", std::move(trees)}};
}

inline std::string serialize(const GbdtModel& m) { return to_json(m).dump(); }

inline GbdtModel model_from_json(const nlohmann::json& j) {
  GbdtModel m;
  try {
    if (j.at("format_version").get<int>() != 1)
      throw std::invalid_argument("unsupported model format_version");
    m.schema_version = j.at("schema_version").get<int>();
    m.feature_count = j.at("feature_count").get<std::size_t>();
    m.op = op_from_string(j.at("op").get<std::string>());
    m.learning_rate = j.at("learning_rate").get<double>();
    m.base_score = j.at("base_score").get<double>();
    if (!std::isfinite(m.learning_rate) || !std::isfinite(m.base_score))
      throw std::invalid_argument("non-finite model scalars");
    const auto& trees = j.at("trees");
    for (std::size_t ti = 0; ti < trees.size(); ++ti) {
      Tree tree;
      const auto& nodes = trees[ti];
      for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
        const auto& nd = nodes[ni];
        TreeNode node;
        const std::string path = "trees[" + std::to_string(ti) + "].nodes[" + std::to_string(ni) + "]";
        if (nd.contains("leaf")) {
          node.leaf_value = nd.at("leaf").get<double>();
          if (!std::isfinite(node.leaf_value))
            throw std::invalid_argument("non-finite leaf value at " + path);
        } else {
          node.feature = nd.at("feature").get<int>();
          node.threshold = nd.at("threshold").get<double>();
          node.left = nd.at("left").get<int>();
          node.right = nd.at("right").get<int>();
          if (node.feature < 0 || std::size_t(node.feature) >= m.feature_count)
            throw std::invalid_argument("feature index out of schema range at " + path);
          if (!std::isfinite(node.threshold))
            throw std::invalid_argument("non-finite threshold at " + path);
          if (node.left < 0 || node.right < 0 || std::size_t(node.left) >= nodes.size() ||
              std::size_t(node.right) >= nodes.size() || node.left == int(ni) || node.right == int(ni))
            throw std::invalid_argument("invalid child index at " + path);
        }
        tree.nodes.push_back(node);
      }
      if (tree.nodes.empty()) throw std::invalid_argument("empty tree at index " + std::to_string(ti));
      m.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model json malformed: ") + e.what());
  }
  return m;
}

inline GbdtModel deserialize(const std::string& bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model parse error: ") + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const GbdtModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << serialize(m) << "\n";
}

inline GbdtModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

struct EvalReport {
  std::size_t n = 0;
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  double error_rate = 0.0;
};

inline EvalReport evaluate(const GbdtModel& m, const std::vector<TrainingSample>& samples,
                           double threshold = 0.5) {
  EvalReport r;
  r.n = samples.size();
  for (const auto& s : samples) {
    const int pred = m.predict_proba(s.features) > threshold ? 1 : 0;
    if (pred == 1 && s.label == 1) r.tp++;
    else if (pred == 0 && s.label == 0) r.tn++;
    else if (pred == 1 && s.label == 0) r.fp++;
    else r.fn++;
  }
  r.error_rate = r.n ? double(r.fp + r.fn) / double(r.n) : 0.0;
  return r;
}

}  // namespace dial
