#include "tep/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tep::classify {

namespace {

void check_dimensions(const std::vector<Sample>& samples) {
  if (samples.empty()) throw std::runtime_error("empty training set");
  const std::size_t d = samples.front().x.size();
  for (const auto& s : samples) {
    if (s.x.size() != d) throw std::runtime_error("inconsistent feature dimension");
    if (s.y != 0 && s.y != 1) throw std::runtime_error("labels must be 0 or 1");
    for (const double v : s.x)
      if (!std::isfinite(v)) throw std::runtime_error("non-finite feature value");
  }
}

double entropy(std::size_t c0, std::size_t c1) {
  const double n = static_cast<double>(c0 + c1);
  double h = 0.0;
  for (const std::size_t c : {c0, c1}) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

int majority(std::size_t c0, std::size_t c1) { return c1 > c0 ? 1 : 0; }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// (distance, index) ordering: lower distance wins, lower index breaks ties
bool better(const std::pair<double, std::size_t>& a,
            const std::pair<double, std::size_t>& b) {
  return a.first < b.first || (a.first == b.first && a.second < b.second);
}

}  // namespace

// ---------------------------------------------------------------------------
// TreeModel

TreeModel TreeModel::train(const std::vector<Sample>& samples, const TreeParams& params,
                           Rng* rng) {
  std::vector<std::size_t> indices(samples.size());
  std::iota(indices.begin(), indices.end(), 0);
  return train_on(samples, indices, params, rng);
}

TreeModel TreeModel::train_on(const std::vector<Sample>& samples,
                              const std::vector<std::size_t>& indices,
                              const TreeParams& params, Rng* rng) {
  check_dimensions(samples);
  if (indices.empty()) throw std::runtime_error("empty training set");
  if (params.min_leaf < 1) throw std::runtime_error("min_leaf must be >= 1");
  const std::size_t d = samples.front().x.size();
  const std::size_t mtry =
      (params.mtry <= 0 || static_cast<std::size_t>(params.mtry) >= d)
          ? d
          : static_cast<std::size_t>(params.mtry);
  if (mtry < d && rng == nullptr)
    throw std::runtime_error("feature subsampling requires an rng");

  TreeModel model;
  model.n_features_ = d;
  std::vector<std::size_t> feature_pool(d);
  std::iota(feature_pool.begin(), feature_pool.end(), 0);

  // depth-first, left before right, so any rng consumption is ordered
  struct Frame {
    std::vector<std::size_t> idx;
    int node;
  };
  const auto make_node = [&](std::size_t count) {
    model.nodes_.push_back({});
    model.nodes_.back().count = count;
    return static_cast<int>(model.nodes_.size() - 1);
  };

  std::vector<Frame> stack;
  stack.push_back({indices, make_node(indices.size())});
  const auto min_leaf = static_cast<std::size_t>(params.min_leaf);

  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    auto& idx = frame.idx;

    std::size_t c0 = 0, c1 = 0;
    for (const std::size_t i : idx) (samples[i].y == 0 ? c0 : c1)++;
    Node& node = model.nodes_[static_cast<std::size_t>(frame.node)];
    node.predicted = majority(c0, c1);

    if (c0 == 0 || c1 == 0 || idx.size() < 2 * min_leaf) continue;  // leaf

    // candidate features, ascending so gain ties resolve to the lowest index
    std::span<const std::size_t> features;
    std::vector<std::size_t> subset;
    if (mtry == d) {
      features = feature_pool;
    } else {
      subset = feature_pool;  // partial Fisher-Yates, then sorted
      for (std::size_t i = 0; i < mtry; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng->below(subset.size() - i));
        std::swap(subset[i], subset[j]);
      }
      subset.resize(mtry);
      std::sort(subset.begin(), subset.end());
      features = subset;
    }

    const double parent_h = entropy(c0, c1);
    const auto n = static_cast<double>(idx.size());
    double best_gain = 0.0;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    bool found = false;

    std::vector<std::size_t> order(idx);
    for (const std::size_t f : features) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].x[f] < samples[b].x[f];
      });
      std::size_t l0 = 0, l1 = 0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        (samples[order[i]].y == 0 ? l0 : l1)++;
        const double v = samples[order[i]].x[f];
        const double next = samples[order[i + 1]].x[f];
        if (v == next) continue;
        const std::size_t n_left = i + 1, n_right = order.size() - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double gain = parent_h - (static_cast<double>(n_left) * entropy(l0, l1) +
                                        static_cast<double>(n_right) *
                                            entropy(c0 - l0, c1 - l1)) /
                                           n;
        if (gain > best_gain) {
          double threshold = v + (next - v) / 2.0;
          if (threshold >= next) threshold = v;  // midpoint collapsed in fp
          best_gain = gain;
          best_feature = f;
          best_threshold = threshold;
          found = true;
        }
      }
    }
    if (!found) continue;  // best gain <= 0 or no legal split: stays a leaf

    std::vector<std::size_t> left_idx, right_idx;
    for (const std::size_t i : idx)
      (samples[i].x[best_feature] <= best_threshold ? left_idx : right_idx).push_back(i);

    Node& parent = model.nodes_[static_cast<std::size_t>(frame.node)];
    parent.leaf = false;
    parent.feature = static_cast<int>(best_feature);
    parent.threshold = best_threshold;
    const int left = make_node(left_idx.size());
    const int right = make_node(right_idx.size());
    model.nodes_[static_cast<std::size_t>(frame.node)].left = left;
    model.nodes_[static_cast<std::size_t>(frame.node)].right = right;
    // right is pushed first so the left child is processed (and consumes
    // rng draws) first
    stack.push_back({std::move(right_idx), right});
    stack.push_back({std::move(left_idx), left});
  }
  return model;
}

int TreeModel::predict(std::span<const double> x) const {
  if (x.size() != n_features_)
    throw std::runtime_error("predict: feature dimension mismatch");
  std::size_t node = 0;
  while (!nodes_[node].leaf) {
    const Node& n = nodes_[node];
    node = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold
                                        ? n.left
                                        : n.right);
  }
  return nodes_[node].predicted;
}

std::size_t TreeModel::n_leaves() const {
  std::size_t count = 0;
  for (const auto& n : nodes_) count += n.leaf ? 1 : 0;
  return count;
}

std::vector<std::size_t> TreeModel::leaf_counts() const {
  std::vector<std::size_t> counts;
  for (const auto& n : nodes_)
    if (n.leaf) counts.push_back(n.count);
  return counts;
}

// ---------------------------------------------------------------------------
// KnnModel

KnnModel KnnModel::fit(std::vector<Sample> samples, const KnnParams& params) {
  check_dimensions(samples);
  if (params.k < 1) throw std::runtime_error("k must be >= 1");
  if (params.leaf_size < 1) throw std::runtime_error("leaf_size must be >= 1");
  KnnModel model;
  model.params_ = params;
  model.n_features_ = samples.front().x.size();
  model.samples_ = std::move(samples);
  std::vector<std::size_t> indices(model.samples_.size());
  std::iota(indices.begin(), indices.end(), 0);
  model.root_ = model.build(std::move(indices));
  return model;
}

int KnnModel::build(std::vector<std::size_t> indices) {
  Node node;
  node.center.assign(n_features_, 0.0);
  for (const std::size_t i : indices)
    for (std::size_t f = 0; f < n_features_; ++f) node.center[f] += samples_[i].x[f];
  for (double& v : node.center) v /= static_cast<double>(indices.size());
  double max_sq = 0.0;
  for (const std::size_t i : indices)
    max_sq = std::max(max_sq, squared_distance(samples_[i].x, node.center));
  node.radius = std::sqrt(max_sq);

  if (indices.size() <= static_cast<std::size_t>(params_.leaf_size)) {
    node.points = std::move(indices);
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size() - 1);
  }

  // split dimension: maximum spread, lower index on ties
  std::size_t split_dim = 0;
  double best_spread = -1.0;
  for (std::size_t f = 0; f < n_features_; ++f) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const std::size_t i : indices) {
      lo = std::min(lo, samples_[i].x[f]);
      hi = std::max(hi, samples_[i].x[f]);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      split_dim = f;
    }
  }
  const std::size_t mid = indices.size() / 2;
  std::nth_element(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(mid),
                   indices.end(), [&](std::size_t a, std::size_t b) {
                     const double va = samples_[a].x[split_dim];
                     const double vb = samples_[b].x[split_dim];
                     return va < vb || (va == vb && a < b);
                   });
  std::vector<std::size_t> left(indices.begin(),
                                indices.begin() + static_cast<std::ptrdiff_t>(mid));
  std::vector<std::size_t> right(indices.begin() + static_cast<std::ptrdiff_t>(mid),
                                 indices.end());
  const int left_id = build(std::move(left));
  const int right_id = build(std::move(right));
  node.left = left_id;
  node.right = right_id;
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size() - 1);
}

void KnnModel::search(int node_id, std::span<const double> q,
                      std::vector<std::pair<double, std::size_t>>& heap,
                      std::size_t k) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  const double center_dist = std::sqrt(squared_distance(q, node.center));
  if (heap.size() == k && center_dist - node.radius > heap.front().first)
    return;  // ball cannot contain anything better than the current worst

  if (node.left < 0) {
    for (const std::size_t i : node.points) {
      const std::pair<double, std::size_t> cand{
          std::sqrt(squared_distance(q, samples_[i].x)), i};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), better);
      } else if (better(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), better);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), better);
      }
    }
    return;
  }
  const Node& l = nodes_[static_cast<std::size_t>(node.left)];
  const Node& r = nodes_[static_cast<std::size_t>(node.right)];
  const double dl = squared_distance(q, l.center);
  const double dr = squared_distance(q, r.center);
  if (dl <= dr) {
    search(node.left, q, heap, k);
    search(node.right, q, heap, k);
  } else {
    search(node.right, q, heap, k);
    search(node.left, q, heap, k);
  }
}

std::vector<std::pair<double, std::size_t>> KnnModel::nearest(std::span<const double> q,
                                                              int k) const {
  if (q.size() != n_features_)
    throw std::runtime_error("query: feature dimension mismatch");
  const std::size_t k_eff = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 1)),
                                                  samples_.size());
  std::vector<std::pair<double, std::size_t>> heap;
  heap.reserve(k_eff);
  search(root_, q, heap, k_eff);
  std::sort(heap.begin(), heap.end(), better);
  return heap;
}

int KnnModel::predict(std::span<const double> x) const {
  const auto neighbors = nearest(x, params_.k);
  std::size_t zero0 = 0, zero1 = 0;
  for (const auto& [dist, idx] : neighbors) {
    if (dist == 0.0) (samples_[idx].y == 0 ? zero0 : zero1)++;
  }
  if (zero0 + zero1 > 0) return majority(zero0, zero1);
  double score0 = 0.0, score1 = 0.0;
  for (const auto& [dist, idx] : neighbors)
    (samples_[idx].y == 0 ? score0 : score1) += 1.0 / dist;
  return score1 > score0 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// ForestModel

ForestModel ForestModel::train(const std::vector<Sample>& samples,
                               const ForestParams& params, std::uint64_t seed) {
  check_dimensions(samples);
  if (params.n_trees < 1) throw std::runtime_error("n_trees must be >= 1");
  const std::size_t n = samples.size();
  const std::size_t d = samples.front().x.size();
  TreeParams tree_params;
  tree_params.min_leaf = params.min_leaf;
  tree_params.mtry = params.mtry > 0
                         ? params.mtry
                         : static_cast<int>(std::floor(std::sqrt(static_cast<double>(d))));

  ForestModel model;
  model.trees_.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> indices(n);
    if (params.bootstrap) {
      for (auto& i : indices) i = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(indices.begin(), indices.end(), 0);
    }
    model.trees_.push_back(TreeModel::train_on(samples, indices, tree_params, &rng));
  }
  return model;
}

ForestModel ForestModel::from_trees(std::vector<TreeModel> trees) {
  if (trees.empty()) throw std::runtime_error("empty forest");
  ForestModel model;
  model.trees_ = std::move(trees);
  return model;
}

int ForestModel::predict(std::span<const double> x) const {
  if (trees_.empty()) throw std::runtime_error("empty forest");
  std::size_t votes0 = 0, votes1 = 0;
  for (const auto& tree : trees_) (tree.predict(x) == 0 ? votes0 : votes1)++;
  return majority(votes0, votes1);
}

// ---------------------------------------------------------------------------

ClassifierKind classifier_from_string(const std::string& s) {
  if (s == "dt") return ClassifierKind::dt;
  if (s == "knn") return ClassifierKind::knn;
  if (s == "rf") return ClassifierKind::rf;
  throw std::runtime_error("unknown classifier \"" + s + "\" (expected dt|knn|rf)");
}

const char* to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::dt: return "dt";
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::rf: return "rf";
  }
  return "?";
}

int ClassifierSpec::train_predict(const std::vector<Sample>& train,
                                  std::span<const double> x, std::uint64_t seed) const {
  switch (kind) {
    case ClassifierKind::dt:
      return TreeModel::train(train, tree).predict(x);
    case ClassifierKind::knn:
      return KnnModel::fit(train, knn).predict(x);
    case ClassifierKind::rf:
      return ForestModel::train(train, forest, seed).predict(x);
  }
  throw std::runtime_error("unknown classifier kind");
}

}  // namespace tep::classify
