#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tep/rng.hpp"

// From-scratch classifiers. Tie rules are fixed everywhere for determinism:
// class votes and score ties resolve to class 0, split ties to the lower
// feature index then lower threshold, and neighbor distance ties to the
// lower training index.

namespace tep::classify {

struct Sample {
  std::vector<double> x;
  int y = 0;  // 0 or 1
};

// ---------------------------------------------------------------------------
// Decision tree (entropy criterion)

struct TreeParams {
  int min_leaf = 10;
  int mtry = -1;  // features considered per node; -1 = all
};

class TreeModel {
 public:
  // Greedy recursive partitioning. Candidate thresholds are midpoints
  // between consecutive distinct sorted values; a node becomes a leaf when
  // pure, when no split keeps min_leaf on both sides, or when the best
  // information gain is <= 0. rng is only consulted when params.mtry
  // restricts the per-node feature subset.
  static TreeModel train(const std::vector<Sample>& samples, const TreeParams& params,
                         Rng* rng = nullptr);
  static TreeModel train_on(const std::vector<Sample>& samples,
                            const std::vector<std::size_t>& indices,
                            const TreeParams& params, Rng* rng = nullptr);

  // x[feature] <= threshold descends left
  int predict(std::span<const double> x) const;

  std::size_t n_leaves() const;
  // training sample count of every leaf, for invariant checks
  std::vector<std::size_t> leaf_counts() const;

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    int predicted = 0;
    std::size_t count = 0;
    bool leaf = true;
  };
  std::vector<Node> nodes_;
  std::size_t n_features_ = 0;
};

// ---------------------------------------------------------------------------
// k-nearest neighbors over an exact ball tree

struct KnnParams {
  int k = 7;
  int leaf_size = 10;
};

class KnnModel {
 public:
  // Ball tree split: dimension of maximum spread, at the median. The index
  // is an exact accelerator; leaf_size never changes results.
  static KnnModel fit(std::vector<Sample> samples, const KnnParams& params);

  // (distance, training index) pairs, ascending by (distance, index)
  std::vector<std::pair<double, std::size_t>> nearest(std::span<const double> q,
                                                      int k) const;

  // inverse-distance weighted vote; an exact hit (distance 0) short-circuits
  // to the majority among zero-distance neighbors
  int predict(std::span<const double> x) const;

  int k() const { return params_.k; }

 private:
  struct Node {
    std::vector<double> center;
    double radius = 0.0;
    int left = -1, right = -1;
    std::vector<std::size_t> points;  // leaf only
  };
  int build(std::vector<std::size_t> indices);
  void search(int node, std::span<const double> q,
              std::vector<std::pair<double, std::size_t>>& heap, std::size_t k) const;

  std::vector<Sample> samples_;
  std::vector<Node> nodes_;
  int root_ = -1;
  KnnParams params_;
  std::size_t n_features_ = 0;
};

// ---------------------------------------------------------------------------
// Random forest (majority vote over entropy trees)

struct ForestParams {
  int n_trees = 100;
  int min_leaf = 10;
  int mtry = -1;  // -1 = floor(sqrt(d))
  bool bootstrap = true;
};

class ForestModel {
 public:
  // Tree t trains on a bootstrap resample drawn from the substream
  // derive_seed(seed, t), so forests are reproducible independent of how
  // training is scheduled.
  static ForestModel train(const std::vector<Sample>& samples, const ForestParams& params,
                           std::uint64_t seed);

  // ensemble over already-trained trees
  static ForestModel from_trees(std::vector<TreeModel> trees);

  // strict majority; tie -> class 0
  int predict(std::span<const double> x) const;

  std::size_t n_trees() const { return trees_.size(); }

 private:
  std::vector<TreeModel> trees_;
};

// ---------------------------------------------------------------------------

enum class ClassifierKind { dt, knn, rf };

ClassifierKind classifier_from_string(const std::string& s);
const char* to_string(ClassifierKind kind);

// Resolved classifier choice plus hyperparameters, as selected on the CLI.
struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::rf;
  TreeParams tree;      // dt
  KnnParams knn;        // knn
  ForestParams forest;  // rf

  // trains on `train` and classifies x; seed feeds the forest substreams
  int train_predict(const std::vector<Sample>& train, std::span<const double> x,
                    std::uint64_t seed) const;
};

}  // namespace tep::classify
