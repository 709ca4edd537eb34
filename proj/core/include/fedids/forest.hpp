#pragma once

#include "fedids/tfidf.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fedids {

struct TreeNode {
    /// -1 for a leaf.
    std::int32_t feature = -1;
    double threshold = 0.0;  // x[feature] <= threshold goes left
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    /// Training samples (with bootstrap multiplicity) per class reaching this node.
    std::vector<std::uint32_t> histogram;
    /// Features examined at this node, in draw order.
    std::vector<std::uint32_t> sampled_features;

    bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    const TreeNode& leaf_for(const FeatureVector& x) const;
    int predict(const FeatureVector& x) const;
};

struct ForestOptions {
    std::size_t n_trees = 100;
    /// 0 means unlimited.
    std::size_t max_depth = 0;
    /// 0 means ceil(sqrt(feature count)).
    std::size_t m_try = 0;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct Forest {
    std::vector<DecisionTree> trees;
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
    std::size_t m_try = 0;
    std::uint64_t seed = 0;

    /// Majority over per-tree predictions, ties to the smallest class.
    int predict(const FeatureVector& x) const;
    std::vector<int> predict(const FeatureMatrix& X) const;
};

double gini_impurity(std::span<const std::uint32_t> histogram);

/// Tree t draws from Rng(seed + t). At each node features are drawn without
/// replacement; the best Gini split over the first m_try is taken, and if none
/// of them can split the node the draw continues until one can. Thresholds are
/// midpoints between consecutive distinct values. A node stops at purity,
/// max_depth, fewer than two samples, or when no feature varies.
Forest train_random_forest(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes,
                           const ForestOptions& options);

DecisionTree train_decision_tree(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes,
                                 std::size_t m_try, std::size_t max_depth, bool bootstrap, std::uint64_t seed);

}  // namespace fedids
