#include "fedids/forest.hpp"

#include "fedids/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fedids {

namespace {

int argmax_counts(std::span<const std::uint32_t> counts) {
    int best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
        if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    }
    return best;
}

struct Split {
    bool found = false;
    std::uint32_t feature = 0;
    double threshold = 0.0;
    double gain = -std::numeric_limits<double>::infinity();
};

class TreeBuilder {
  public:
    TreeBuilder(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes, std::size_t m_try,
                std::size_t max_depth, Rng& rng)
        : X_(X), y_(y), n_classes_(n_classes), m_try_(m_try), max_depth_(max_depth), rng_(rng) {}

    DecisionTree build(std::vector<std::size_t> samples) {
        DecisionTree tree;
        grow(tree, samples, 0);
        return tree;
    }

  private:
    std::uint32_t grow(DecisionTree& tree, std::vector<std::size_t>& samples, std::size_t depth) {
        const auto index = static_cast<std::uint32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        std::vector<std::uint32_t> hist(n_classes_, 0);
        for (const auto s : samples) ++hist[static_cast<std::size_t>(y_[s])];
        tree.nodes[index].histogram = hist;

        const bool pure = std::count_if(hist.begin(), hist.end(), [](auto c) { return c > 0; }) <= 1;
        if (pure || samples.size() < 2 || (max_depth_ != 0 && depth >= max_depth_)) return index;

        std::vector<std::uint32_t> drawn;
        const auto split = choose_split(samples, hist, drawn);
        tree.nodes[index].sampled_features = std::move(drawn);
        if (!split.found) return index;

        std::vector<std::size_t> left, right;
        for (const auto s : samples) {
            (X_(static_cast<Eigen::Index>(s), split.feature) <= split.threshold ? left : right).push_back(s);
        }
        samples.clear();
        samples.shrink_to_fit();
        tree.nodes[index].feature = static_cast<std::int32_t>(split.feature);
        tree.nodes[index].threshold = split.threshold;
        const auto l = grow(tree, left, depth + 1);
        const auto r = grow(tree, right, depth + 1);
        tree.nodes[index].left = l;
        tree.nodes[index].right = r;
        return index;
    }

    Split choose_split(const std::vector<std::size_t>& samples, const std::vector<std::uint32_t>& hist,
                       std::vector<std::uint32_t>& drawn) {
        const auto d = static_cast<std::size_t>(X_.cols());
        std::vector<std::uint32_t> pool(d);
        std::iota(pool.begin(), pool.end(), 0u);
        const double parent = gini_impurity(hist);
        const auto n = static_cast<double>(samples.size());

        Split best;
        std::vector<std::pair<double, int>> column(samples.size());
        std::vector<std::uint32_t> left(n_classes_);
        for (std::size_t draw = 0; draw < d; ++draw) {
            if (draw >= m_try_ && best.found) break;
            // Partial Fisher-Yates: the next feature is uniform over the undrawn ones.
            const auto j = draw + static_cast<std::size_t>(rng_.below(d - draw));
            std::swap(pool[draw], pool[j]);
            const auto f = pool[draw];
            drawn.push_back(f);

            for (std::size_t i = 0; i < samples.size(); ++i) {
                column[i] = {X_(static_cast<Eigen::Index>(samples[i]), f), y_[samples[i]]};
            }
            std::sort(column.begin(), column.end());
            std::fill(left.begin(), left.end(), 0u);
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                ++left[static_cast<std::size_t>(column[i].second)];
                if (!(column[i].first < column[i + 1].first)) continue;
                const double nl = static_cast<double>(i + 1);
                const double nr = n - nl;
                double gl = 1.0, gr = 1.0;
                for (std::size_t c = 0; c < n_classes_; ++c) {
                    const double pl = left[c] / nl;
                    const double pr = (hist[c] - left[c]) / nr;
                    gl -= pl * pl;
                    gr -= pr * pr;
                }
                const double gain = parent - (nl / n) * gl - (nr / n) * gr;
                if (gain > best.gain) {
                    const double a = column[i].first, b = column[i + 1].first;
                    double mid = a + (b - a) / 2.0;
                    if (!(mid < b)) mid = a;
                    best = {true, f, mid, gain};
                }
            }
        }
        return best;
    }

    const FeatureMatrix& X_;
    std::span<const int> y_;
    std::size_t n_classes_;
    std::size_t m_try_;
    std::size_t max_depth_;
    Rng& rng_;
};

}  // namespace

double gini_impurity(std::span<const std::uint32_t> histogram) {
    double total = 0.0;
    for (const auto c : histogram) total += c;
    if (total == 0.0) return 0.0;
    double g = 1.0;
    for (const auto c : histogram) {
        const double p = c / total;
        g -= p * p;
    }
    return g;
}

const TreeNode& DecisionTree::leaf_for(const FeatureVector& x) const {
    if (nodes.empty()) throw std::logic_error("DecisionTree: empty tree");
    const TreeNode* node = &nodes[0];
    while (!node->is_leaf()) {
        node = &nodes[x[node->feature] <= node->threshold ? node->left : node->right];
    }
    return *node;
}

int DecisionTree::predict(const FeatureVector& x) const { return argmax_counts(leaf_for(x).histogram); }

int Forest::predict(const FeatureVector& x) const {
    if (trees.empty()) throw std::logic_error("Forest: no trees");
    std::vector<std::uint32_t> votes(n_classes, 0);
    for (const auto& t : trees) ++votes[static_cast<std::size_t>(t.predict(x))];
    return argmax_counts(votes);
}

std::vector<int> Forest::predict(const FeatureMatrix& X) const {
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index r = 0; r < X.rows(); ++r) out[static_cast<std::size_t>(r)] = predict(FeatureVector(X.row(r)));
    return out;
}

DecisionTree train_decision_tree(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes,
                                 std::size_t m_try, std::size_t max_depth, bool bootstrap, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(X.rows());
    Rng rng(seed);
    std::vector<std::size_t> samples(n);
    if (bootstrap) {
        for (auto& s : samples) s = static_cast<std::size_t>(rng.below(n));
    } else {
        std::iota(samples.begin(), samples.end(), 0);
    }
    return TreeBuilder(X, y, n_classes, m_try, max_depth, rng).build(std::move(samples));
}

Forest train_random_forest(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes,
                           const ForestOptions& options) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (n == 0) throw std::invalid_argument("train_random_forest: empty input");
    if (y.size() != n) throw std::invalid_argument("train_random_forest: row and label counts differ");
    if (n_classes == 0) throw std::invalid_argument("train_random_forest: no classes");
    for (const int c : y) {
        if (c < 0 || static_cast<std::size_t>(c) >= n_classes) {
            throw std::invalid_argument("train_random_forest: class " + std::to_string(c) + " out of range");
        }
    }
    const auto d = static_cast<std::size_t>(X.cols());
    if (d == 0) throw std::invalid_argument("train_random_forest: no features");
    const std::size_t m_try =
        options.m_try != 0 ? options.m_try : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    if (m_try > d) {
        throw std::invalid_argument("train_random_forest: m_try = " + std::to_string(m_try) + " exceeds " +
                                    std::to_string(d) + " features");
    }
    if (options.n_trees == 0) throw std::invalid_argument("train_random_forest: n_trees must be at least 1");

    Forest forest;
    forest.n_classes = n_classes;
    forest.n_features = d;
    forest.m_try = m_try;
    forest.seed = options.seed;
    for (std::size_t t = 0; t < options.n_trees; ++t) {
        forest.trees.push_back(
            train_decision_tree(X, y, n_classes, m_try, options.max_depth, options.bootstrap, options.seed + t));
    }
    return forest;
}

}  // namespace fedids
