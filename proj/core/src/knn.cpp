#include "fedids/knn.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fedids {

KnnModel make_knn(FeatureMatrix points, std::vector<int> labels, std::size_t k) {
    if (static_cast<std::size_t>(points.rows()) != labels.size()) {
        throw std::invalid_argument("make_knn: point and label counts differ");
    }
    if (k == 0) throw std::invalid_argument("make_knn: k must be at least 1");
    KnnModel m;
    m.points = std::move(points);
    m.labels = std::move(labels);
    m.k = k;
    return m;
}

int knn_predict(const KnnModel& model, const FeatureVector& x, std::size_t k) {
    if (!model.representatives.empty()) {
        std::size_t best = 0;
        double best_gap = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < model.representatives.size(); ++r) {
            const auto& rep = model.representatives[r];
            const double gap = (rep.center - x).norm() - rep.radius;
            if (gap < best_gap) {
                best_gap = gap;
                best = r;
            }
        }
        return model.representatives[best].label;
    }
    const std::size_t n = model.size();
    if (n == 0) throw std::invalid_argument("knn_predict: empty model");
    if (k == 0 || k > n) {
        throw std::invalid_argument("knn_predict: k = " + std::to_string(k) + " with " + std::to_string(n) +
                                    " stored points");
    }
    if (model.points.cols() != x.size()) throw std::invalid_argument("knn_predict: dimension mismatch");

    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = {(model.points.row(static_cast<Eigen::Index>(i)) - x).squaredNorm(), i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::map<int, std::size_t> votes;
    for (std::size_t j = 0; j < k; ++j) ++votes[model.labels[dist[j].second]];
    int best = votes.begin()->first;
    std::size_t best_votes = 0;
    for (const auto& [label, count] : votes) {
        if (count > best_votes) {
            best = label;
            best_votes = count;
        }
    }
    return best;
}

int knn_predict(const KnnModel& model, const FeatureVector& x) { return knn_predict(model, x, model.k); }

std::vector<int> knn_predict(const KnnModel& model, const FeatureMatrix& X) {
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        out[static_cast<std::size_t>(r)] = knn_predict(model, FeatureVector(X.row(r)));
    }
    return out;
}

std::vector<Representative> knn_condense(const FeatureMatrix& vectors, std::span<const int> classes) {
    const auto n = static_cast<std::size_t>(vectors.rows());
    if (n == 0) throw std::invalid_argument("knn_condense: empty input");
    if (classes.size() != n) throw std::invalid_argument("knn_condense: vector and class counts differ");

    // balls[i]: same-class points around i in ascending distance, plus the radius.
    std::vector<std::vector<std::size_t>> balls(n);
    std::vector<double> radius(n, 0.0);
    std::vector<std::pair<double, std::size_t>> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = vectors.row(static_cast<Eigen::Index>(i));
        for (std::size_t j = 0; j < n; ++j) {
            order[j] = {(vectors.row(static_cast<Eigen::Index>(j)) - xi).norm(), j};
        }
        std::sort(order.begin(), order.end());
        double stop = std::numeric_limits<double>::infinity();
        for (const auto& [d, j] : order) {
            if (classes[j] != classes[i]) {
                stop = d;
                break;
            }
        }
        for (const auto& [d, j] : order) {
            if (d >= stop) break;
            balls[i].push_back(j);
            radius[i] = d;
        }
        // An exact duplicate of another class leaves only the point itself.
        if (balls[i].empty()) balls[i].push_back(i);
    }

    std::vector<bool> covered(n, false);
    std::size_t remaining = n;
    std::vector<Representative> reps;
    while (remaining > 0) {
        std::size_t best = n;
        std::size_t best_gain = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (covered[i]) continue;
            std::size_t gain = 0;
            for (const auto j : balls[i]) gain += covered[j] ? 0 : 1;
            if (gain > best_gain) {
                best_gain = gain;
                best = i;
            }
        }
        Representative rep;
        rep.source_index = best;
        rep.center = vectors.row(static_cast<Eigen::Index>(best));
        rep.label = classes[best];
        rep.radius = radius[best];
        rep.members = balls[best];
        std::sort(rep.members.begin(), rep.members.end());
        for (const auto j : rep.members) {
            if (!covered[j]) {
                covered[j] = true;
                --remaining;
            }
        }
        reps.push_back(std::move(rep));
    }
    return reps;
}

}  // namespace fedids
