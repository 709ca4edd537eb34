#pragma once

#include "fedids/tfidf.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace fedids {

/// A point whose same-class neighbourhood of the given radius was kept.
struct Representative {
    std::size_t source_index = 0;
    FeatureVector center;
    int label = 0;
    double radius = 0.0;
    /// Training points inside the ball, ascending.
    std::vector<std::size_t> members;
};

struct KnnModel {
    FeatureMatrix points;
    std::vector<int> labels;
    std::size_t k = 5;
    /// When non-empty, prediction uses these instead of `points`.
    std::vector<Representative> representatives;

    std::size_t size() const noexcept { return labels.size(); }
};

KnnModel make_knn(FeatureMatrix points, std::vector<int> labels, std::size_t k = 5);

/// Majority class among the k nearest stored points (Euclidean). Equal
/// distances go to the lower stored index, tied votes to the smaller class.
/// With representatives the point goes to the representative whose ball
/// boundary is nearest, i.e. the smallest distance - radius (ties to the
/// earlier representative).
int knn_predict(const KnnModel& model, const FeatureVector& x, std::size_t k);
int knn_predict(const KnnModel& model, const FeatureVector& x);
std::vector<int> knn_predict(const KnnModel& model, const FeatureMatrix& X);

/// Greedy cover by largest same-class neighbourhoods. Each point's ball grows
/// by ascending distance (ties by index) and stops before the first
/// other-class point or a same-class point tied in distance with one. Until
/// every point is covered, the uncovered point whose ball holds the most
/// uncovered points (ties to the lower index) becomes a representative with
/// radius equal to its farthest member.
std::vector<Representative> knn_condense(const FeatureMatrix& vectors, std::span<const int> classes);

}  // namespace fedids
