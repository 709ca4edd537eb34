#pragma once

// One-vs-all linear classifiers: logistic regression and a Pegasos-trained
// linear SVM whose result is also exposed in dual (support-vector) form.

#include "fedids/tfidf.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fedids {

/// L / (1 + exp(-k (x - x0)))
struct LogisticCurve {
    double L = 1.0;
    double k = 1.0;
    double x0 = 0.0;
};

/// Evaluated piecewise by the sign of k (x - x0), so neither tail overflows.
double logistic_eval(const LogisticCurve& curve, double x);

/// score(x) = <w, x> + b
struct LinearScorer {
    Eigen::VectorXd w;
    double b = 0.0;

    double score(const FeatureVector& x) const { return x.dot(w.transpose()) + b; }
};

enum class ScorerKind { logistic, svm };

/// One binary scorer per class; predicts the highest-scoring class, ties to the smallest index.
struct OvaModel {
    ScorerKind kind = ScorerKind::logistic;
    std::vector<LinearScorer> scorers;

    std::size_t n_classes() const noexcept { return scorers.size(); }
    std::vector<double> scores(const FeatureVector& x) const;
    int predict(const FeatureVector& x) const;
    std::vector<int> predict(const FeatureMatrix& X) const;
};

struct LogisticOptions {
    double learning_rate = 10.0;
    std::size_t epochs = 20000;
    double l2 = 1e-6;
};

/// Full-batch gradient descent on the mean L2-regularized log-loss from zero
/// weights. The bias is not regularized. A class with no positive examples
/// trains on all-negative labels.
LinearScorer train_binary_logistic(const FeatureMatrix& X, std::span<const int> positive,
                                   const LogisticOptions& options);

/// Per-class probability sigmoid(score) under the fitted scorer.
double logistic_probability(const LinearScorer& scorer, const FeatureVector& x);

OvaModel train_ova_logistic(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes,
                            const LogisticOptions& options);

/// f(x) = sum_i alpha_i y_i K(x_i, x) + b with the linear kernel.
struct SvmDecisionFunction {
    std::vector<double> alpha;
    std::vector<int> labels;  // +1 / -1
    FeatureMatrix vectors;    // one stored x_i per row
    double bias = 0.0;

    std::size_t size() const noexcept { return alpha.size(); }
};

double linear_kernel(const FeatureVector& u, const FeatureVector& v);
double svm_decision(const SvmDecisionFunction& f, const FeatureVector& x);

/// w = sum_i alpha_i y_i x_i, b unchanged.
LinearScorer collapse(const SvmDecisionFunction& f);

struct SvmOptions {
    double lambda = 1e-6;
    std::size_t epochs = 300;
    std::uint64_t seed = 0;
};

struct LinearSvm {
    SvmDecisionFunction dual;
    LinearScorer primal;
};

/// Pegasos on lambda/2 |(w, b)|^2 + mean hinge loss; the bias is an extra
/// constant feature. Each epoch visits a seeded permutation of the data with
/// step 1/(lambda t). After T steps, alpha_i = (margin violations of i) / (lambda T).
LinearSvm train_linear_svm(const FeatureMatrix& X, std::span<const int> y, const SvmOptions& options);

/// Scorer c gets per-class seed derive_seed(seed, c).
OvaModel train_ova_svm(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes,
                       const SvmOptions& options, std::vector<SvmDecisionFunction>* duals = nullptr);

}  // namespace fedids
