#include "fedids/linear_models.hpp"

#include "fedids/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fedids {

namespace {

void check_dataset(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes, const char* who) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) {
        throw std::invalid_argument(std::string(who) + ": " + std::to_string(X.rows()) + " rows but " +
                                    std::to_string(y.size()) + " labels");
    }
    if (X.rows() == 0) throw std::invalid_argument(std::string(who) + ": empty training set");
    for (const int c : y) {
        if (c < 0 || static_cast<std::size_t>(c) >= n_classes) {
            throw std::invalid_argument(std::string(who) + ": class " + std::to_string(c) + " out of range");
        }
    }
}

}  // namespace

double logistic_eval(const LogisticCurve& curve, double x) {
    // Split on the sign so exp never sees a large positive argument.
    const double t = curve.k * (x - curve.x0);
    if (t >= 0.0) return curve.L / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return curve.L * e / (1.0 + e);
}

double logistic_probability(const LinearScorer& scorer, const FeatureVector& x) {
    return logistic_eval({}, scorer.score(x));
}

std::vector<double> OvaModel::scores(const FeatureVector& x) const {
    std::vector<double> s;
    s.reserve(scorers.size());
    for (const auto& scorer : scorers) s.push_back(scorer.score(x));
    return s;
}

int OvaModel::predict(const FeatureVector& x) const {
    if (scorers.empty()) throw std::logic_error("OvaModel::predict: no scorers");
    int best = 0;
    double best_score = scorers[0].score(x);
    for (std::size_t c = 1; c < scorers.size(); ++c) {
        const double s = scorers[c].score(x);
        if (s > best_score) {
            best = static_cast<int>(c);
            best_score = s;
        }
    }
    return best;
}

std::vector<int> OvaModel::predict(const FeatureMatrix& X) const {
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index r = 0; r < X.rows(); ++r) out[static_cast<std::size_t>(r)] = predict(FeatureVector(X.row(r)));
    return out;
}

LinearScorer train_binary_logistic(const FeatureMatrix& X, std::span<const int> positive,
                                   const LogisticOptions& options) {
    if (static_cast<std::size_t>(X.rows()) != positive.size() || X.rows() == 0) {
        throw std::invalid_argument("train_binary_logistic: rows and labels must match and be non-empty");
    }
    const auto n = X.rows();
    Eigen::VectorXd target(n);
    for (Eigen::Index i = 0; i < n; ++i) target[i] = positive[static_cast<std::size_t>(i)] ? 1.0 : 0.0;

    LinearScorer s{Eigen::VectorXd::Zero(X.cols()), 0.0};
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        Eigen::VectorXd z = X * s.w;
        Eigen::VectorXd residual(n);
        for (Eigen::Index i = 0; i < n; ++i) residual[i] = logistic_eval({}, z[i] + s.b) - target[i];
        const Eigen::VectorXd grad_w = (X.transpose() * residual) * inv_n + options.l2 * s.w;
        const double grad_b = residual.sum() * inv_n;
        s.w -= options.learning_rate * grad_w;
        s.b -= options.learning_rate * grad_b;
    }
    return s;
}

OvaModel train_ova_logistic(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes,
                            const LogisticOptions& options) {
    check_dataset(X, y, n_classes, "train_ova_logistic");
    OvaModel model;
    model.kind = ScorerKind::logistic;
    std::vector<int> positive(y.size());
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t i = 0; i < y.size(); ++i) positive[i] = y[i] == static_cast<int>(c);
        model.scorers.push_back(train_binary_logistic(X, positive, options));
    }
    return model;
}

double linear_kernel(const FeatureVector& u, const FeatureVector& v) {
    if (u.size() != v.size()) throw std::invalid_argument("linear_kernel: dimension mismatch");
    return u.dot(v);
}

double svm_decision(const SvmDecisionFunction& f, const FeatureVector& x) {
    if (f.size() != 0 && f.vectors.cols() != x.size()) {
        throw std::invalid_argument("svm_decision: query has " + std::to_string(x.size()) +
                                    " features, support vectors have " + std::to_string(f.vectors.cols()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        sum += f.alpha[i] * f.labels[i] * linear_kernel(f.vectors.row(static_cast<Eigen::Index>(i)), x);
    }
    return sum + f.bias;
}

LinearScorer collapse(const SvmDecisionFunction& f) {
    LinearScorer s{Eigen::VectorXd::Zero(f.vectors.cols()), f.bias};
    for (std::size_t i = 0; i < f.size(); ++i) {
        s.w += (f.alpha[i] * f.labels[i]) * f.vectors.row(static_cast<Eigen::Index>(i)).transpose();
    }
    return s;
}

LinearSvm train_linear_svm(const FeatureMatrix& X, std::span<const int> y, const SvmOptions& options) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (n != y.size() || n == 0) throw std::invalid_argument("train_linear_svm: rows and labels must match and be non-empty");
    bool has_pos = false, has_neg = false;
    for (const int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw std::invalid_argument("train_linear_svm: labels must be +1 or -1");
    }
    if (!has_pos || !has_neg) throw std::invalid_argument("train_linear_svm: both classes must be present");
    if (!(options.lambda > 0.0) || options.epochs == 0) {
        throw std::invalid_argument("train_linear_svm: lambda must be positive and epochs at least 1");
    }

    Rng rng(options.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::uint64_t> violations(n, 0);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(X.cols());
    double b = 0.0;
    std::uint64_t t = 0;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (const auto i : order) {
            ++t;
            const double eta = 1.0 / (options.lambda * static_cast<double>(t));
            const auto xi = X.row(static_cast<Eigen::Index>(i));
            const double margin = y[i] * (xi.dot(w.transpose()) + b);
            const double shrink = 1.0 - eta * options.lambda;
            w *= shrink;
            b *= shrink;
            if (margin < 1.0) {
                w += (eta * y[i]) * xi.transpose();
                b += eta * y[i];
                ++violations[i];
            }
        }
    }

    LinearSvm svm;
    const double scale = 1.0 / (options.lambda * static_cast<double>(t));
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < n; ++i) {
        if (violations[i] > 0) support.push_back(i);
    }
    svm.dual.vectors.resize(static_cast<Eigen::Index>(support.size()), X.cols());
    double bias = 0.0;
    for (std::size_t s = 0; s < support.size(); ++s) {
        const auto i = support[s];
        const double a = static_cast<double>(violations[i]) * scale;
        svm.dual.alpha.push_back(a);
        svm.dual.labels.push_back(y[i]);
        svm.dual.vectors.row(static_cast<Eigen::Index>(s)) = X.row(static_cast<Eigen::Index>(i));
        bias += a * y[i];
    }
    // The constant feature's weight: its kernel contribution is folded into b.
    svm.dual.bias = bias;
    svm.primal = collapse(svm.dual);
    return svm;
}

OvaModel train_ova_svm(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes,
                       const SvmOptions& options, std::vector<SvmDecisionFunction>* duals) {
    check_dataset(X, y, n_classes, "train_ova_svm");
    OvaModel model;
    model.kind = ScorerKind::svm;
    if (duals) duals->clear();
    std::vector<int> signs(y.size());
    for (std::size_t c = 0; c < n_classes; ++c) {
        bool any_pos = false, any_neg = false;
        for (std::size_t i = 0; i < y.size(); ++i) {
            signs[i] = y[i] == static_cast<int>(c) ? 1 : -1;
            (signs[i] > 0 ? any_pos : any_neg) = true;
        }
        if (!any_pos || !any_neg) {
            // Degenerate one-sided scorer: a constant that always (or never) wins.
            model.scorers.push_back({Eigen::VectorXd::Zero(X.cols()), any_pos ? 1.0 : -1.0});
            if (duals) duals->push_back({{}, {}, FeatureMatrix(0, X.cols()), any_pos ? 1.0 : -1.0});
            continue;
        }
        auto opts = options;
        opts.seed = derive_seed(options.seed, c);
        auto svm = train_linear_svm(X, signs, opts);
        model.scorers.push_back(svm.primal);
        if (duals) duals->push_back(std::move(svm.dual));
    }
    return model;
}

}  // namespace fedids
