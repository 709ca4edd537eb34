#include "fedids/metrics.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <stdexcept>

namespace fedids {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes) : n_(n_classes), counts_(n_classes * n_classes, 0) {}

void ConfusionMatrix::add(std::size_t t, std::size_t p, std::uint64_t count) {
    if (t >= n_ || p >= n_) throw std::out_of_range("ConfusionMatrix::add: class out of range");
    counts_[t * n_ + p] += count;
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t s = 0;
    for (const auto c : counts_) s += c;
    return s;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t s = 0;
    for (std::size_t c = 0; c < n_; ++c) s += (*this)(c, c);
    return s;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t t) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < n_; ++p) s += (*this)(t, p);
    return s;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t p) const {
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < n_; ++t) s += (*this)(t, p);
    return s;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes) {
    if (y_true.size() != y_pred.size()) {
        throw std::invalid_argument("confusion: " + std::to_string(y_true.size()) + " true labels but " +
                                    std::to_string(y_pred.size()) + " predictions");
    }
    ConfusionMatrix cm(n_classes);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const auto t = y_true[i], p = y_pred[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes || static_cast<std::size_t>(p) >= n_classes) {
            throw std::invalid_argument("confusion: class out of range at position " + std::to_string(i));
        }
        cm.add(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }
    return cm;
}

double f1_score(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ClassificationReport report(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw std::invalid_argument("report: empty confusion matrix");
    ClassificationReport r;
    const auto n = cm.n_classes();
    double weighted_p = 0.0, weighted_f1 = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        ClassMetrics m;
        m.support = cm.row_sum(c);
        m.precision = ratio(cm(c, c), cm.column_sum(c));
        m.recall = ratio(cm(c, c), m.support);
        m.f1 = f1_score(m.precision, m.recall);
        r.macro.precision += m.precision;
        r.macro.recall += m.recall;
        r.macro.f1 += m.f1;
        weighted_p += m.precision * static_cast<double>(m.support);
        weighted_f1 += m.f1 * static_cast<double>(m.support);
        r.classes.push_back(m);
    }
    r.accuracy = ratio(cm.trace(), total);
    r.macro.precision /= static_cast<double>(n);
    r.macro.recall /= static_cast<double>(n);
    r.macro.f1 /= static_cast<double>(n);
    r.macro.support = total;
    r.weighted.precision = weighted_p / static_cast<double>(total);
    // sum_c support_c * (tp_c / support_c) / total == trace / total
    r.weighted.recall = r.accuracy;
    r.weighted.f1 = weighted_f1 / static_cast<double>(total);
    r.weighted.support = total;
    return r;
}

std::string render_report(const ClassificationReport& r, const LabelMapping& mapping) {
    if (mapping.size() != r.classes.size()) {
        throw std::invalid_argument("render_report: mapping has " + std::to_string(mapping.size()) +
                                    " labels, report has " + std::to_string(r.classes.size()) + " classes");
    }
    std::string out = fmt::format("{:<14}{:>10}{:>10}{:>10}{:>10}\n", "Type", "Precision", "Recall", "F1-Score", "Support");
    const auto row = [&](const std::string& name, const ClassMetrics& m) {
        out += fmt::format("{:<14}{:>10}{:>10}{:>10}{:>10}\n", name, format_fixed2(m.precision),
                           format_fixed2(m.recall), format_fixed2(m.f1), m.support);
    };
    // LabelMapping keeps raw labels ascending, so index order is label order.
    for (std::size_t c = 0; c < r.classes.size(); ++c) {
        row(std::to_string(mapping.to_raw(static_cast<int>(c))), r.classes[c]);
    }
    std::uint64_t total = 0;
    for (const auto& m : r.classes) total += m.support;
    out += "\n";
    out += fmt::format("{:<14}{:>10}{:>10}{:>10}{:>10}\n", "accuracy", "", "", format_fixed2(r.accuracy), total);
    row("macro avg", r.macro);
    row("weighted avg", r.weighted);
    return out;
}

long accuracy_percent(double accuracy) { return std::lround(accuracy * 100.0); }

std::string render_comparison(std::span<const ComparisonRow> rows) {
    std::size_t width = 6;
    for (const auto& r : rows) width = std::max(width, r.model.size());
    std::string out = fmt::format("{:<{}}  {:>8}\n", "Models", width, "Accuracy");
    for (const auto& r : rows) out += fmt::format("{:<{}}  {:>8}\n", r.model, width, accuracy_percent(r.accuracy));
    return out;
}

nlohmann::json to_json(const ClassificationReport& r, const LabelMapping& mapping) {
    const auto metrics = [](const ClassMetrics& m) {
        return nlohmann::json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
    };
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t c = 0; c < r.classes.size(); ++c) {
        auto j = metrics(r.classes[c]);
        j["label"] = mapping.to_raw(static_cast<int>(c));
        classes.push_back(std::move(j));
    }
    return {{"classes", classes}, {"accuracy", r.accuracy}, {"macro", metrics(r.macro)}, {"weighted", metrics(r.weighted)}};
}

}  // namespace fedids
