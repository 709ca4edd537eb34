#pragma once

#include "fedids/veremi.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedids {

/// counts(t, p): examples of true class t predicted as p.
class ConfusionMatrix {
  public:
    explicit ConfusionMatrix(std::size_t n_classes = 0);

    std::size_t n_classes() const noexcept { return n_; }
    std::uint64_t operator()(std::size_t t, std::size_t p) const { return counts_[t * n_ + p]; }
    void add(std::size_t t, std::size_t p, std::uint64_t count = 1);

    std::uint64_t total() const;
    std::uint64_t trace() const;
    std::uint64_t row_sum(std::size_t t) const;
    std::uint64_t column_sum(std::size_t p) const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

  private:
    std::size_t n_;
    std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;

    friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct ClassificationReport {
    std::vector<ClassMetrics> classes;  // by class index
    double accuracy = 0.0;
    ClassMetrics macro;
    ClassMetrics weighted;

    friend bool operator==(const ClassificationReport&, const ClassificationReport&) = default;
};

/// 2PR / (P + R), or 0 when P + R = 0.
double f1_score(double precision, double recall);

/// Every 0/0 ratio is taken as 0. The weighted recall is reduced to
/// trace / total, so it equals the accuracy exactly.
ClassificationReport report(const ConfusionMatrix& cm);

/// Type / Precision / Recall / F1-Score / Support, rows by raw label, two decimals,
/// followed by accuracy and the two averages.
std::string render_report(const ClassificationReport& report, const LabelMapping& mapping);

struct ComparisonRow {
    std::string model;
    double accuracy = 0.0;
};

/// Model name and accuracy as a whole percentage (half away from zero).
std::string render_comparison(std::span<const ComparisonRow> rows);
long accuracy_percent(double accuracy);

/// {classes: [{label, precision, recall, f1, support}], accuracy, macro, weighted}
nlohmann::json to_json(const ClassificationReport& report, const LabelMapping& mapping);

}  // namespace fedids
