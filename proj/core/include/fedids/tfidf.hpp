#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fedids {

/// Dense row-major feature matrix: one example per row.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FeatureVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

class TfidfVocabulary {
  public:
    TfidfVocabulary() = default;
    /// Takes the parts as given; terms must be unique and the arrays aligned.
    TfidfVocabulary(std::vector<std::string> terms, std::vector<std::uint64_t> document_frequency,
                    std::vector<double> idf, std::uint64_t n_documents);

    const std::vector<std::string>& terms() const noexcept { return terms_; }
    const std::vector<std::uint64_t>& document_frequency() const noexcept { return df_; }
    const std::vector<double>& idf() const noexcept { return idf_; }
    std::uint64_t n_documents() const noexcept { return n_documents_; }
    std::size_t size() const noexcept { return terms_.size(); }
    std::optional<std::size_t> index_of(std::string_view term) const;

    friend bool operator==(const TfidfVocabulary& a, const TfidfVocabulary& b) {
        return a.terms_ == b.terms_ && a.df_ == b.df_ && a.idf_ == b.idf_ && a.n_documents_ == b.n_documents_;
    }

  private:
    std::vector<std::string> terms_;
    std::vector<std::uint64_t> df_;
    std::vector<double> idf_;
    std::uint64_t n_documents_ = 0;
    std::unordered_map<std::string, std::size_t> index_;
};

/// ln((1 + n_documents) / (1 + df)) + 1
double smoothed_idf(std::uint64_t n_documents, std::uint64_t df);

/// Terms from surface_tokenize, ranked by total corpus count (ties
/// lexicographic), top `max_features` kept in rank order.
TfidfVocabulary fit_tfidf(std::span<const std::string> corpus, std::size_t max_features = 1000);

struct SparseVector {
    std::size_t dimension = 0;
    std::vector<std::uint32_t> indices;  // ascending
    std::vector<double> values;

    FeatureVector to_dense() const;
    double norm() const;
};

/// Raw count times idf per term, then L2-normalized; all-zero stays zero.
SparseVector tfidf_transform(const TfidfVocabulary& vocab, std::string_view text);

FeatureMatrix tfidf_matrix(const TfidfVocabulary& vocab, std::span<const std::string> texts);

}  // namespace fedids
