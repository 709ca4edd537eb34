#include "fedids/tfidf.hpp"

#include "fedids/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fedids {

TfidfVocabulary::TfidfVocabulary(std::vector<std::string> terms, std::vector<std::uint64_t> document_frequency,
                                 std::vector<double> idf, std::uint64_t n_documents)
    : terms_(std::move(terms)), df_(std::move(document_frequency)), idf_(std::move(idf)), n_documents_(n_documents) {
    if (df_.size() != terms_.size() || idf_.size() != terms_.size()) {
        throw std::invalid_argument("tfidf vocabulary: terms, df and idf differ in length");
    }
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (!index_.emplace(terms_[i], i).second) {
            throw std::invalid_argument("tfidf vocabulary: duplicate term '" + terms_[i] + "'");
        }
    }
}

std::optional<std::size_t> TfidfVocabulary::index_of(std::string_view term) const {
    const auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

double smoothed_idf(std::uint64_t n_documents, std::uint64_t df) {
    return std::log((1.0 + static_cast<double>(n_documents)) / (1.0 + static_cast<double>(df))) + 1.0;
}

TfidfVocabulary fit_tfidf(std::span<const std::string> corpus, std::size_t max_features) {
    if (corpus.empty()) throw std::invalid_argument("fit_tfidf: empty corpus");
    struct Stats {
        std::uint64_t count = 0;
        std::uint64_t df = 0;
    };
    std::map<std::string, Stats, std::less<>> stats;
    for (const auto& doc : corpus) {
        auto tokens = surface_tokenize(doc);
        for (const auto& t : tokens) ++stats[t].count;
        std::sort(tokens.begin(), tokens.end());
        tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
        for (const auto& t : tokens) ++stats[t].df;
    }
    std::vector<std::pair<std::string, Stats>> ranked(stats.begin(), stats.end());
    // Map order is lexicographic, so a stable sort by count keeps ties lexicographic.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second.count > b.second.count; });
    if (ranked.size() > max_features) ranked.resize(max_features);

    std::vector<std::string> terms;
    std::vector<std::uint64_t> df;
    std::vector<double> idf;
    for (auto& [term, s] : ranked) {
        terms.push_back(term);
        df.push_back(s.df);
        idf.push_back(smoothed_idf(corpus.size(), s.df));
    }
    return TfidfVocabulary(std::move(terms), std::move(df), std::move(idf), corpus.size());
}

FeatureVector SparseVector::to_dense() const {
    FeatureVector dense = FeatureVector::Zero(static_cast<Eigen::Index>(dimension));
    for (std::size_t i = 0; i < indices.size(); ++i) dense[indices[i]] = values[i];
    return dense;
}

double SparseVector::norm() const {
    double sq = 0.0;
    for (const auto v : values) sq += v * v;
    return std::sqrt(sq);
}

SparseVector tfidf_transform(const TfidfVocabulary& vocab, std::string_view text) {
    std::map<std::uint32_t, std::uint64_t> counts;
    for (const auto& t : surface_tokenize(text)) {
        if (const auto i = vocab.index_of(t)) ++counts[static_cast<std::uint32_t>(*i)];
    }
    SparseVector v;
    v.dimension = vocab.size();
    for (const auto& [i, n] : counts) {
        v.indices.push_back(i);
        v.values.push_back(static_cast<double>(n) * vocab.idf()[i]);
    }
    const double norm = v.norm();
    if (norm > 0.0) {
        for (auto& x : v.values) x /= norm;
    }
    return v;
}

FeatureMatrix tfidf_matrix(const TfidfVocabulary& vocab, std::span<const std::string> texts) {
    FeatureMatrix m = FeatureMatrix::Zero(static_cast<Eigen::Index>(texts.size()),
                                          static_cast<Eigen::Index>(vocab.size()));
    for (std::size_t r = 0; r < texts.size(); ++r) {
        const auto v = tfidf_transform(vocab, texts[r]);
        for (std::size_t i = 0; i < v.indices.size(); ++i) {
            m(static_cast<Eigen::Index>(r), v.indices[i]) = v.values[i];
        }
    }
    return m;
}

}  // namespace fedids
