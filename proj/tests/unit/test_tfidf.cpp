#include "fedids/rng.hpp"
#include "fedids/tfidf.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <doctest.h>

#include <cmath>

using namespace fedids;

TEST_CASE("fit: ranking, ties and idf") {
    const std::vector<std::string> corpus{"a a b", "a c"};
    const auto v = fit_tfidf(corpus, 2);
    CHECK(v.terms() == std::vector<std::string>{"a", "b"});
    CHECK(v.document_frequency() == std::vector<std::uint64_t>{2, 1});
    CHECK(v.n_documents() == 2);
    CHECK(v.idf()[0] == 1.0);
    CHECK(v.idf()[1] == doctest::Approx(std::log(3.0 / 2.0) + 1).epsilon(1e-15));
    CHECK_FALSE(v.index_of("c").has_value());
    CHECK(v.index_of("b") == 1);
    CHECK_THROWS(fit_tfidf(std::span<const std::string>{}, 10));

    const std::vector<std::string> everywhere{"x y", "x", "x z z"};
    const auto e = fit_tfidf(everywhere, 10);
    CHECK(e.idf()[*e.index_of("x")] == 1.0);
    for (std::size_t i = 0; i < e.size(); ++i) CHECK(e.idf()[i] == smoothed_idf(3, e.document_frequency()[i]));
}

TEST_CASE("fit caps at max_features and is permutation invariant") {
    Rng rng(1);
    std::vector<std::string> corpus;
    for (int i = 0; i < 1000; ++i) {
        std::string s;
        for (int k = 0; k < 12; ++k) {
            std::string word;
            for (std::size_t l = 0, n = 1 + rng.below(3); l < n; ++l) word += static_cast<char>('a' + rng.below(12));
            s += word + " " + std::to_string(rng.below(10)) + " ";
        }
        corpus.push_back(s);
    }
    const auto full = fit_tfidf(corpus, 100000);
    CHECK(full.size() > 1000);
    const auto capped = fit_tfidf(corpus);
    CHECK(capped.size() == 1000);
    for (std::size_t i = 0; i < 1000; ++i) CHECK(capped.terms()[i] == full.terms()[i]);
    for (int k = 0; k < 3; ++k) {
        rng.shuffle(std::span<std::string>(corpus));
        CHECK(fit_tfidf(corpus) == capped);
    }
}

TEST_CASE("transform: worked example and norms") {
    using Dec = boost::multiprecision::cpp_dec_float_50;
    const TfidfVocabulary v({"a", "b"}, {1, 1}, {1.0, 2.0}, 1);
    const auto s = tfidf_transform(v, "a b b");
    const auto d = s.to_dense();
    const Dec root = sqrt(Dec(17));
    CHECK(std::fabs(d[0] - (Dec(1) / root).convert_to<double>()) < 1e-16);
    CHECK(std::fabs(d[1] - (Dec(4) / root).convert_to<double>()) < 1e-16);

    const auto zero = tfidf_transform(v, "zzz 9");
    CHECK(zero.indices.empty());
    CHECK(zero.norm() == 0.0);
    CHECK(zero.to_dense().size() == 2);

    const auto unit = tfidf_transform(v, "b");
    CHECK(unit.indices == std::vector<std::uint32_t>{1});
    CHECK(unit.values == std::vector<double>{1.0});

    Rng rng(2);
    std::vector<std::string> corpus;
    for (int i = 0; i < 100; ++i) {
        std::string t;
        for (int k = 0; k < 20; ++k) t += static_cast<char>("0123456789.-abc "[rng.below(16)]);
        corpus.push_back(t);
    }
    const auto fitted = fit_tfidf(corpus, 8);
    const auto X = tfidf_matrix(fitted, corpus);
    CHECK(X.rows() == 100);
    CHECK(X.cols() == 8);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        const double n = X.row(r).norm();
        CHECK((std::fabs(n - 1.0) < 1e-12 || n == 0.0));
        const auto sv = tfidf_transform(fitted, corpus[static_cast<std::size_t>(r)]);
        CHECK(std::is_sorted(sv.indices.begin(), sv.indices.end()));
        CHECK((sv.to_dense() - X.row(r)).cwiseAbs().maxCoeff() == 0.0);
    }
}
