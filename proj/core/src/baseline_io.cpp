#include "fedids/baseline_io.hpp"

#include <stdexcept>

namespace fedids {

using nlohmann::json;

namespace {

void expect_kind(const json& j, std::string_view kind) {
    if (!j.is_object() || !j.contains("kind")) throw std::invalid_argument("model file: missing \"kind\"");
    const auto found = j.at("kind").get<std::string>();
    if (found != kind) {
        throw std::invalid_argument("model file: expected kind \"" + std::string(kind) + "\", found \"" + found + "\"");
    }
}

json matrix_to_json(const FeatureMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

FeatureMatrix matrix_from_json(const json& j, Eigen::Index cols) {
    FeatureMatrix m(static_cast<Eigen::Index>(j.size()), cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument("model file: ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from_json(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

json to_json(const TfidfVocabulary& vocab) {
    return {{"kind", "tfidf"},
            {"n_documents", vocab.n_documents()},
            {"terms", vocab.terms()},
            {"document_frequency", vocab.document_frequency()},
            {"idf", vocab.idf()}};
}

TfidfVocabulary tfidf_from_json(const json& j) {
    expect_kind(j, "tfidf");
    return TfidfVocabulary(j.at("terms").get<std::vector<std::string>>(),
                           j.at("document_frequency").get<std::vector<std::uint64_t>>(),
                           j.at("idf").get<std::vector<double>>(), j.at("n_documents").get<std::uint64_t>());
}

json to_json(const OvaModel& model) {
    json scorers = json::array();
    for (const auto& s : model.scorers) scorers.push_back({{"w", vector_to_json(s.w)}, {"b", s.b}});
    return {{"kind", model.kind == ScorerKind::logistic ? "ova_logistic" : "ova_svm"}, {"scorers", scorers}};
}

OvaModel ova_from_json(const json& j) {
    OvaModel m;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "ova_logistic") m.kind = ScorerKind::logistic;
    else if (kind == "ova_svm") m.kind = ScorerKind::svm;
    else throw std::invalid_argument("model file: \"" + kind + "\" is not a one-vs-all model");
    for (const auto& s : j.at("scorers")) m.scorers.push_back({vector_from_json(s.at("w")), s.at("b").get<double>()});
    return m;
}

json to_json(const KnnModel& model) {
    json reps = json::array();
    for (const auto& r : model.representatives) {
        reps.push_back({{"source_index", r.source_index},
                        {"center", std::vector<double>(r.center.data(), r.center.data() + r.center.size())},
                        {"label", r.label},
                        {"radius", r.radius},
                        {"members", r.members}});
    }
    return {{"kind", "knn"},
            {"k", model.k},
            {"dimension", model.points.cols()},
            {"points", matrix_to_json(model.points)},
            {"labels", model.labels},
            {"representatives", reps}};
}

KnnModel knn_from_json(const json& j) {
    expect_kind(j, "knn");
    const auto cols = j.at("dimension").get<Eigen::Index>();
    auto m = make_knn(matrix_from_json(j.at("points"), cols), j.at("labels").get<std::vector<int>>(),
                      j.at("k").get<std::size_t>());
    for (const auto& r : j.at("representatives")) {
        Representative rep;
        rep.source_index = r.at("source_index").get<std::size_t>();
        const auto center = r.at("center").get<std::vector<double>>();
        rep.center = Eigen::Map<const FeatureVector>(center.data(), static_cast<Eigen::Index>(center.size()));
        rep.label = r.at("label").get<int>();
        rep.radius = r.at("radius").get<double>();
        rep.members = r.at("members").get<std::vector<std::size_t>>();
        m.representatives.push_back(std::move(rep));
    }
    return m;
}

json to_json(const Forest& forest) {
    json trees = json::array();
    for (const auto& t : forest.trees) {
        json nodes = json::array();
        for (const auto& n : t.nodes) {
            json node = {{"histogram", n.histogram}};
            if (!n.is_leaf()) {
                node["feature"] = n.feature;
                node["threshold"] = n.threshold;
                node["left"] = n.left;
                node["right"] = n.right;
            }
            if (!n.sampled_features.empty()) node["sampled_features"] = n.sampled_features;
            nodes.push_back(std::move(node));
        }
        trees.push_back(std::move(nodes));
    }
    return {{"kind", "forest"},
            {"n_classes", forest.n_classes},
            {"n_features", forest.n_features},
            {"m_try", forest.m_try},
            {"seed", forest.seed},
            {"trees", trees}};
}

Forest forest_from_json(const json& j) {
    expect_kind(j, "forest");
    Forest f;
    f.n_classes = j.at("n_classes").get<std::size_t>();
    f.n_features = j.at("n_features").get<std::size_t>();
    f.m_try = j.at("m_try").get<std::size_t>();
    f.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("trees")) {
        DecisionTree tree;
        for (const auto& n : t) {
            TreeNode node;
            node.histogram = n.at("histogram").get<std::vector<std::uint32_t>>();
            if (n.contains("feature")) {
                node.feature = n.at("feature").get<std::int32_t>();
                node.threshold = n.at("threshold").get<double>();
                node.left = n.at("left").get<std::uint32_t>();
                node.right = n.at("right").get<std::uint32_t>();
            }
            if (n.contains("sampled_features")) {
                node.sampled_features = n.at("sampled_features").get<std::vector<std::uint32_t>>();
            }
            tree.nodes.push_back(std::move(node));
        }
        for (const auto& node : tree.nodes) {
            if (!node.is_leaf() && (node.left >= tree.nodes.size() || node.right >= tree.nodes.size() ||
                                    static_cast<std::size_t>(node.feature) >= f.n_features)) {
                throw std::invalid_argument("model file: forest node points outside the tree");
            }
        }
        f.trees.push_back(std::move(tree));
    }
    return f;
}

std::string BaselineModel::kind() const {
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, OvaModel>) {
                return m.kind == ScorerKind::logistic ? "ova_logistic" : "ova_svm";
            } else if constexpr (std::is_same_v<T, KnnModel>) {
                return "knn";
            } else {
                return "forest";
            }
        },
        classifier);
}

std::vector<int> BaselineModel::predict(std::span<const std::string> texts) const {
    const auto X = tfidf_matrix(features, texts);
    return std::visit(
        [&](const auto& m) -> std::vector<int> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, KnnModel>) {
                return knn_predict(m, X);
            } else {
                return m.predict(X);
            }
        },
        classifier);
}

json to_json(const BaselineModel& model) {
    auto j = std::visit([](const auto& m) { return to_json(m); }, model.classifier);
    j["features"] = to_json(model.features);
    j["labels"] = model.labels;
    return j;
}

BaselineModel baseline_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind")) throw std::invalid_argument("model file: missing \"kind\"");
    const auto kind = j.at("kind").get<std::string>();
    BaselineModel m;
    m.features = tfidf_from_json(j.at("features"));
    m.labels = j.at("labels").get<std::vector<int>>();
    if (kind == "ova_logistic" || kind == "ova_svm") m.classifier = ova_from_json(j);
    else if (kind == "knn") m.classifier = knn_from_json(j);
    else if (kind == "forest") m.classifier = forest_from_json(j);
    else throw std::invalid_argument("model file: unknown kind \"" + kind + "\"");
    return m;
}

}  // namespace fedids
