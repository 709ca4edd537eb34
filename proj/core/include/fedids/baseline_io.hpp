#pragma once

// JSON model files. Every object carries a "kind" discriminator:
// tfidf, ova_logistic, ova_svm, knn or forest.

#include "fedids/forest.hpp"
#include "fedids/knn.hpp"
#include "fedids/linear_models.hpp"
#include "fedids/tfidf.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <variant>

namespace fedids {

nlohmann::json to_json(const TfidfVocabulary& vocab);
nlohmann::json to_json(const OvaModel& model);
nlohmann::json to_json(const KnnModel& model);
nlohmann::json to_json(const Forest& forest);

TfidfVocabulary tfidf_from_json(const nlohmann::json& j);
OvaModel ova_from_json(const nlohmann::json& j);
KnnModel knn_from_json(const nlohmann::json& j);
Forest forest_from_json(const nlohmann::json& j);

using Classifier = std::variant<OvaModel, KnnModel, Forest>;

/// A TF-IDF front end plus one classifier, stored as the classifier's object
/// with the vectorizer under "features".
struct BaselineModel {
    TfidfVocabulary features;
    Classifier classifier;
    /// Raw attacker label per class index.
    std::vector<int> labels;

    std::string kind() const;
    std::vector<int> predict(std::span<const std::string> texts) const;
};

nlohmann::json to_json(const BaselineModel& model);
BaselineModel baseline_from_json(const nlohmann::json& j);

}  // namespace fedids
