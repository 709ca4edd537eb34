#pragma once

// Experiment configuration and its file form: a flat TOML subset with
// [section] headers, `key = value` lines, # comments, and values that are
// strings, integers, floats, booleans or single-line arrays of those.
// Keys live under data., tokenizer., model., fed., baseline. and synth.

#include "fedids/encoder.hpp"
#include "fedids/federation.hpp"
#include "fedids/forest.hpp"
#include "fedids/linear_models.hpp"
#include "fedids/synthetic.hpp"
#include "fedids/veremi.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedids {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct DataConfig {
    /// "synthetic" or "file".
    std::string source = "synthetic";
    std::string path;
    RecordFormat format = RecordFormat::csv;
    bool resample = false;
    /// Empty means the VeReMi balanced-subset targets.
    ResampleTargets targets;
    bool strict = true;
    std::uint64_t resample_seed = 0;
    double split_ratio = 0.8;
    std::uint64_t split_seed = 0;
};

struct TokenizerConfig {
    std::size_t max_len = 64;
    std::size_t vocab_size = 512;
};

struct BaselineConfig {
    /// Any of rf, svm, lr, knn, in run order.
    std::vector<std::string> models{"rf", "svm", "lr", "knn"};
    std::size_t max_features = 1000;
    LogisticOptions lr;
    SvmOptions svm;
    std::size_t knn_k = 5;
    bool knn_condense = false;
    ForestOptions rf;
};

struct ExperimentConfig {
    DataConfig data;
    SyntheticSpec synth;
    TokenizerConfig tokenizer;
    /// vocab_size, max_len and n_classes are filled in from the data.
    EncoderConfig model;
    FederationConfig fed;
    bool fl_bert = true;
    /// Evaluate the global model on the test set after every round.
    bool eval_rounds = true;
    BaselineConfig baseline;
    std::string out_dir = "out";

    /// Sets every seed in the configuration.
    void override_seeds(std::uint64_t seed);
    void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical file form; parse_config(to_toml(c)) reproduces c.
std::string to_toml(const ExperimentConfig& config);

}  // namespace fedids
