#pragma once

// End-to-end runs: data preparation, FL-BERT federation, the TF-IDF
// baselines, evaluation on the shared held-out split and report files.

#include "fedids/baseline_io.hpp"
#include "fedids/config.hpp"
#include "fedids/federation.hpp"
#include "fedids/metrics.hpp"
#include "fedids/tokenizer.hpp"
#include "fedids/veremi.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fedids {

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> contents);
std::string read_file(const std::filesystem::path& path);

/// JSONL: {"text": ..., "label": raw, "class": index} per line.
void write_labeled(std::ostream& out, std::span<const LabeledText> examples);
std::vector<LabeledText> read_labeled(std::istream& in, const LabelMapping& mapping);

nlohmann::json to_json(const LabelMapping& mapping);
LabelMapping label_mapping_from_json(const nlohmann::json& j);

/// Synthetic generation or file parsing, then the optional resampling.
std::vector<MessageRecord> load_records(const ExperimentConfig& config);

struct PreparedData {
    LabelMapping mapping;
    DatasetSplit split;
};

PreparedData prepare_data(const ExperimentConfig& config);

/// Tokenizer vocabulary from the training texts.
Vocabulary build_vocabulary(const TokenizerConfig& config, std::span<const LabeledText> train);

std::vector<TrainingExample> to_training_examples(const Vocabulary& vocab, std::size_t max_len,
                                                  std::span<const LabeledText> examples);

/// Encoder shape for a vocabulary and class count.
EncoderConfig encoder_for(const ExperimentConfig& config, const Vocabulary& vocab, std::size_t n_classes);

struct FlBertModel {
    Vocabulary vocab = Vocabulary::build({}, Vocabulary::kReserved + 1);
    EncoderConfig encoder;
    ParameterSet weights;
    std::vector<int> labels;
};

/// vocab.txt, model.bin (wire weight format) and model.json (shape and labels).
void save_fl_bert(const FlBertModel& model, const std::filesystem::path& dir);
FlBertModel load_fl_bert(const std::filesystem::path& dir);

std::vector<int> predict_fl_bert(const FlBertModel& model, std::span<const LabeledText> examples);

struct FlBertRun {
    /// Weights as stored in the checkpoint (single precision).
    FlBertModel model;
    std::vector<RoundLog> logs;
};

/// `test` is only used for per-round accuracy when config.eval_rounds is set.
FlBertRun train_fl_bert(const ExperimentConfig& config, std::span<const LabeledText> train,
                        const LabelMapping& mapping, std::span<const LabeledText> test = {});

/// kind: rf, svm, lr or knn.
BaselineModel train_baseline(const std::string& kind, const BaselineConfig& config,
                             std::span<const LabeledText> train, const LabelMapping& mapping);

std::string_view display_name(std::string_view kind);

ClassificationReport evaluate_predictions(std::span<const int> predicted, std::span<const LabeledText> truth,
                                          std::size_t n_classes);

struct ModelEvaluation {
    std::string kind;  // rf, svm, lr, knn or fl_bert
    ClassificationReport report;
};

struct ExperimentSummary {
    LabelMapping mapping;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::vector<ModelEvaluation> models;  // comparison order: rf, svm, lr, knn, fl_bert
};

std::vector<ComparisonRow> comparison_rows(std::span<const ModelEvaluation> models);

/// Writes config.toml, fl_bert/, baselines/, reports/, comparison.txt and
/// summary.json under config.out_dir.
ExperimentSummary run_experiment(const ExperimentConfig& config);

}  // namespace fedids
