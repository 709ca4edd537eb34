#include "fedids/experiment.hpp"

#include "fedids/wire.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <unistd.h>

namespace fedids {

using nlohmann::json;
namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto tmp = fs::path(path.string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(contents.data()), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(contents.data()), contents.size()));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_labeled(std::ostream& out, std::span<const LabeledText> examples) {
    for (const auto& e : examples) {
        out << json{{"text", e.text}, {"label", e.raw_label}, {"class", e.class_index}}.dump() << '\n';
    }
}

std::vector<LabeledText> read_labeled(std::istream& in, const LabelMapping& mapping) {
    std::vector<LabeledText> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            LabeledText e;
            e.text = j.at("text").get<std::string>();
            e.raw_label = j.at("label").get<int>();
            e.class_index = mapping.to_index(e.raw_label);
            if (j.contains("class") && j.at("class").get<int>() != e.class_index) {
                throw std::invalid_argument("class index disagrees with the label mapping");
            }
            if (e.text.empty() || e.text.find('\n') != std::string::npos) {
                throw std::invalid_argument("text must be a non-empty single line");
            }
            out.push_back(std::move(e));
        } catch (const std::exception& ex) {
            throw ParseError(line_no, ex.what());
        }
    }
    return out;
}

json to_json(const LabelMapping& mapping) { return {{"labels", mapping.labels()}}; }

LabelMapping label_mapping_from_json(const json& j) {
    const auto labels = j.at("labels").get<std::vector<int>>();
    auto m = LabelMapping::from_labels(labels);
    if (m.labels() != labels) throw std::invalid_argument("label mapping: labels must be distinct and ascending");
    return m;
}

std::vector<MessageRecord> load_records(const ExperimentConfig& config) {
    std::vector<MessageRecord> records;
    if (config.data.source == "synthetic") {
        records = generate_synthetic(config.synth);
    } else {
        std::ifstream in(config.data.path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open data file " + config.data.path);
        try {
            records = parse_records(in, config.data.format);
        } catch (const ParseError& e) {
            throw std::runtime_error(config.data.path + ": " + e.what());
        }
    }
    if (config.data.resample) {
        const auto targets = config.data.targets.empty() ? veremi_resample_targets() : config.data.targets;
        records = resample(records, targets, config.data.resample_seed, config.data.strict);
    }
    return records;
}

PreparedData prepare_data(const ExperimentConfig& config) {
    const auto records = load_records(config);
    if (records.empty()) throw std::runtime_error("no records to train on");
    auto encoded = encode_labels(records);
    PreparedData p;
    p.mapping = std::move(encoded.mapping);
    p.split = split_train_test(encoded.examples, config.data.split_ratio, config.data.split_seed);
    return p;
}

Vocabulary build_vocabulary(const TokenizerConfig& config, std::span<const LabeledText> train) {
    std::vector<std::string> corpus;
    corpus.reserve(train.size());
    for (const auto& e : train) corpus.push_back(e.text);
    return Vocabulary::build(corpus, config.vocab_size);
}

std::vector<TrainingExample> to_training_examples(const Vocabulary& vocab, std::size_t max_len,
                                                  std::span<const LabeledText> examples) {
    std::vector<TrainingExample> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back({encode(vocab, e.text, max_len), e.class_index});
    return out;
}

EncoderConfig encoder_for(const ExperimentConfig& config, const Vocabulary& vocab, std::size_t n_classes) {
    auto enc = config.model;
    enc.vocab_size = vocab.size();
    enc.max_len = config.tokenizer.max_len;
    enc.n_classes = n_classes;
    enc.validate();
    return enc;
}

namespace {

json encoder_to_json(const EncoderConfig& e) {
    return {{"vocab_size", e.vocab_size}, {"d_model", e.d_model},   {"n_heads", e.n_heads},
            {"n_layers", e.n_layers},     {"d_ff", e.d_ff},         {"max_len", e.max_len},
            {"n_classes", e.n_classes},   {"layernorm_epsilon", e.layernorm_epsilon}};
}

EncoderConfig encoder_from_json(const json& j) {
    EncoderConfig e;
    e.vocab_size = j.at("vocab_size").get<std::size_t>();
    e.d_model = j.at("d_model").get<std::size_t>();
    e.n_heads = j.at("n_heads").get<std::size_t>();
    e.n_layers = j.at("n_layers").get<std::size_t>();
    e.d_ff = j.at("d_ff").get<std::size_t>();
    e.max_len = j.at("max_len").get<std::size_t>();
    e.n_classes = j.at("n_classes").get<std::size_t>();
    e.layernorm_epsilon = j.at("layernorm_epsilon").get<double>();
    e.validate();
    return e;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

void save_fl_bert(const FlBertModel& model, const fs::path& dir) {
    std::ostringstream vocab;
    model.vocab.save(vocab);
    write_file_atomic(dir / "vocab.txt", vocab.str());
    write_file_atomic(dir / "model.bin", encode_weights(model.weights));
    write_file_atomic(dir / "model.json",
                      dump({{"kind", "fl_bert"}, {"encoder", encoder_to_json(model.encoder)}, {"labels", model.labels}}));
}

FlBertModel load_fl_bert(const fs::path& dir) {
    FlBertModel m;
    {
        std::ifstream in(dir / "vocab.txt", std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + (dir / "vocab.txt").string());
        m.vocab = Vocabulary::load(in);
    }
    const auto meta = json::parse(read_file(dir / "model.json"));
    if (meta.at("kind").get<std::string>() != "fl_bert") throw std::runtime_error("model.json: not an FL-BERT model");
    m.encoder = encoder_from_json(meta.at("encoder"));
    m.labels = meta.at("labels").get<std::vector<int>>();
    const auto bytes = read_file(dir / "model.bin");
    m.weights = decode_weights(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
    if (m.vocab.size() != m.encoder.vocab_size) {
        throw std::runtime_error("FL-BERT model: vocabulary size disagrees with model.json");
    }
    if (!m.weights.same_layout(init_params(m.encoder, 0))) {
        throw std::runtime_error("FL-BERT model: checkpoint layout does not match model.json");
    }
    return m;
}

std::vector<int> predict_fl_bert(const FlBertModel& model, std::span<const LabeledText> examples) {
    constexpr std::size_t kChunk = 256;
    std::vector<int> out;
    out.reserve(examples.size());
    std::vector<TokenSequence> batch;
    for (std::size_t start = 0; start < examples.size(); start += kChunk) {
        batch.clear();
        const auto end = std::min(examples.size(), start + kChunk);
        for (std::size_t i = start; i < end; ++i) batch.push_back(encode(model.vocab, examples[i].text, model.encoder.max_len));
        const auto p = predict(model.weights, model.encoder, batch);
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

ClassificationReport evaluate_predictions(std::span<const int> predicted, std::span<const LabeledText> truth,
                                          std::size_t n_classes) {
    std::vector<int> y(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) y[i] = truth[i].class_index;
    return report(confusion(y, predicted, n_classes));
}

FlBertRun train_fl_bert(const ExperimentConfig& config, std::span<const LabeledText> train,
                        const LabelMapping& mapping, std::span<const LabeledText> test) {
    FlBertRun run;
    run.model.vocab = build_vocabulary(config.tokenizer, train);
    run.model.encoder = encoder_for(config, run.model.vocab, mapping.size());
    run.model.labels = mapping.labels();
    const auto examples = to_training_examples(run.model.vocab, config.tokenizer.max_len, train);

    RoundEvaluator evaluator;
    if (config.eval_rounds && !test.empty()) {
        evaluator = [&](const ParameterSet& global) -> std::optional<double> {
            FlBertModel probe{run.model.vocab, run.model.encoder, quantized_to_single(global), run.model.labels};
            return evaluate_predictions(predict_fl_bert(probe, test), test, mapping.size()).accuracy;
        };
    }
    auto result = run_federation(config.fed, run.model.encoder, examples, evaluator);
    run.model.weights = quantized_to_single(std::move(result.global));
    run.logs = std::move(result.logs);
    return run;
}

BaselineModel train_baseline(const std::string& kind, const BaselineConfig& config,
                             std::span<const LabeledText> train, const LabelMapping& mapping) {
    BaselineModel m;
    std::vector<std::string> texts;
    std::vector<int> y;
    for (const auto& e : train) {
        texts.push_back(e.text);
        y.push_back(e.class_index);
    }
    m.features = fit_tfidf(texts, config.max_features);
    m.labels = mapping.labels();
    const auto X = tfidf_matrix(m.features, texts);
    const auto C = mapping.size();
    if (kind == "lr") {
        m.classifier = train_ova_logistic(X, y, C, config.lr);
    } else if (kind == "svm") {
        m.classifier = train_ova_svm(X, y, C, config.svm);
    } else if (kind == "knn") {
        auto knn = make_knn(X, y, config.knn_k);
        if (config.knn_condense) knn.representatives = knn_condense(X, y);
        m.classifier = std::move(knn);
    } else if (kind == "rf") {
        m.classifier = train_random_forest(X, y, C, config.rf);
    } else {
        throw std::invalid_argument("unknown baseline model '" + kind + "' (expected rf, svm, lr or knn)");
    }
    return m;
}

std::string_view display_name(std::string_view kind) {
    if (kind == "rf") return "Random Forest";
    if (kind == "svm") return "SVM";
    if (kind == "lr") return "Logistic Regression";
    if (kind == "knn") return "KNN";
    if (kind == "fl_bert") return "FL-BERT";
    throw std::invalid_argument("unknown model kind '" + std::string(kind) + "'");
}

std::vector<ComparisonRow> comparison_rows(std::span<const ModelEvaluation> models) {
    std::vector<ComparisonRow> rows;
    for (const auto& m : models) rows.push_back({std::string(display_name(m.kind)), m.report.accuracy});
    return rows;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
    config.validate();
    const fs::path out(config.out_dir);
    fs::create_directories(out);
    write_file_atomic(out / "config.toml", to_toml(config));

    const auto data = prepare_data(config);
    const auto& split = data.split;
    ExperimentSummary summary;
    summary.mapping = data.mapping;
    summary.n_train = split.train.size();
    summary.n_test = split.test.size();
    const auto C = data.mapping.size();

    const auto emit_report = [&](const std::string& kind, const ClassificationReport& r) {
        write_file_atomic(out / "reports" / (kind + ".txt"),
                          std::string(display_name(kind)) + "\n" + render_report(r, data.mapping));
        write_file_atomic(out / "reports" / (kind + ".json"), dump(to_json(r, data.mapping)));
    };

    // Paper order: RF, SVM, LR, KNN, then FL-BERT.
    for (const auto* kind : {"rf", "svm", "lr", "knn"}) {
        const auto& wanted = config.baseline.models;
        if (std::find(wanted.begin(), wanted.end(), kind) == wanted.end()) continue;
        auto model = train_baseline(kind, config.baseline, split.train, data.mapping);
        write_file_atomic(out / "baselines" / (std::string(kind) + ".json"), dump(to_json(model)));
        std::vector<std::string> texts;
        for (const auto& e : split.test) texts.push_back(e.text);
        auto r = evaluate_predictions(model.predict(texts), split.test, C);
        emit_report(kind, r);
        summary.models.push_back({kind, std::move(r)});
    }

    if (config.fl_bert) {
        auto run = train_fl_bert(config, split.train, data.mapping, split.test);
        save_fl_bert(run.model, out / "fl_bert");
        std::ostringstream logs;
        write_round_logs(logs, run.logs);
        write_file_atomic(out / "fl_bert" / "rounds.jsonl", logs.str());
        auto r = evaluate_predictions(predict_fl_bert(run.model, split.test), split.test, C);
        emit_report("fl_bert", r);
        summary.models.push_back({"fl_bert", std::move(r)});
    }

    const auto rows = comparison_rows(summary.models);
    write_file_atomic(out / "comparison.txt", render_comparison(rows));
    json models = json::object();
    for (const auto& m : summary.models) models[m.kind] = to_json(m.report, data.mapping);
    write_file_atomic(out / "summary.json", dump({{"labels", data.mapping.labels()},
                                                  {"n_train", summary.n_train},
                                                  {"n_test", summary.n_test},
                                                  {"models", models}}));
    return summary;
}

}  // namespace fedids
