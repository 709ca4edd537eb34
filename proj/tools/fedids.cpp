#include "fedids/experiment.hpp"
#include "fedids/socket.hpp"
#include "fedids/synthetic.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "jsonl";
    std::size_t threads = 1;
};

fedids::ExperimentConfig load(const CommonOptions& o) {
    auto c = o.config.empty() ? fedids::ExperimentConfig{} : fedids::load_config(o.config);
    if (o.seed) c.override_seeds(*o.seed);
    if (!o.out.empty()) c.out_dir = o.out;
    c.fed.threads = o.threads;
    c.validate();
    return c;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_records_file(const fs::path& path, const std::vector<fedids::MessageRecord>& records,
                        fedids::RecordFormat format) {
    std::ostringstream s;
    fedids::write_records(s, records, format);
    fedids::write_file_atomic(path, s.str());
    std::cout << fmt::format("wrote {} records to {}\n", records.size(), path.string());
}

// A split directory: labels.json, train.jsonl, test.jsonl, vocab.txt.
struct SplitData {
    fedids::LabelMapping mapping;
    std::vector<fedids::LabeledText> train;
    std::vector<fedids::LabeledText> test;
};

SplitData read_split(const fs::path& dir) {
    SplitData d;
    d.mapping = fedids::label_mapping_from_json(json::parse(fedids::read_file(dir / "labels.json")));
    std::istringstream train(fedids::read_file(dir / "train.jsonl"));
    d.train = fedids::read_labeled(train, d.mapping);
    std::istringstream test(fedids::read_file(dir / "test.jsonl"));
    d.test = fedids::read_labeled(test, d.mapping);
    return d;
}

// Split from --data when given, otherwise prepared from the config.
SplitData split_for(const fedids::ExperimentConfig& c, const std::string& data_dir) {
    if (!data_dir.empty()) return read_split(data_dir);
    auto p = fedids::prepare_data(c);
    return {std::move(p.mapping), std::move(p.split.train), std::move(p.split.test)};
}

fedids::Vocabulary read_vocab(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return fedids::Vocabulary::load(in);
}

void write_report(const fs::path& out, const std::string& kind, const fedids::ClassificationReport& r,
                  const fedids::LabelMapping& mapping) {
    fedids::write_file_atomic(out / "reports" / (kind + ".txt"), fedids::render_report(r, mapping));
    fedids::write_file_atomic(out / "reports" / (kind + ".json"), dump(fedids::to_json(r, mapping)));
    std::cout << fedids::render_report(r, mapping);
}

int cmd_ingest(const CommonOptions& o, const std::string& input, const std::string& input_format) {
    auto c = load(o);
    if (!input.empty()) {
        c.data.source = "file";
        c.data.path = input;
    }
    if (!input_format.empty()) c.data.format = fedids::parse_record_format(input_format);
    const auto format = fedids::parse_record_format(o.format);
    const auto records = fedids::load_records(c);
    write_records_file(fs::path(c.out_dir) / ("records." + std::string(fedids::to_string(format))), records, format);
    return 0;
}

int cmd_synth(const CommonOptions& o) {
    const auto c = load(o);
    const auto format = fedids::parse_record_format(o.format);
    write_records_file(fs::path(c.out_dir) / ("records." + std::string(fedids::to_string(format))),
                       fedids::generate_synthetic(c.synth), format);
    return 0;
}

int cmd_split(const CommonOptions& o) {
    const auto c = load(o);
    const auto p = fedids::prepare_data(c);
    const fs::path out(c.out_dir);
    fedids::write_file_atomic(out / "labels.json", dump(fedids::to_json(p.mapping)));
    for (const auto& [name, part] : {std::pair{"train.jsonl", &p.split.train}, std::pair{"test.jsonl", &p.split.test}}) {
        std::ostringstream s;
        fedids::write_labeled(s, *part);
        fedids::write_file_atomic(out / name, s.str());
    }
    std::ostringstream vocab;
    fedids::build_vocabulary(c.tokenizer, p.split.train).save(vocab);
    fedids::write_file_atomic(out / "vocab.txt", vocab.str());
    std::cout << fmt::format("train {} / test {} examples, {} classes in {}\n", p.split.train.size(),
                             p.split.test.size(), p.mapping.size(), out.string());
    return 0;
}

int cmd_train_fl_bert(const CommonOptions& o, const std::string& data_dir) {
    const auto c = load(o);
    const auto d = split_for(c, data_dir);
    const auto run = fedids::train_fl_bert(c, d.train, d.mapping, d.test);
    const fs::path dir = fs::path(c.out_dir) / "fl_bert";
    fedids::save_fl_bert(run.model, dir);
    std::ostringstream logs;
    fedids::write_round_logs(logs, run.logs);
    fedids::write_file_atomic(dir / "rounds.jsonl", logs.str());
    std::cout << logs.str();
    return 0;
}

int cmd_train_baseline(const CommonOptions& o, const std::string& data_dir, const std::string& kind) {
    const auto c = load(o);
    const auto d = split_for(c, data_dir);
    const auto model = fedids::train_baseline(kind, c.baseline, d.train, d.mapping);
    const auto path = fs::path(c.out_dir) / "baselines" / (kind + ".json");
    fedids::write_file_atomic(path, dump(fedids::to_json(model)));
    std::cout << fmt::format("wrote {}\n", path.string());
    return 0;
}

int cmd_serve(const CommonOptions& o, const std::string& data_dir, const std::string& host, std::uint16_t port,
              int join_timeout_s) {
    const auto c = load(o);
    if (data_dir.empty()) throw std::invalid_argument("serve: --data <split dir> is required");
    // The server only needs the model shape: vocabulary and label set, no texts.
    fedids::FlBertModel model;
    model.vocab = read_vocab(fs::path(data_dir) / "vocab.txt");
    const auto mapping = fedids::label_mapping_from_json(json::parse(fedids::read_file(fs::path(data_dir) / "labels.json")));
    model.encoder = fedids::encoder_for(c, model.vocab, mapping.size());
    model.labels = mapping.labels();

    fedids::TcpListener listener(port, host);
    std::cout << fmt::format("listening on {}:{} for {} clients\n", host, listener.port(), c.fed.n_clients)
              << std::flush;
    auto result = fedids::serve_round_protocol(listener, c.fed, model.encoder, std::chrono::seconds(join_timeout_s));
    model.weights = fedids::quantized_to_single(std::move(result.global));
    const fs::path dir = fs::path(c.out_dir) / "fl_bert";
    fedids::save_fl_bert(model, dir);
    std::ostringstream logs;
    fedids::write_round_logs(logs, result.logs);
    fedids::write_file_atomic(dir / "rounds.jsonl", logs.str());
    std::cout << logs.str();
    return 0;
}

int cmd_client(const CommonOptions& o, const std::string& data_dir, const std::string& host, std::uint16_t port,
               std::uint32_t id) {
    const auto c = load(o);
    if (data_dir.empty()) throw std::invalid_argument("client: --data <split dir> is required");
    const auto d = read_split(data_dir);
    const auto vocab = read_vocab(fs::path(data_dir) / "vocab.txt");
    const auto encoder = fedids::encoder_for(c, vocab, d.mapping.size());
    const auto examples = fedids::to_training_examples(vocab, c.tokenizer.max_len, d.train);
    auto clients = fedids::make_clients(c.fed, encoder, examples);
    if (id >= clients.size()) {
        throw std::invalid_argument(fmt::format("client: id {} out of range for {} clients", id, clients.size()));
    }
    fedids::run_socket_client(clients[id], c.fed, host, port);
    std::cout << fmt::format("client {} done ({} examples)\n", id, clients[id].shard_size());
    return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::string& data_dir, const std::string& kind) {
    const auto c = load(o);
    const auto d = split_for(c, data_dir);
    const fs::path out(c.out_dir);
    std::vector<int> predicted;
    if (kind == "fl_bert" || kind == "fl-bert") {
        predicted = fedids::predict_fl_bert(fedids::load_fl_bert(out / "fl_bert"), d.test);
    } else {
        const auto model = fedids::baseline_from_json(json::parse(fedids::read_file(out / "baselines" / (kind + ".json"))));
        std::vector<std::string> texts;
        for (const auto& e : d.test) texts.push_back(e.text);
        predicted = model.predict(texts);
    }
    const auto name = kind == "fl-bert" ? std::string("fl_bert") : kind;
    write_report(out, name, fedids::evaluate_predictions(predicted, d.test, d.mapping.size()), d.mapping);
    return 0;
}

// Comparison table from whatever reports/<kind>.json exist, in the usual model order.
int cmd_report(const CommonOptions& o) {
    const auto c = load(o);
    const fs::path reports = fs::path(c.out_dir) / "reports";
    std::vector<fedids::ComparisonRow> rows;
    for (const std::string kind : {"rf", "svm", "lr", "knn", "fl_bert"}) {
        const auto path = reports / (kind + ".json");
        if (!fs::exists(path)) continue;
        const auto j = json::parse(fedids::read_file(path));
        rows.push_back({std::string(fedids::display_name(kind)), j.at("accuracy").get<double>()});
    }
    if (rows.empty()) throw std::runtime_error("report: no reports under " + reports.string());
    const auto table = fedids::render_comparison(rows);
    fedids::write_file_atomic(fs::path(c.out_dir) / "comparison.txt", table);
    std::cout << table;
    return 0;
}

int cmd_run(const CommonOptions& o) {
    const auto c = load(o);
    const auto summary = fedids::run_experiment(c);
    std::cout << fedids::render_comparison(fedids::comparison_rows(summary.models));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated transformer and TF-IDF baselines for VeReMi-style misbehavior detection"};
    app.require_subcommand(1);
    app.fallthrough();
    CommonOptions o;
    app.add_option("--config", o.config, "Experiment config file")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Override every seed in the config");
    app.add_option("--out", o.out, "Output directory (overrides the config)");
    app.add_option("--format", o.format, "Record format for written records")
        ->check(CLI::IsMember({"jsonl", "csv"}));
    app.add_option("--threads", o.threads, "Clients trained concurrently")->check(CLI::PositiveNumber);

    std::string data_dir;
    std::string input;
    std::string input_format;
    std::string model_kind;
    std::string eval_kind = "fl_bert";
    std::string host = "127.0.0.1";
    std::uint16_t port = 7171;
    std::uint32_t client_id = 0;
    int join_timeout = 60;

    auto* ingest = app.add_subcommand("ingest", "Parse and optionally resample a record file");
    ingest->add_option("--input", input, "Record file (defaults to data.path)");
    ingest->add_option("--input-format", input_format, "jsonl or csv (defaults to data.format)");
    auto* synth = app.add_subcommand("synth", "Generate synthetic beacon records");
    auto* split = app.add_subcommand("split", "Label, split and build the vocabulary");

    auto* train = app.add_subcommand("train", "Train a model");
    train->require_subcommand(1);
    auto* train_fl = train->add_subcommand("fl-bert", "Federated encoder training (in-process)");
    train_fl->add_option("--data", data_dir, "Split directory from `split`");
    auto* train_base = train->add_subcommand("baseline", "TF-IDF baseline");
    train_base->add_option("--model", model_kind, "rf, svm, lr or knn")
        ->required()
        ->check(CLI::IsMember({"rf", "svm", "lr", "knn"}));
    train_base->add_option("--data", data_dir, "Split directory from `split`");

    auto* serve = app.add_subcommand("serve", "Federation server over TCP");
    auto* client = app.add_subcommand("client", "Federation client over TCP");
    for (auto* sub : {serve, client}) {
        sub->add_option("--data", data_dir, "Split directory from `split`")->required();
        sub->add_option("--host", host, "Address to bind or connect to");
        sub->add_option("--port", port, "TCP port");
    }
    serve->add_option("--join-timeout", join_timeout, "Seconds to wait for every client to join");
    client->add_option("--id", client_id, "Client id in [0, n_clients)")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained model on the test split");
    evaluate->add_option("--model", eval_kind, "fl_bert, rf, svm, lr or knn")
        ->check(CLI::IsMember({"fl_bert", "fl-bert", "rf", "svm", "lr", "knn"}));
    evaluate->add_option("--data", data_dir, "Split directory from `split`");
    auto* report = app.add_subcommand("report", "Comparison table from saved reports");
    auto* run = app.add_subcommand("run", "Full pipeline from one config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(o, input, input_format);
        if (*synth) return cmd_synth(o);
        if (*split) return cmd_split(o);
        if (*train_fl) return cmd_train_fl_bert(o, data_dir);
        if (*train_base) return cmd_train_baseline(o, data_dir, model_kind);
        if (*serve) return cmd_serve(o, data_dir, host, port, join_timeout);
        if (*client) return cmd_client(o, data_dir, host, port, client_id);
        if (*evaluate) return cmd_evaluate(o, data_dir, eval_kind);
        if (*report) return cmd_report(o);
        if (*run) return cmd_run(o);
    } catch (const std::exception& e) {
        std::cerr << "fedids: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
