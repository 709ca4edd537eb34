// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// `fedids_acceptance 5 8` runs only the listed criteria.

#include "support.hpp"

#include "fedids/experiment.hpp"
#include "fedids/linear_models.hpp"
#include "fedids/metrics.hpp"
#include "fedids/socket.hpp"
#include "fedids/synthetic.hpp"
#include "fedids/transport.hpp"
#include "fedids/veremi.hpp"
#include "fedids/wire.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

using namespace fedids;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// 1. Gradient fidelity.
Outcome gradient_fidelity() {
    const auto t0 = Clock::now();
    const auto c = testing::tiny_encoder();
    const auto p = testing::randomized_params(c, 2024);
    Rng rng(77);
    std::vector<TokenSequence> batch;
    std::vector<int> targets;
    for (int i = 0; i < 3; ++i) {
        batch.push_back(testing::random_sequence(rng, c.vocab_size, c.max_len, 3 + rng.below(c.max_len - 2)));
        targets.push_back(static_cast<int>(rng.below(c.n_classes)));
    }
    const auto check = testing::finite_difference_check(p, c, batch, targets, 1e-5);
    const double secs = seconds_since(t0);
    const bool ok = check.checked == p.total_size() && check.max_relative_error < 1e-5 && secs < 30;
    return {ok, fmt::format("max rel err {:.3e} over {} scalars in {} tensors (worst {}), {:.1f}s",
                            check.max_relative_error, check.checked, p.count(), check.worst_tensor, secs)};
}

// 2. Federation identity.
Outcome federation_identity() {
    const auto t0 = Clock::now();
    const auto c = testing::tiny_encoder();
    const auto data = testing::separable_examples(200, c, 5);
    FederationConfig cfg;
    cfg.n_clients = 1;
    cfg.rounds = 3;
    cfg.local_epochs = 2;
    cfg.batch_size = 16;
    cfg.seed = 99;
    const auto fed = run_federation(cfg, c, data);
    const auto oracle = testing::centralized_training(c, data, 3, 2, 16, cfg.optimizer, cfg.seed);
    const double secs = seconds_since(t0);
    const bool identical = fed.global == oracle;
    return {identical && secs < 60,
            fmt::format("bitwise {} (max |diff| {:.1e}), {:.1f}s", identical ? "identical" : "DIFFERENT",
                        testing::max_abs_diff(fed.global, oracle), secs)};
}

// 3. Aggregation algebra.
Outcome aggregation_algebra() {
    Rng rng(3);
    std::size_t failures = 0;
    double worst = 0.0;
    const auto note = [&](double err) {
        worst = std::max(worst, err);
        if (!(err <= 1e-12)) ++failures;
    };
    for (int trial = 0; trial < 1000; ++trial) {
        const auto layout = testing::random_parameter_set(rng, 5);
        const std::size_t k = 1 + rng.below(7);
        std::vector<ClientUpdate> ups;
        for (std::size_t i = 0; i < k; ++i) {
            ClientUpdate u;
            u.client_id = static_cast<std::uint32_t>(i);
            u.n_examples = 1 + rng.below(500);
            u.weights = layout;
            for (auto& t : u.weights.tensors())
                for (auto& v : t.values) v = rng.normal(0, 5);
            ups.push_back(std::move(u));
        }
        for (auto mode : {AggregationMode::plain_mean, AggregationMode::example_weighted}) {
            note(testing::max_abs_diff(aggregate(std::span(ups.data(), 1), mode), ups[0].weights));
            std::vector<ClientUpdate> copies(k, ups[0]);
            for (std::size_t i = 0; i < k; ++i) copies[i].client_id = static_cast<std::uint32_t>(i);
            note(testing::max_abs_diff(aggregate(copies, mode), ups[0].weights));
        }
        const auto mean = aggregate(ups, AggregationMode::plain_mean);
        const auto weighted = aggregate(ups, AggregationMode::example_weighted);
        for (std::size_t t = 0; t < layout.count(); ++t) {
            for (std::size_t i = 0; i < layout[t].values.size(); ++i) {
                double sum = 0, lo = INFINITY, hi = -INFINITY;
                for (const auto& u : ups) {
                    const double v = u.weights[t].values[i];
                    sum += v;
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                note(std::fabs(mean[t].values[i] - sum / static_cast<double>(k)));
                const double w = weighted[t].values[i];
                note(std::max({0.0, lo - w, w - hi}));
            }
        }
    }
    return {failures == 0, fmt::format("1000 trials, worst deviation {:.2e}, {} violations", worst, failures)};
}

// 4. Overfit sanity.
Outcome overfit_sanity() {
    const auto t0 = Clock::now();
    EncoderConfig c;  // toy defaults: d_model 32, 2 heads, 2 layers, d_ff 64
    c.vocab_size = 128;
    c.max_len = 16;
    const auto data = testing::separable_examples(64, c, 8);
    std::vector<TokenSequence> seqs;
    std::vector<int> labels;
    for (const auto& e : data) {
        seqs.push_back(e.tokens);
        labels.push_back(e.label);
    }
    auto p = init_params(c, 8);
    auto state = AdamState::fresh(p, AdamHyper{});
    std::size_t epoch = 0;
    bool done = predict(p, c, seqs) == labels;
    while (!done && epoch < 200) {
        for (std::size_t s = 0; s < seqs.size(); s += 16) {
            adam_step(p,
                      loss_and_grad(p, c, std::span(seqs.data() + s, 16), std::span<const int>(labels.data() + s, 16)).grads,
                      state);
        }
        ++epoch;
        done = predict(p, c, seqs) == labels;
    }
    const double secs = seconds_since(t0);
    return {done && secs < 60, fmt::format("100% training accuracy {} after {} epochs, {:.1f}s",
                                           done ? "reached" : "NOT reached", epoch, secs)};
}

// 5. End-to-end learning signal.
Outcome learning_signal() {
    const auto t0 = Clock::now();
    // Model scale and optimizer come from the CI config; the criterion's data
    // and federation shape are pinned here.
    auto config = load_config(fs::path(FEDIDS_SOURCE_DIR) / "configs" / "ci.toml");
    config.synth.counts = {{0, 600}, {1, 600}, {2, 600}, {4, 600}, {8, 600}, {16, 600}};
    config.fed.n_clients = 4;
    config.fed.rounds = 5;
    config.fed.local_epochs = 1;
    config.fed.threads = 1;
    const auto out = fs::temp_directory_path() / fmt::format("fedids_acceptance_{}", ::getpid());
    config.out_dir = out.string();
    const auto summary = run_experiment(config);
    fs::remove_all(out);
    const double secs = seconds_since(t0);

    const std::map<std::string, double> floor{{"fl_bert", 0.90}, {"lr", 0.85}, {"svm", 0.85}, {"rf", 0.85}, {"knn", 0.75}};
    bool ok = secs < 600 && summary.models.size() == 5;
    std::string detail;
    for (const auto& m : summary.models) {
        const double f1 = m.report.macro.f1;
        const bool good = f1 >= floor.at(m.kind);
        ok = ok && good;
        detail += fmt::format("{} {:.4f}{} ", m.kind, f1, good ? "" : "(<" + fmt::format("{:.2f}", floor.at(m.kind)) + ")");
    }
    return {ok, fmt::format("macro-F1 {}on {} test examples, {:.1f}s", detail, summary.n_test, secs)};
}

// 6. Metric oracle.
Outcome metric_oracle() {
    Rng rng(6);
    std::size_t failures = 0;
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t C = 1 + rng.below(6), N = 1 + rng.below(200);
        std::vector<int> t(N), p(N);
        for (std::size_t i = 0; i < N; ++i) {
            t[i] = static_cast<int>(rng.below(C));
            p[i] = rng.below(2) ? t[i] : static_cast<int>(rng.below(C));
        }
        const auto r = report(confusion(t, p, C));
        const auto o = testing::brute_force_metrics(t, p, C);
        std::vector<double> errs{r.accuracy - o.accuracy,         r.macro.precision - o.macro_p,
                                 r.macro.recall - o.macro_r,       r.macro.f1 - o.macro_f1,
                                 r.weighted.precision - o.weighted_p, r.weighted.recall - o.weighted_r,
                                 r.weighted.f1 - o.weighted_f1};
        for (std::size_t c = 0; c < C; ++c) {
            errs.push_back(r.classes[c].precision - o.precision[c]);
            errs.push_back(r.classes[c].recall - o.recall[c]);
            errs.push_back(r.classes[c].f1 - o.f1[c]);
            if (r.classes[c].support != o.support[c]) ++failures;
        }
        for (double e : errs) {
            worst = std::max(worst, std::fabs(e));
            if (!(std::fabs(e) <= 1e-12)) ++failures;
        }
        if (r.weighted.recall != r.accuracy) ++failures;
    }
    return {failures == 0, fmt::format("1000 instances, worst deviation {:.2e}, {} mismatches", worst, failures)};
}

// 7. Paper fixtures.
Outcome paper_fixtures() {
    const std::vector<int> raw{0, 1, 2, 4, 8, 16};
    const double values[6][3] = {{0.94, 0.95, 0.95}, {1.00, 1.00, 1.00}, {0.65, 0.88, 0.75},
                                 {0.98, 0.74, 0.84}, {0.69, 0.45, 0.55}, {0.79, 0.95, 0.86}};
    const std::uint64_t support[6] = {9899, 6158, 6096, 6181, 5899, 5717};
    const char* expected_rows[6] = {"0 0.94 0.95 0.95 9899",  "1 1.00 1.00 1.00 6158", "2 0.65 0.88 0.75 6096",
                                    "4 0.98 0.74 0.84 6181",  "8 0.69 0.45 0.55 5899", "16 0.79 0.95 0.86 5717"};
    ClassificationReport r;
    for (int i = 0; i < 6; ++i) r.classes.push_back({values[i][0], values[i][1], values[i][2], support[i]});
    r.accuracy = 0.84;
    std::istringstream table(render_report(r, LabelMapping::from_labels(raw)));
    std::vector<std::string> rows;
    for (std::string line; std::getline(table, line);) {
        std::istringstream words(line);
        std::string joined, w;
        while (words >> w) joined += (joined.empty() ? "" : " ") + w;
        rows.push_back(joined);
    }
    std::size_t matched = 0;
    for (int i = 0; i < 6; ++i) matched += rows.size() > static_cast<std::size_t>(i + 1) && rows[i + 1] == expected_rows[i];

    const std::vector<ComparisonRow> cmp{
        {"Random Forest", 0.49}, {"SVM", 0.59}, {"Logistic Regression", 0.59}, {"KNN", 0.38}, {"FL-BERT", 0.84}};
    std::istringstream ctext(render_comparison(cmp));
    std::vector<std::string> got;
    std::string line;
    std::getline(ctext, line);
    while (std::getline(ctext, line)) got.push_back(line.substr(line.find_last_of(' ') + 1));
    const std::vector<std::string> want{"49", "59", "59", "38", "84"};
    const bool ok = matched == 6 && got == want;
    return {ok, fmt::format("{}/6 report rows match; comparison {}", matched, fmt::join(got, "/"))};
}

// 8. Wire soundness.
Outcome wire_soundness() {
    Rng rng(8);
    std::size_t bad_roundtrip = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto p = testing::random_parameter_set(rng, 6);
        const auto enc = encode_weights(p);
        if (!(decode_weights(enc) == p)) ++bad_roundtrip;
        const Frame f{static_cast<MessageType>(1 + rng.below(5)), enc};
        const auto bytes = frame(f);
        BufferSource src(bytes);
        const auto back = deframe(src);
        if (!back || !(*back == f) || src.remaining() != 0) ++bad_roundtrip;
    }

    std::size_t undeclared = 0, rejected = 0;
    const auto valid = frame(MessageType::update, update_payload(1, 9, testing::random_parameter_set(rng, 3)));
    for (int trial = 0; trial < 100000; ++trial) {
        Bytes b;
        if (trial % 2 == 0) {
            b.resize(rng.below(48));
            for (auto& x : b) x = static_cast<std::uint8_t>(rng.below(256));
            if (trial % 4 == 0 && b.size() >= 4) std::copy(kFrameMagic.begin(), kFrameMagic.end(), b.begin());
        } else {
            b = valid;
            b[rng.below(b.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
            if (rng.below(3) == 0) b.resize(rng.below(b.size()));
        }
        BufferSource src(b);
        try {
            (void)deframe(src);
        } catch (const FrameError&) {
            ++rejected;
        } catch (...) {
            ++undeclared;
        }
    }

    const auto c = testing::tiny_encoder();
    const auto data = testing::separable_examples(60, c, 8);
    FederationConfig cfg;
    cfg.n_clients = 3;
    cfg.rounds = 3;
    cfg.batch_size = 8;
    cfg.seed = 8;
    const auto loop = run_loopback_federation(cfg, c, data);
    TcpListener listener(0);
    auto server = std::async(std::launch::async, [&] { return serve_round_protocol(listener, cfg, c); });
    auto clients = make_clients(cfg, c, data);
    std::vector<std::thread> threads;
    for (auto& client : clients) {
        threads.emplace_back([&, port = listener.port()] { run_socket_client(client, cfg, "127.0.0.1", port); });
    }
    for (auto& t : threads) t.join();
    const bool socket_equal = server.get().global == loop.result.global;

    const bool ok = bad_roundtrip == 0 && undeclared == 0 && socket_equal;
    return {ok, fmt::format("{} round-trip failures; fuzz 100000: {} rejected, {} undeclared errors; socket {} loopback",
                            bad_roundtrip, rejected, undeclared, socket_equal ? "==" : "!=")};
}

// 9. Privacy audit.
Outcome privacy_audit() {
    SyntheticSpec spec;
    spec.counts = {{0, 60}, {1, 60}, {2, 60}, {4, 60}, {8, 60}, {16, 60}};
    spec.seed = 9;
    const auto encoded = encode_labels(generate_synthetic(spec));
    TokenizerConfig tok;
    const auto vocab = build_vocabulary(tok, encoded.examples);
    const auto train = to_training_examples(vocab, tok.max_len, encoded.examples);
    EncoderConfig enc;
    enc.vocab_size = vocab.size();
    enc.max_len = tok.max_len;
    enc.n_classes = encoded.mapping.size();
    enc.d_model = 16;
    enc.d_ff = 32;
    enc.n_layers = 1;
    FederationConfig cfg;
    cfg.n_clients = 3;
    cfg.rounds = 5;
    cfg.batch_size = 16;
    const auto run = run_loopback_federation(cfg, enc, train);

    // Raw features: each text and each of its space-separated fields long enough
    // to be distinctive.
    std::set<std::string> needles;
    for (const auto& e : encoded.examples) {
        needles.insert(e.text);
        std::istringstream fields(e.text);
        for (std::string f; fields >> f;)
            if (f.size() >= 7) needles.insert(f);
    }
    std::size_t hits = 0, frames = 0, foreign = 0;
    const auto reference = init_params(enc, 0);
    for (const auto& bytes : run.server_bound) {
        const std::string_view hay(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        for (const auto& n : needles) hits += hay.find(n) != std::string_view::npos;
        BufferSource src(bytes);
        while (auto f = deframe(src)) {
            ++frames;
            if (f->type == MessageType::join) {
                foreign += f->payload.size() != 4;
            } else if (f->type == MessageType::update) {
                foreign += !parse_update(f->payload).weights.same_layout(reference);
            } else {
                ++foreign;
            }
        }
    }
    const bool ok = hits == 0 && foreign == 0 && frames == cfg.n_clients * (1 + cfg.rounds);
    return {ok, fmt::format("{} needles over {} server-bound frames: {} found, {} unexpected payloads", needles.size(),
                            frames, hits, foreign)};
}

// 10. Dataset arithmetic.
Outcome dataset_arithmetic() {
    const auto t0 = Clock::now();
    SyntheticSpec spec;
    spec.counts = {{0, 437429}, {16, 56595}, {4, 30510}, {2, 30473}, {1, 30473}, {8, 29460}};
    spec.seed = 10;
    const auto full = generate_synthetic(spec);
    const auto targets = veremi_resample_targets();
    const auto sampled = resample(full, targets, 10);
    std::map<int, std::size_t> counts;
    for (const auto& r : sampled) ++counts[r.attacker_type];
    const auto encoded = encode_labels(sampled);
    const auto split = split_train_test(encoded.examples, 0.8, 10);
    bool ok = sampled.size() == 199748 && split.test.size() == 39950 && split.train.size() == 159798 &&
              counts == std::map<int, std::size_t>(targets.begin(), targets.end());
    std::string detail = fmt::format("synthetic full counts -> {} resampled, split {}/{}", sampled.size(),
                                     split.train.size(), split.test.size());

    if (const char* path = std::getenv("FEDIDS_VEREMI_CSV"); path && fs::exists(path)) {
        std::ifstream in(path);
        const auto real = resample(parse_records(in, RecordFormat::csv), targets, 10);
        std::map<int, std::size_t> real_counts;
        for (const auto& r : real) ++real_counts[r.attacker_type];
        const bool real_ok = real_counts == std::map<int, std::size_t>(targets.begin(), targets.end());
        ok = ok && real_ok;
        detail += fmt::format("; real CSV per-class counts {}", real_ok ? "match" : "DIFFER");
    } else {
        detail += "; real CSV not supplied (FEDIDS_VEREMI_CSV)";
    }
    return {ok, detail + fmt::format(", {:.1f}s", seconds_since(t0))};
}

// 11. Logistic and SVM equation fidelity.
Outcome equation_fidelity() {
    Rng rng(11);
    double worst_mid = 0;
    for (int i = 0; i < 1000; ++i) {
        const LogisticCurve c{rng.uniform(1e-3, 1e3), rng.uniform(-50, 50), rng.normal(0, 1e3)};
        worst_mid = std::max(worst_mid, std::fabs(logistic_eval(c, c.x0) - c.L / 2));
    }
    double worst_svm = 0;
    for (int i = 0; i < 1000; ++i) {
        SvmDecisionFunction f;
        const auto n = 1 + rng.below(40), d = 1 + rng.below(30);
        f.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
        for (Eigen::Index k = 0; k < f.vectors.size(); ++k) f.vectors.data()[k] = rng.normal();
        for (std::size_t k = 0; k < n; ++k) {
            f.alpha.push_back(rng.uniform() * 5);
            f.labels.push_back(rng.below(2) ? 1 : -1);
        }
        f.bias = rng.normal();
        const auto w = collapse(f);
        FeatureVector x(static_cast<Eigen::Index>(d));
        for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = rng.normal();
        worst_svm = std::max(worst_svm, std::fabs(svm_decision(f, x) - w.score(x)));
    }
    const bool ok = worst_mid <= 1e-15 && worst_svm <= 1e-10;
    return {ok, fmt::format("midpoint |f(x0) - L/2| max {:.1e}; dual vs collapsed max {:.1e}", worst_mid, worst_svm)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"gradient fidelity", gradient_fidelity},   {"federation identity", federation_identity},
        {"aggregation algebra", aggregation_algebra}, {"overfit sanity", overfit_sanity},
        {"learning signal", learning_signal},       {"metric oracle", metric_oracle},
        {"paper fixtures", paper_fixtures},         {"wire soundness", wire_soundness},
        {"privacy audit", privacy_audit},           {"dataset arithmetic", dataset_arithmetic},
        {"equation fidelity", equation_fidelity},
    };
    std::set<std::size_t> selected;
    for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::atoi(argv[i])));

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected.empty() && !selected.contains(i + 1)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        all = all && o.pass;
        std::cout << fmt::format("{} criterion {:>2} ({}): {}", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                                 o.detail)
                  << std::endl;
    }
    return all ? 0 : 1;
}
