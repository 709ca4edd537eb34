#pragma once

// Oracles and fixtures shared by the unit and acceptance tests. Nothing in
// here calls the code path it is used to check.

#include "fedids/encoder.hpp"
#include "fedids/federation.hpp"
#include "fedids/metrics.hpp"
#include "fedids/params.hpp"
#include "fedids/rng.hpp"
#include "fedids/tokenizer.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace fedids::testing {

/// Two-decimal rendering with ties to even, computed on the exact binary
/// value with arbitrary-precision integers.
inline std::string exact_fixed2(double v) {
    using boost::multiprecision::cpp_int;
    int exp = 0;
    const double frac = std::frexp(std::fabs(v), &exp);  // |v| = frac * 2^exp, frac in [0.5, 1)
    const auto mantissa = static_cast<std::uint64_t>(std::ldexp(frac, 53));
    exp -= 53;  // |v| = mantissa * 2^exp
    cpp_int num = cpp_int(mantissa) * 100;
    cpp_int den = 1;
    if (exp >= 0) num <<= exp;
    else den <<= -exp;
    cpp_int q = num / den;
    const cpp_int r2 = (num % den) * 2;
    if (r2 > den || (r2 == den && (q & 1) != 0)) ++q;
    std::string digits = q.str();
    while (digits.size() < 3) digits.insert(digits.begin(), '0');
    digits.insert(digits.end() - 2, '.');
    return (v < 0 && q != 0 ? "-" : "") + digits;
}

inline EncoderConfig tiny_encoder() {
    EncoderConfig c;
    c.vocab_size = 16;
    c.d_model = 8;
    c.n_heads = 2;
    c.n_layers = 1;
    c.d_ff = 16;
    c.max_len = 8;
    c.n_classes = 6;
    return c;
}

inline TokenSequence random_sequence(Rng& rng, std::size_t vocab, std::size_t max_len, std::size_t length) {
    TokenSequence s;
    s.ids.assign(max_len, Vocabulary::kPad);
    s.mask.assign(max_len, 0);
    s.true_length = length;
    for (std::size_t i = 0; i < length; ++i) {
        s.ids[i] = i == 0 ? Vocabulary::kCls
                          : (i + 1 == length ? Vocabulary::kSep
                                             : static_cast<TokenId>(Vocabulary::kReserved + rng.below(vocab - Vocabulary::kReserved)));
        s.mask[i] = 1;
    }
    return s;
}

/// Class-dependent token patterns an encoder can separate.
inline std::vector<TrainingExample> separable_examples(std::size_t n, const EncoderConfig& c, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainingExample> out;
    const std::size_t usable = c.vocab_size - Vocabulary::kReserved;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % c.n_classes);
        const std::size_t length = 3 + rng.below(c.max_len - 2);
        auto s = random_sequence(rng, c.vocab_size, c.max_len, length);
        // The token right after CLS names the class.
        s.ids[1] = static_cast<TokenId>(Vocabulary::kReserved + (static_cast<std::size_t>(label) % usable));
        out.push_back({std::move(s), label});
    }
    return out;
}

inline ParameterSet random_parameter_set(Rng& rng, std::size_t max_tensors = 6) {
    ParameterSet p;
    const auto n = rng.below(max_tensors + 1);
    for (std::size_t t = 0; t < n; ++t) {
        std::vector<std::uint32_t> shape;
        const auto rank = rng.below(4);
        for (std::size_t r = 0; r < rank; ++r) shape.push_back(static_cast<std::uint32_t>(1 + rng.below(5)));
        auto& tensor = p.add("t" + std::to_string(t) + (rng.below(2) ? ".weight" : ".bias"), shape);
        for (auto& v : tensor.values) v = static_cast<double>(static_cast<float>(rng.normal(0.0, 3.0)));
    }
    return p;
}

/// Centralized reference for a one-client federation: R segments of E epochs
/// over the whole training set, a fresh Adam state per segment, and the
/// segment's mini-batch order drawn from the documented local shuffle stream
/// (splitmix-derived seed with tag 0xC11E, round, client 0).
inline ParameterSet centralized_training(const EncoderConfig& encoder, std::span<const TrainingExample> data,
                                         std::size_t rounds, std::size_t epochs, std::size_t batch_size,
                                         const AdamHyper& hyper, std::uint64_t seed) {
    auto params = init_params(encoder, seed);
    for (std::size_t r = 0; r < rounds; ++r) {
        auto state = AdamState::fresh(params, hyper);
        Rng rng(derive_seed(seed, 0xC11E, r, 0));
        for (std::size_t e = 0; e < epochs; ++e) {
            std::vector<std::size_t> order(data.size());
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(std::span<std::size_t>(order));
            for (std::size_t start = 0; start < order.size(); start += batch_size) {
                std::vector<TokenSequence> batch;
                std::vector<int> targets;
                for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
                    batch.push_back(data[order[i]].tokens);
                    targets.push_back(data[order[i]].label);
                }
                const auto step = loss_and_grad(params, encoder, batch, targets);
                adam_step(params, step.grads, state);
            }
        }
    }
    return params;
}

/// Per-class metrics by direct counting over the label pairs.
struct BruteForceMetrics {
    std::vector<double> precision, recall, f1;
    std::vector<std::uint64_t> support;
    double accuracy = 0.0;
    double macro_p = 0.0, macro_r = 0.0, macro_f1 = 0.0;
    double weighted_p = 0.0, weighted_r = 0.0, weighted_f1 = 0.0;
};

inline BruteForceMetrics brute_force_metrics(std::span<const int> y_true, std::span<const int> y_pred, std::size_t C) {
    BruteForceMetrics m;
    const double n = static_cast<double>(y_true.size());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) correct += y_true[i] == y_pred[i];
    m.accuracy = correct / n;
    for (std::size_t c = 0; c < C; ++c) {
        std::uint64_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < y_true.size(); ++i) {
            const bool t = y_true[i] == static_cast<int>(c), p = y_pred[i] == static_cast<int>(c);
            tp += t && p;
            fp += !t && p;
            fn += t && !p;
        }
        const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
        const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
        const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        m.precision.push_back(p);
        m.recall.push_back(r);
        m.f1.push_back(f);
        m.support.push_back(tp + fn);
        m.macro_p += p / C;
        m.macro_r += r / C;
        m.macro_f1 += f / C;
        m.weighted_p += p * double(tp + fn) / n;
        m.weighted_r += r * double(tp + fn) / n;
        m.weighted_f1 += f * double(tp + fn) / n;
    }
    return m;
}

/// Parameters with O(1) spread so every tensor carries a measurable gradient.
inline ParameterSet randomized_params(const EncoderConfig& c, std::uint64_t seed) {
    auto p = init_params(c, seed);
    Rng rng(seed ^ 0x9A7D);
    for (auto& t : p.tensors()) {
        const bool gain = t.name.find("gamma") != std::string::npos || t.name.find("gain") != std::string::npos;
        for (auto& v : t.values) v = gain ? 1.0 + rng.normal(0.0, 0.2) : rng.normal(0.0, 0.5);
    }
    return p;
}

struct GradientCheck {
    double max_relative_error = 0.0;
    std::string worst_tensor;
    std::size_t checked = 0;
};

/// Central finite differences on every scalar. Relative error uses
/// max(|analytic|, |numeric|, floor) as denominator so that near-zero entries
/// are judged on absolute error.
inline GradientCheck finite_difference_check(const ParameterSet& params, const EncoderConfig& c,
                                             std::span<const TokenSequence> batch, std::span<const int> targets,
                                             double h = 1e-5, double floor = 1e-4) {
    const auto analytic = loss_and_grad(params, c, batch, targets).grads;
    GradientCheck out;
    auto probe = params;
    for (std::size_t t = 0; t < probe.count(); ++t) {
        for (std::size_t i = 0; i < probe[t].values.size(); ++i) {
            const double saved = probe[t].values[i];
            probe[t].values[i] = saved + h;
            const double up = cross_entropy(forward_logits(probe, c, batch), targets);
            probe[t].values[i] = saved - h;
            const double down = cross_entropy(forward_logits(probe, c, batch), targets);
            probe[t].values[i] = saved;
            const double numeric = (up - down) / (2 * h);
            const double a = analytic[t].values[i];
            const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), floor});
            if (rel > out.max_relative_error) {
                out.max_relative_error = rel;
                out.worst_tensor = probe[t].name;
            }
            ++out.checked;
        }
    }
    return out;
}

inline double max_abs_diff(const ParameterSet& a, const ParameterSet& b) {
    double worst = 0.0;
    for (std::size_t t = 0; t < a.count(); ++t) {
        for (std::size_t i = 0; i < a[t].values.size(); ++i) {
            worst = std::max(worst, std::fabs(a[t].values[i] - b[t].values[i]));
        }
    }
    return worst;
}

}  // namespace fedids::testing
