#include "fedids/encoder.hpp"

#include "fedids/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fedids {

namespace {

using ConstMatMap = Eigen::Map<const Matrix>;
using MatMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const RowVector>;
using RowMap = Eigen::Map<RowVector>;

// Tensor positions inside a ParameterSet.
constexpr std::size_t kTokenEmbedding = 0;
constexpr std::size_t kPositionEmbedding = 1;
constexpr std::size_t kFirstLayer = 2;

enum LayerSlot : std::size_t {
    kQueryW, kQueryB, kKeyW, kKeyB, kValueW, kValueB, kOutW, kOutB,
    kNorm1Gain, kNorm1Bias, kFfnInW, kFfnInB, kFfnOutW, kFfnOutB, kNorm2Gain, kNorm2Bias,
    kLayerSlots
};

std::size_t layer_tensor(std::size_t layer, LayerSlot slot) { return kFirstLayer + layer * kLayerSlots + slot; }
std::size_t pooler_w(const EncoderConfig& c) { return kFirstLayer + c.n_layers * kLayerSlots; }
std::size_t pooler_b(const EncoderConfig& c) { return pooler_w(c) + 1; }
std::size_t classifier_w(const EncoderConfig& c) { return pooler_w(c) + 2; }
std::size_t classifier_b(const EncoderConfig& c) { return pooler_w(c) + 3; }

ConstMatMap mat(const ParameterSet& p, std::size_t i) {
    const auto& t = p[i];
    return {t.values.data(), static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1])};
}

MatMap mat(ParameterSet& p, std::size_t i) {
    auto& t = p[i];
    return {t.values.data(), static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1])};
}

ConstRowMap vec(const ParameterSet& p, std::size_t i) {
    const auto& t = p[i];
    return {t.values.data(), static_cast<Eigen::Index>(t.values.size())};
}

RowMap vec(ParameterSet& p, std::size_t i) {
    auto& t = p[i];
    return {t.values.data(), static_cast<Eigen::Index>(t.values.size())};
}

using Shape = std::vector<std::uint32_t>;

Shape dims(std::size_t a) { return {static_cast<std::uint32_t>(a)}; }
Shape dims(std::size_t a, std::size_t b) { return {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)}; }

// Weights are drawn in canonical tensor order from a single stream.
void add_weight(ParameterSet& p, Rng& rng, std::string name, Shape shape) {
    auto& t = p.add(std::move(name), std::move(shape));
    for (auto& v : t.values) v = rng.normal(0.0, 0.02);
}

void check_layout(const ParameterSet& params, const EncoderConfig& config) {
    const std::size_t expected = kFirstLayer + config.n_layers * kLayerSlots + 4;
    if (params.count() != expected || params[kTokenEmbedding].shape != dims(config.vocab_size, config.d_model) ||
        params[kPositionEmbedding].shape != dims(config.max_len, config.d_model) ||
        params[classifier_w(config)].shape != dims(config.d_model, config.n_classes)) {
        throw std::invalid_argument("encoder: parameter set does not match the configuration");
    }
}

void layer_norm(const Matrix& x, ConstRowMap gain, ConstRowMap bias, double eps, Matrix& x_hat,
                Eigen::VectorXd& inv_std, Matrix& y) {
    const auto rows = x.rows();
    const auto cols = static_cast<double>(x.cols());
    x_hat.resize(rows, x.cols());
    inv_std.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double mean = x.row(r).sum() / cols;
        const RowVector centered = x.row(r).array() - mean;
        const double var = centered.squaredNorm() / cols;
        inv_std(r) = 1.0 / std::sqrt(var + eps);
        x_hat.row(r) = centered * inv_std(r);
    }
    y = (x_hat.array().rowwise() * gain.array()).rowwise() + bias.array();
}

// Returns d(input) and accumulates the gain/bias gradients.
Matrix layer_norm_backward(const Matrix& dy, const Matrix& x_hat, const Eigen::VectorXd& inv_std,
                           ConstRowMap gain, RowMap d_gain, RowMap d_bias) {
    d_gain += (dy.array() * x_hat.array()).colwise().sum().matrix();
    d_bias += dy.colwise().sum();
    const Matrix dx_hat = dy.array().rowwise() * gain.array();
    const double n = static_cast<double>(dy.cols());
    Matrix dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const double mean_d = dx_hat.row(r).sum() / n;
        const double mean_dx = dx_hat.row(r).dot(x_hat.row(r)) / n;
        dx.row(r) = inv_std(r) * (dx_hat.row(r).array() - mean_d - x_hat.row(r).array() * mean_dx).matrix();
    }
    return dx;
}

void softmax_in_place(Matrix& scores) {
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        const double m = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - m).exp();
        scores.row(r) /= scores.row(r).sum();
    }
}

void validate_sequence(const TokenSequence& seq, const EncoderConfig& config) {
    if (seq.ids.empty() || seq.ids.size() > config.max_len || seq.mask.size() != seq.ids.size()) {
        throw std::invalid_argument("encoder: sequence length must be in [1, max_len] with a matching mask");
    }
    for (const auto id : seq.ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size) {
            throw std::out_of_range("encoder: token id " + std::to_string(id) + " out of range");
        }
    }
}

// Rows that can reach the [CLS] output: position 0 and every unmasked position.
// Masked rows are never attended to, so dropping them leaves the result unchanged.
// A sequence with no unmasked position keeps every row.
void gather_rows(const TokenSequence& seq, ForwardCache& cache) {
    const bool any_open = std::any_of(seq.mask.begin(), seq.mask.end(), [](std::uint8_t m) { return m != 0; });
    for (std::size_t t = 0; t < seq.ids.size(); ++t) {
        if (!any_open || t == 0 || seq.mask[t] != 0) {
            cache.ids.push_back(seq.ids[t]);
            cache.positions.push_back(static_cast<std::uint32_t>(t));
            cache.mask.push_back(seq.mask[t]);
        }
    }
    cache.offsets.push_back(static_cast<Eigen::Index>(cache.ids.size()));
}

// Projections use coefficient-wise products so a row's values do not depend on
// where it sits in the stacked batch.
Matrix forward_batch(const ParameterSet& p, const EncoderConfig& config, std::span<const TokenSequence> batch,
                     ForwardCache& cache) {
    cache = ForwardCache{};
    cache.offsets.push_back(0);
    for (const auto& seq : batch) {
        validate_sequence(seq, config);
        gather_rows(seq, cache);
    }
    const auto B = static_cast<Eigen::Index>(batch.size());
    const auto N = static_cast<Eigen::Index>(cache.ids.size());
    const auto D = static_cast<Eigen::Index>(config.d_model);
    const auto dh = static_cast<Eigen::Index>(config.head_dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    cache.layers.resize(config.n_layers);

    const auto tok = mat(p, kTokenEmbedding);
    const auto pos = mat(p, kPositionEmbedding);
    Matrix x(N, D);
    for (Eigen::Index r = 0; r < N; ++r) {
        x.row(r) = tok.row(cache.ids[static_cast<std::size_t>(r)]) + pos.row(cache.positions[static_cast<std::size_t>(r)]);
    }

    for (std::size_t l = 0; l < config.n_layers; ++l) {
        auto& c = cache.layers[l];
        c.input = x;
        c.query = x.lazyProduct(mat(p, layer_tensor(l, kQueryW))).rowwise() + vec(p, layer_tensor(l, kQueryB));
        c.key = x.lazyProduct(mat(p, layer_tensor(l, kKeyW))).rowwise() + vec(p, layer_tensor(l, kKeyB));
        c.value = x.lazyProduct(mat(p, layer_tensor(l, kValueW))).rowwise() + vec(p, layer_tensor(l, kValueB));
        c.attention.resize(static_cast<std::size_t>(B) * config.n_heads);
        c.context.resize(N, D);
        for (Eigen::Index i = 0; i < B; ++i) {
            const auto o = cache.offsets[static_cast<std::size_t>(i)];
            const auto n = cache.offsets[static_cast<std::size_t>(i) + 1] - o;
            for (std::size_t h = 0; h < config.n_heads; ++h) {
                const auto off = static_cast<Eigen::Index>(h) * dh;
                Matrix scores = c.query.block(o, off, n, dh) * c.key.block(o, off, n, dh).transpose();
                scores *= scale;
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (cache.mask[static_cast<std::size_t>(o + j)] == 0) {
                        scores.col(j).array() += kMaskedScore;
                    }
                }
                softmax_in_place(scores);
                c.context.block(o, off, n, dh).noalias() = scores * c.value.block(o, off, n, dh);
                c.attention[static_cast<std::size_t>(i) * config.n_heads + h] = std::move(scores);
            }
        }
        Matrix r1 = c.context.lazyProduct(mat(p, layer_tensor(l, kOutW))).rowwise() + vec(p, layer_tensor(l, kOutB));
        r1 += x;
        layer_norm(r1, vec(p, layer_tensor(l, kNorm1Gain)), vec(p, layer_tensor(l, kNorm1Bias)),
                   config.layernorm_epsilon, c.norm1_hat, c.norm1_inv_std, c.hidden1);
        c.ffn_pre = c.hidden1.lazyProduct(mat(p, layer_tensor(l, kFfnInW))).rowwise() + vec(p, layer_tensor(l, kFfnInB));
        c.ffn_act = c.ffn_pre.unaryExpr([](double v) { return gelu(v); });
        Matrix r2 = c.ffn_act.lazyProduct(mat(p, layer_tensor(l, kFfnOutW))).rowwise() + vec(p, layer_tensor(l, kFfnOutB));
        r2 += c.hidden1;
        layer_norm(r2, vec(p, layer_tensor(l, kNorm2Gain)), vec(p, layer_tensor(l, kNorm2Bias)),
                   config.layernorm_epsilon, c.norm2_hat, c.norm2_inv_std, x);
    }

    cache.cls.resize(B, D);
    for (Eigen::Index i = 0; i < B; ++i) {
        cache.cls.row(i) = x.row(cache.offsets[static_cast<std::size_t>(i)]);
    }
    cache.pooled = (cache.cls.lazyProduct(mat(p, pooler_w(config))).rowwise() + vec(p, pooler_b(config))).array().tanh().matrix();
    Matrix logits = cache.pooled.lazyProduct(mat(p, classifier_w(config)));
    logits.rowwise() += vec(p, classifier_b(config));
    return logits;
}

// d_logits is batch x n_classes, already scaled by 1/batch.
void backward_batch(const ParameterSet& p, const EncoderConfig& config, const ForwardCache& cache,
                    const Matrix& d_logits, GradientSet& g) {
    const auto B = d_logits.rows();
    const auto N = static_cast<Eigen::Index>(cache.ids.size());
    const auto D = static_cast<Eigen::Index>(config.d_model);
    const auto dh = static_cast<Eigen::Index>(config.head_dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    mat(g, classifier_w(config)).noalias() += cache.pooled.transpose() * d_logits;
    vec(g, classifier_b(config)) += d_logits.colwise().sum();
    const Matrix d_pooled = d_logits * mat(p, classifier_w(config)).transpose();
    const Matrix d_pre = d_pooled.array() * (1.0 - cache.pooled.array().square());
    mat(g, pooler_w(config)).noalias() += cache.cls.transpose() * d_pre;
    vec(g, pooler_b(config)) += d_pre.colwise().sum();

    const Matrix d_cls = d_pre * mat(p, pooler_w(config)).transpose();
    Matrix dx = Matrix::Zero(N, D);
    for (Eigen::Index i = 0; i < B; ++i) {
        dx.row(cache.offsets[static_cast<std::size_t>(i)]) = d_cls.row(i);
    }

    Matrix dq(N, D);
    Matrix dk(N, D);
    Matrix dv(N, D);
    for (std::size_t li = config.n_layers; li-- > 0;) {
        const auto& c = cache.layers[li];
        const Matrix d_r2 = layer_norm_backward(dx, c.norm2_hat, c.norm2_inv_std, vec(p, layer_tensor(li, kNorm2Gain)),
                                                vec(g, layer_tensor(li, kNorm2Gain)), vec(g, layer_tensor(li, kNorm2Bias)));
        // Feed-forward branch.
        mat(g, layer_tensor(li, kFfnOutW)).noalias() += c.ffn_act.transpose() * d_r2;
        vec(g, layer_tensor(li, kFfnOutB)) += d_r2.colwise().sum();
        Matrix d_pre_ffn = d_r2 * mat(p, layer_tensor(li, kFfnOutW)).transpose();
        d_pre_ffn.array() *= c.ffn_pre.unaryExpr([](double v) { return gelu_derivative(v); }).array();
        mat(g, layer_tensor(li, kFfnInW)).noalias() += c.hidden1.transpose() * d_pre_ffn;
        vec(g, layer_tensor(li, kFfnInB)) += d_pre_ffn.colwise().sum();
        Matrix d_hidden1 = d_r2;
        d_hidden1.noalias() += d_pre_ffn * mat(p, layer_tensor(li, kFfnInW)).transpose();

        const Matrix d_r1 = layer_norm_backward(d_hidden1, c.norm1_hat, c.norm1_inv_std, vec(p, layer_tensor(li, kNorm1Gain)),
                                                vec(g, layer_tensor(li, kNorm1Gain)), vec(g, layer_tensor(li, kNorm1Bias)));
        // Attention branch.
        mat(g, layer_tensor(li, kOutW)).noalias() += c.context.transpose() * d_r1;
        vec(g, layer_tensor(li, kOutB)) += d_r1.colwise().sum();
        const Matrix d_context = d_r1 * mat(p, layer_tensor(li, kOutW)).transpose();

        for (Eigen::Index i = 0; i < B; ++i) {
            const auto o = cache.offsets[static_cast<std::size_t>(i)];
            const auto n = cache.offsets[static_cast<std::size_t>(i) + 1] - o;
            for (std::size_t h = 0; h < config.n_heads; ++h) {
                const auto off = static_cast<Eigen::Index>(h) * dh;
                const Matrix& prob = c.attention[static_cast<std::size_t>(i) * config.n_heads + h];
                const auto d_ctx_h = d_context.block(o, off, n, dh);
                const Matrix d_prob = d_ctx_h * c.value.block(o, off, n, dh).transpose();
                dv.block(o, off, n, dh).noalias() = prob.transpose() * d_ctx_h;
                const Eigen::VectorXd row_dot = (d_prob.array() * prob.array()).rowwise().sum();
                const Matrix d_scores = (prob.array() * (d_prob.array().colwise() - row_dot.array())) * scale;
                dq.block(o, off, n, dh).noalias() = d_scores * c.key.block(o, off, n, dh);
                dk.block(o, off, n, dh).noalias() = d_scores.transpose() * c.query.block(o, off, n, dh);
            }
        }
        mat(g, layer_tensor(li, kQueryW)).noalias() += c.input.transpose() * dq;
        vec(g, layer_tensor(li, kQueryB)) += dq.colwise().sum();
        mat(g, layer_tensor(li, kKeyW)).noalias() += c.input.transpose() * dk;
        vec(g, layer_tensor(li, kKeyB)) += dk.colwise().sum();
        mat(g, layer_tensor(li, kValueW)).noalias() += c.input.transpose() * dv;
        vec(g, layer_tensor(li, kValueB)) += dv.colwise().sum();

        dx = d_r1;
        dx.noalias() += dq * mat(p, layer_tensor(li, kQueryW)).transpose();
        dx.noalias() += dk * mat(p, layer_tensor(li, kKeyW)).transpose();
        dx.noalias() += dv * mat(p, layer_tensor(li, kValueW)).transpose();
    }

    auto d_tok = mat(g, kTokenEmbedding);
    auto d_pos = mat(g, kPositionEmbedding);
    for (Eigen::Index r = 0; r < N; ++r) {
        d_tok.row(cache.ids[static_cast<std::size_t>(r)]) += dx.row(r);
        d_pos.row(cache.positions[static_cast<std::size_t>(r)]) += dx.row(r);
    }
}

void check_targets(std::span<const int> targets, std::size_t batch, const EncoderConfig& config) {
    if (targets.size() != batch) {
        throw std::invalid_argument("encoder: target count does not match batch size");
    }
    for (const int t : targets) {
        if (t < 0 || static_cast<std::size_t>(t) >= config.n_classes) {
            throw std::out_of_range("encoder: target " + std::to_string(t) + " out of range");
        }
    }
}

}  // namespace

void EncoderConfig::validate() const {
    if (vocab_size < 1 || d_model < 1 || n_heads < 1 || n_layers < 1 || d_ff < 1 || max_len < 1) {
        throw std::invalid_argument("encoder config: all dimensions must be at least 1");
    }
    if (d_model % n_heads != 0) {
        throw std::invalid_argument("encoder config: d_model must be divisible by n_heads");
    }
    if (n_classes < 2) {
        throw std::invalid_argument("encoder config: n_classes must be at least 2");
    }
    if (!(layernorm_epsilon > 0.0)) {
        throw std::invalid_argument("encoder config: layernorm_epsilon must be positive");
    }
}

double gelu(double x) {
    constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
    return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

double gelu_derivative(double x) {
    constexpr double c = 0.7978845608028654;
    const double th = std::tanh(c * (x + 0.044715 * x * x * x));
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * c * (1.0 + 3.0 * 0.044715 * x * x);
}

ParameterSet init_params(const EncoderConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    const auto D = config.d_model;
    ParameterSet p;
    add_weight(p, rng, "embeddings.token", dims(config.vocab_size, D));
    add_weight(p, rng, "embeddings.position", dims(config.max_len, D));
    for (std::size_t l = 0; l < config.n_layers; ++l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        add_weight(p, rng, pre + "attention.query.weight", dims(D, D));
        p.add(pre + "attention.query.bias", dims(D));
        add_weight(p, rng, pre + "attention.key.weight", dims(D, D));
        p.add(pre + "attention.key.bias", dims(D));
        add_weight(p, rng, pre + "attention.value.weight", dims(D, D));
        p.add(pre + "attention.value.bias", dims(D));
        add_weight(p, rng, pre + "attention.output.weight", dims(D, D));
        p.add(pre + "attention.output.bias", dims(D));
        p.add(pre + "attention_norm.gain", dims(D), 1.0);
        p.add(pre + "attention_norm.bias", dims(D));
        add_weight(p, rng, pre + "ffn.in.weight", dims(D, config.d_ff));
        p.add(pre + "ffn.in.bias", dims(config.d_ff));
        add_weight(p, rng, pre + "ffn.out.weight", dims(config.d_ff, D));
        p.add(pre + "ffn.out.bias", dims(D));
        p.add(pre + "output_norm.gain", dims(D), 1.0);
        p.add(pre + "output_norm.bias", dims(D));
    }
    add_weight(p, rng, "pooler.weight", dims(D, D));
    p.add("pooler.bias", dims(D));
    add_weight(p, rng, "classifier.weight", dims(D, config.n_classes));
    p.add("classifier.bias", dims(config.n_classes));
    return p;
}

ForwardResult forward(const ParameterSet& params, const EncoderConfig& config,
                      std::span<const TokenSequence> batch) {
    config.validate();
    check_layout(params, config);
    if (batch.empty()) {
        throw std::invalid_argument("encoder: empty batch");
    }
    ForwardResult out;
    out.logits = forward_batch(params, config, batch, out.cache);
    return out;
}

Matrix forward_logits(const ParameterSet& params, const EncoderConfig& config,
                      std::span<const TokenSequence> batch) {
    config.validate();
    check_layout(params, config);
    if (batch.empty()) {
        throw std::invalid_argument("encoder: empty batch");
    }
    constexpr std::size_t kChunk = 64;
    Matrix logits(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(config.n_classes));
    ForwardCache scratch;
    for (std::size_t i = 0; i < batch.size(); i += kChunk) {
        const auto n = std::min(kChunk, batch.size() - i);
        logits.middleRows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) =
            forward_batch(params, config, batch.subspan(i, n), scratch);
    }
    return logits;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out = logits;
    softmax_in_place(out);
    return out;
}

double cross_entropy(const Matrix& logits, std::span<const int> targets) {
    double total = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
        total += lse - logits(r, targets[static_cast<std::size_t>(r)]);
    }
    return total / static_cast<double>(logits.rows());
}

GradientSet backward(const ParameterSet& params, const EncoderConfig& config,
                     const ForwardResult& forward_result, std::span<const int> targets) {
    const auto batch = static_cast<std::size_t>(forward_result.logits.rows());
    check_targets(targets, batch, config);
    if (forward_result.cache.offsets.size() != batch + 1) {
        throw std::invalid_argument("encoder: forward cache does not match the logits");
    }
    GradientSet grads(params.zeros_like());
    Matrix d_logits = softmax_rows(forward_result.logits);
    for (std::size_t i = 0; i < batch; ++i) {
        d_logits(static_cast<Eigen::Index>(i), targets[i]) -= 1.0;
    }
    d_logits /= static_cast<double>(batch);
    backward_batch(params, config, forward_result.cache, d_logits, grads);
    return grads;
}

LossAndGrad loss_and_grad(const ParameterSet& params, const EncoderConfig& config,
                          std::span<const TokenSequence> batch, std::span<const int> targets) {
    check_targets(targets, batch.size(), config);
    const auto fwd = forward(params, config, batch);
    LossAndGrad out;
    out.loss = cross_entropy(fwd.logits, targets);
    out.grads = backward(params, config, fwd, targets);
    return out;
}

AdamState AdamState::fresh(const ParameterSet& params, const AdamHyper& hyper) {
    AdamState s;
    s.hyper = hyper;
    for (const auto& t : params.tensors()) {
        s.first_moment.emplace_back(t.size(), 0.0);
        s.second_moment.emplace_back(t.size(), 0.0);
    }
    return s;
}

void adam_step(ParameterSet& params, const GradientSet& grads, AdamState& state) {
    require_same_layout(params, grads, "adam_step");
    if (state.first_moment.size() != params.count() || state.second_moment.size() != params.count()) {
        throw std::invalid_argument("adam_step: optimizer state does not match parameters");
    }
    for (std::size_t i = 0; i < params.count(); ++i) {
        if (state.first_moment[i].size() != params[i].size() || state.second_moment[i].size() != params[i].size()) {
            throw std::invalid_argument("adam_step: optimizer state does not match parameters");
        }
    }
    const auto& h = state.hyper;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(h.beta1, t);
    const double bias2 = 1.0 - std::pow(h.beta2, t);
    for (std::size_t i = 0; i < params.count(); ++i) {
        auto& w = params[i].values;
        const auto& g = grads[i].values;
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
            v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
            w[j] -= h.learning_rate * (m[j] / bias1) / (std::sqrt(v[j] / bias2) + h.epsilon);
        }
    }
}

int argmax(std::span<const double> row) {
    if (row.empty()) {
        throw std::invalid_argument("argmax: empty row");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < row.size(); ++i) {
        if (row[i] > row[best]) best = i;
    }
    return static_cast<int>(best);
}

std::vector<int> predict(const ParameterSet& params, const EncoderConfig& config,
                         std::span<const TokenSequence> sequences) {
    std::vector<int> out;
    out.reserve(sequences.size());
    if (sequences.empty()) return out;
    const Matrix logits = forward_logits(params, config, sequences);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const RowVector row = logits.row(r);
        out.push_back(argmax(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
    }
    return out;
}

}  // namespace fedids
