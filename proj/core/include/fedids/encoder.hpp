#pragma once

// A small BERT-style encoder for sequence classification, written out by hand:
// token + learned position embeddings, post-norm transformer blocks with
// masked multi-head self-attention and a GELU feed-forward, a tanh pooler over
// the [CLS] position and a linear classifier. Gradients are analytic.

#include "fedids/params.hpp"
#include "fedids/tokenizer.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fedids {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct EncoderConfig {
    std::size_t vocab_size = 512;
    std::size_t d_model = 32;
    std::size_t n_heads = 2;
    std::size_t n_layers = 2;
    std::size_t d_ff = 64;
    std::size_t max_len = 64;
    std::size_t n_classes = 6;
    double layernorm_epsilon = 1e-5;

    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
    std::size_t head_dim() const { return d_model / n_heads; }

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Additive pre-softmax score for padded key positions.
inline constexpr double kMaskedScore = -1e9;

/// Weights ~ N(0, 0.02); biases and norm shifts 0; norm gains 1.
ParameterSet init_params(const EncoderConfig& config, std::uint64_t seed);

/// Tanh-approximated GELU and its derivative.
double gelu(double x);
double gelu_derivative(double x);

/// Intermediate activations kept for the backward pass. Rows of every
/// example in the batch are stacked; masked positions other than [CLS] are
/// dropped since nothing attends to them.
struct LayerCache {
    Matrix input;
    Matrix query, key, value;
    std::vector<Matrix> attention;  // example-major, one n x n probability matrix per head
    Matrix context;
    Matrix norm1_hat;
    Eigen::VectorXd norm1_inv_std;
    Matrix hidden1;
    Matrix ffn_pre;
    Matrix ffn_act;
    Matrix norm2_hat;
    Eigen::VectorXd norm2_inv_std;
};

struct ForwardCache {
    /// Example i owns rows [offsets[i], offsets[i + 1]).
    std::vector<Eigen::Index> offsets;
    std::vector<TokenId> ids;
    std::vector<std::uint32_t> positions;
    std::vector<std::uint8_t> mask;
    std::vector<LayerCache> layers;
    Matrix cls;     // batch x d_model
    Matrix pooled;  // batch x d_model
};

struct ForwardResult {
    Matrix logits;  // batch x n_classes
    ForwardCache cache;
};

/// Sequences may be shorter than config.max_len but not longer.
ForwardResult forward(const ParameterSet& params, const EncoderConfig& config,
                      std::span<const TokenSequence> batch);

/// Logits only; activations are discarded after each chunk of examples.
Matrix forward_logits(const ParameterSet& params, const EncoderConfig& config,
                      std::span<const TokenSequence> batch);

/// Row-wise softmax, max-shifted.
Matrix softmax_rows(const Matrix& logits);

struct LossAndGrad {
    double loss = 0.0;
    GradientSet grads;
};

/// Mean softmax cross-entropy over the batch and its gradient.
LossAndGrad loss_and_grad(const ParameterSet& params, const EncoderConfig& config,
                          std::span<const TokenSequence> batch, std::span<const int> targets);

/// Backward pass from an existing forward result.
GradientSet backward(const ParameterSet& params, const EncoderConfig& config,
                     const ForwardResult& forward_result, std::span<const int> targets);

double cross_entropy(const Matrix& logits, std::span<const int> targets);

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    friend bool operator==(const AdamHyper&, const AdamHyper&) = default;
};

struct AdamState {
    std::uint64_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    AdamHyper hyper;

    /// Zero moments shaped like `params`.
    static AdamState fresh(const ParameterSet& params, const AdamHyper& hyper);

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update, in place.
void adam_step(ParameterSet& params, const GradientSet& grads, AdamState& state);

/// Index of the largest entry; ties go to the smallest index.
int argmax(std::span<const double> row);

std::vector<int> predict(const ParameterSet& params, const EncoderConfig& config,
                         std::span<const TokenSequence> sequences);

}  // namespace fedids
