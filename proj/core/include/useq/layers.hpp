#pragma once

// Building blocks of the four sequence classifiers. Each takes its weights
// explicitly so the same code runs on float and double parameter sets.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "useq/tensor.hpp"

namespace useq {

// Row-major [batch, length] token ids, already padded.
struct TokenBatch {
    std::size_t batch = 0;
    std::size_t length = 0;
    std::vector<std::int32_t> ids;

    Shape shape() const { return {batch, length}; }
};

template <typename T>
struct DenseWeights {
    BasicTensor<T> kernel;  // [in, out]
    BasicTensor<T> bias;    // [out]
};

// Gate order along the 4*units axis: input, forget, cell, output.
template <typename T>
struct LstmWeights {
    BasicTensor<T> kernel;     // [in, 4*units]
    BasicTensor<T> recurrent;  // [units, 4*units]
    BasicTensor<T> bias;       // [4*units]
};

template <typename T>
struct TcnBlockWeights {
    BasicTensor<T> kernel;  // [k, cin, units]
    BasicTensor<T> bias;    // [units]
    std::size_t dilation = 1;
    // Present only when cin != units.
    DenseWeights<T> residual;
};

template <typename T>
struct AttentionWeights {
    DenseWeights<T> query, key, value, output;
};

template <typename T>
struct TransformerWeights {
    BasicTensor<T> token_embedding;     // [vocab, dim]
    BasicTensor<T> position_embedding;  // [max_len, dim]
    AttentionWeights<T> attention;
    BasicTensor<T> norm1_gamma, norm1_beta;
    DenseWeights<T> ffn_hidden, ffn_output;
    BasicTensor<T> norm2_gamma, norm2_beta;
};

// x: [..., in] -> [..., out]
template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const DenseWeights<T>& w);

// [batch, len] -> [batch, len, dim]
template <typename T>
BasicTensor<T> embed(const BasicTensor<T>& table, const TokenBatch& ids);

// x: [batch, time, in] -> final hidden state [batch, units]. With reverse
// set the sequence is consumed from the last step to the first.
template <typename T>
BasicTensor<T> lstm_forward(const BasicTensor<T>& x, const LstmWeights<T>& w,
                            bool reverse = false);

// Concatenation [forward final state, backward final state]: [batch, 2*units].
template <typename T>
BasicTensor<T> bilstm_forward(const BasicTensor<T>& x, const LstmWeights<T>& forward,
                              const LstmWeights<T>& backward);

// Residual stack of dilated causal convolutions; block output is
// tanh(tanh(conv(x) + b) + residual(x)). Returns the last step: [batch, units].
template <typename T>
BasicTensor<T> tcn_forward(const BasicTensor<T>& x, const std::vector<TcnBlockWeights<T>>& blocks);

// Same stack, keeping every time step: [batch, time, units].
template <typename T>
BasicTensor<T> tcn_sequence(const BasicTensor<T>& x, const std::vector<TcnBlockWeights<T>>& blocks);

// Scaled dot-product self-attention over x: [batch, len, dim] -> same shape.
// If attention_out is given it receives the softmax weights [batch*heads, len, len].
template <typename T>
BasicTensor<T> multi_head_attention(const BasicTensor<T>& x, const AttentionWeights<T>& w,
                                    std::size_t num_heads,
                                    BasicTensor<T>* attention_out = nullptr);

// Token + position embedding, one post-norm transformer block, then global
// average pooling over time: [batch, len] -> [batch, dim].
template <typename T>
BasicTensor<T> transformer_forward(const TokenBatch& ids, const TransformerWeights<T>& w,
                                   std::size_t num_heads, double layer_norm_eps,
                                   BasicTensor<T>* attention_out = nullptr);

// Single sigmoid unit: [batch, features] -> probabilities [batch, 1].
template <typename T>
BasicTensor<T> head(const BasicTensor<T>& features, const DenseWeights<T>& w);

}  // namespace useq
