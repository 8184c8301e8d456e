#include "useq/layers.hpp"

#include <cmath>

#include "useq/errors.hpp"
#include "useq/ops.hpp"

namespace useq {

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const DenseWeights<T>& w) {
    const std::size_t in = w.kernel.dim(0), out = w.kernel.dim(1);
    if (x.rank() == 0 || x.shape().back() != in)
        throw DimensionError("dense: input " + shape_string(x.shape()) +
                             " does not match kernel " + shape_string(w.kernel.shape()));
    if (x.rank() == 2) return add(matmul(x, w.kernel), w.bias);
    Shape out_shape = x.shape();
    out_shape.back() = out;
    auto flat = reshape(x, {x.numel() / in, in});
    return reshape(add(matmul(flat, w.kernel), w.bias), std::move(out_shape));
}

template <typename T>
BasicTensor<T> embed(const BasicTensor<T>& table, const TokenBatch& ids) {
    return embedding(table, ids.ids, ids.shape());
}

template <typename T>
BasicTensor<T> lstm_forward(const BasicTensor<T>& x, const LstmWeights<T>& w, bool reverse) {
    if (x.rank() != 3) throw DimensionError("lstm: expected [batch, time, features] input");
    const std::size_t batch = x.dim(0), steps = x.dim(1), in = x.dim(2);
    const std::size_t units = w.recurrent.dim(0);
    if (w.kernel.shape() != Shape{in, 4 * units} || w.recurrent.shape() != Shape{units, 4 * units} ||
        w.bias.shape() != Shape{4 * units})
        throw DimensionError("lstm: weights do not match input width " + std::to_string(in) +
                             " and " + std::to_string(units) + " units");

    // Input projections for all steps in one product: [batch, time, 4*units].
    const auto projected = dense(x, DenseWeights<T>{w.kernel, w.bias});

    BasicTensor<T> h, c;
    for (std::size_t i = 0; i < steps; ++i) {
        const std::size_t t = reverse ? steps - 1 - i : i;
        auto z = reshape(slice(projected, 1, t, t + 1), {batch, 4 * units});
        if (h.defined()) z = add(z, matmul(h, w.recurrent));
        auto in_gate = sigmoid(slice(z, 1, 0, units));
        auto forget_gate = sigmoid(slice(z, 1, units, 2 * units));
        auto candidate = tanh(slice(z, 1, 2 * units, 3 * units));
        auto out_gate = sigmoid(slice(z, 1, 3 * units, 4 * units));
        c = c.defined() ? add(mul(forget_gate, c), mul(in_gate, candidate))
                        : mul(in_gate, candidate);
        h = mul(out_gate, tanh(c));
    }
    return h;
}

template <typename T>
BasicTensor<T> bilstm_forward(const BasicTensor<T>& x, const LstmWeights<T>& forward,
                              const LstmWeights<T>& backward) {
    return concat<T>({lstm_forward(x, forward, false), lstm_forward(x, backward, true)}, 1);
}

template <typename T>
BasicTensor<T> tcn_sequence(const BasicTensor<T>& x,
                            const std::vector<TcnBlockWeights<T>>& blocks) {
    if (x.rank() != 3) throw DimensionError("tcn: expected [batch, time, features] input");
    BasicTensor<T> h = x;
    for (const auto& block : blocks) {
        auto conv = tanh(add(conv1d_causal(h, block.kernel, block.dilation), block.bias));
        auto residual = block.residual.kernel.defined() ? dense(h, block.residual) : h;
        h = tanh(add(conv, residual));
    }
    return h;
}

template <typename T>
BasicTensor<T> tcn_forward(const BasicTensor<T>& x, const std::vector<TcnBlockWeights<T>>& blocks) {
    auto seq = tcn_sequence(x, blocks);
    const std::size_t steps = seq.dim(1);
    return reshape(slice(seq, 1, steps - 1, steps), {seq.dim(0), seq.dim(2)});
}

template <typename T>
BasicTensor<T> multi_head_attention(const BasicTensor<T>& x, const AttentionWeights<T>& w,
                                    std::size_t num_heads, BasicTensor<T>* attention_out) {
    if (x.rank() != 3) throw DimensionError("attention: expected [batch, len, dim] input");
    const std::size_t batch = x.dim(0), len = x.dim(1), dim = x.dim(2);
    if (num_heads == 0 || dim % num_heads != 0)
        throw DimensionError("attention: width " + std::to_string(dim) +
                             " not divisible into " + std::to_string(num_heads) + " heads");
    const std::size_t head_dim = dim / num_heads;

    // [batch, len, dim] -> [batch*heads, len, head_dim]
    auto split_heads = [&](const BasicTensor<T>& t) {
        auto r = reshape(t, {batch, len, num_heads, head_dim});
        return reshape(permute(r, {0, 2, 1, 3}), {batch * num_heads, len, head_dim});
    };
    auto q = split_heads(dense(x, w.query));
    auto k = split_heads(dense(x, w.key));
    auto v = split_heads(dense(x, w.value));

    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(head_dim));
    auto weights = softmax_lastaxis(scale(bmm(q, transpose_last2(k)), inv_sqrt));
    if (attention_out) *attention_out = weights;

    auto context = reshape(bmm(weights, v), {batch, num_heads, len, head_dim});
    auto merged = reshape(permute(context, {0, 2, 1, 3}), {batch, len, dim});
    return dense(merged, w.output);
}

template <typename T>
BasicTensor<T> transformer_forward(const TokenBatch& ids, const TransformerWeights<T>& w,
                                   std::size_t num_heads, double layer_norm_eps,
                                   BasicTensor<T>* attention_out) {
    if (w.position_embedding.dim(0) != ids.length)
        throw DimensionError("transformer: sequence length " + std::to_string(ids.length) +
                             " does not match position table " +
                             shape_string(w.position_embedding.shape()));
    const T eps = static_cast<T>(layer_norm_eps);
    auto x = add(embed(w.token_embedding, ids), w.position_embedding);
    auto attended = multi_head_attention(x, w.attention, num_heads, attention_out);
    auto x1 = layer_norm(add(x, attended), w.norm1_gamma, w.norm1_beta, eps);
    auto ffn = dense(relu(dense(x1, w.ffn_hidden)), w.ffn_output);
    auto x2 = layer_norm(add(x1, ffn), w.norm2_gamma, w.norm2_beta, eps);
    return mean_over_axis(x2, 1);
}

template <typename T>
BasicTensor<T> head(const BasicTensor<T>& features, const DenseWeights<T>& w) {
    if (features.rank() != 2) throw DimensionError("head: expected [batch, features] input");
    return sigmoid(dense(features, w));
}

#define USEQ_INSTANTIATE_LAYERS(T)                                                            \
    template BasicTensor<T> dense(const BasicTensor<T>&, const DenseWeights<T>&);             \
    template BasicTensor<T> embed(const BasicTensor<T>&, const TokenBatch&);                  \
    template BasicTensor<T> lstm_forward(const BasicTensor<T>&, const LstmWeights<T>&, bool); \
    template BasicTensor<T> bilstm_forward(const BasicTensor<T>&, const LstmWeights<T>&,      \
                                           const LstmWeights<T>&);                            \
    template BasicTensor<T> tcn_sequence(const BasicTensor<T>&,                               \
                                         const std::vector<TcnBlockWeights<T>>&);             \
    template BasicTensor<T> tcn_forward(const BasicTensor<T>&,                                \
                                        const std::vector<TcnBlockWeights<T>>&);              \
    template BasicTensor<T> multi_head_attention(const BasicTensor<T>&,                       \
                                                 const AttentionWeights<T>&, std::size_t,     \
                                                 BasicTensor<T>*);                            \
    template BasicTensor<T> transformer_forward(const TokenBatch&,                            \
                                                const TransformerWeights<T>&, std::size_t,    \
                                                double, BasicTensor<T>*);                     \
    template BasicTensor<T> head(const BasicTensor<T>&, const DenseWeights<T>&);

USEQ_INSTANTIATE_LAYERS(float)
USEQ_INSTANTIATE_LAYERS(double)

#undef USEQ_INSTANTIATE_LAYERS

}  // namespace useq
