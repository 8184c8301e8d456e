#include "useq/model.hpp"

#include "useq/errors.hpp"
#include "useq/ops.hpp"

namespace useq {

namespace {

template <typename T>
DenseWeights<T> dense_weights(const ModelParams<T>& p, const std::string& prefix) {
    return {p.get(prefix + ".kernel"), p.get(prefix + ".bias")};
}

template <typename T>
LstmWeights<T> lstm_weights(const ModelParams<T>& p, const std::string& prefix) {
    return {p.get(prefix + ".kernel"), p.get(prefix + ".recurrent"), p.get(prefix + ".bias")};
}

template <typename T>
std::vector<TcnBlockWeights<T>> tcn_weights(const ModelSpec& spec, const ModelParams<T>& p) {
    std::vector<TcnBlockWeights<T>> blocks;
    for (std::size_t i = 0; i < spec.tcn_dilations.size(); ++i) {
        const std::string prefix = "tcn.block" + std::to_string(i);
        TcnBlockWeights<T> block;
        block.kernel = p.get(prefix + ".conv.kernel");
        block.bias = p.get(prefix + ".conv.bias");
        block.dilation = spec.tcn_dilations[i];
        if (p.contains(prefix + ".residual.kernel"))
            block.residual = dense_weights(p, prefix + ".residual");
        blocks.push_back(std::move(block));
    }
    return blocks;
}

template <typename T>
TransformerWeights<T> transformer_weights(const ModelParams<T>& p) {
    TransformerWeights<T> w;
    w.token_embedding = p.get("embedding.token");
    w.position_embedding = p.get("embedding.position");
    w.attention = {dense_weights(p, "attention.query"), dense_weights(p, "attention.key"),
                   dense_weights(p, "attention.value"), dense_weights(p, "attention.output")};
    w.norm1_gamma = p.get("norm1.gamma");
    w.norm1_beta = p.get("norm1.beta");
    w.ffn_hidden = dense_weights(p, "ffn.hidden");
    w.ffn_output = dense_weights(p, "ffn.output");
    w.norm2_gamma = p.get("norm2.gamma");
    w.norm2_beta = p.get("norm2.beta");
    return w;
}

}  // namespace

template <typename T>
BasicTensor<T> backbone_features(const ModelSpec& spec, const ModelParams<T>& params,
                                 const TokenBatch& ids) {
    params.check_against(spec);
    if (ids.length != spec.max_len)
        throw ContractError("token batch length " + std::to_string(ids.length) +
                            " differs from model max_len " + std::to_string(spec.max_len));
    if (ids.batch == 0 || ids.ids.size() != ids.batch * ids.length)
        throw ContractError("malformed token batch");

    switch (spec.kind) {
        case ModelKind::multi_head_attention:
            return transformer_forward(ids, transformer_weights(params), spec.num_heads,
                                       spec.layer_norm_eps);
        case ModelKind::tcn:
            return tcn_forward(embed(params.get("embedding.token"), ids),
                               tcn_weights(spec, params));
        case ModelKind::lstm:
            return lstm_forward(embed(params.get("embedding.token"), ids),
                                lstm_weights(params, "lstm"));
        case ModelKind::bilstm:
            return bilstm_forward(embed(params.get("embedding.token"), ids),
                                  lstm_weights(params, "bilstm.forward"),
                                  lstm_weights(params, "bilstm.backward"));
    }
    throw ContractError("unknown model kind");
}

template <typename T>
BasicTensor<T> forward(const ModelSpec& spec, const ModelParams<T>& params, const TokenBatch& ids,
                       bool training, Rng* dropout_rng) {
    auto features = backbone_features(spec, params, ids);
    if (training && spec.dropout_rate > 0.0) {
        if (!dropout_rng) throw ContractError("training forward pass needs a dropout generator");
        features = dropout(features, spec.dropout_rate, *dropout_rng);
    }
    return head(features, dense_weights(params, "head"));
}

std::vector<float> predict_probabilities(const ModelSpec& spec, const ModelParams<float>& params,
                                         const TokenBatch& ids) {
    NoGradGuard no_grad;
    auto probs = forward(spec, params, ids, false);
    auto values = probs.data();
    return {values.begin(), values.end()};
}

template BasicTensor<float> forward(const ModelSpec&, const ModelParams<float>&,
                                    const TokenBatch&, bool, Rng*);
template BasicTensor<double> forward(const ModelSpec&, const ModelParams<double>&,
                                     const TokenBatch&, bool, Rng*);
template BasicTensor<float> backbone_features(const ModelSpec&, const ModelParams<float>&,
                                              const TokenBatch&);
template BasicTensor<double> backbone_features(const ModelSpec&, const ModelParams<double>&,
                                               const TokenBatch&);

}  // namespace useq
