#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "useq/tensor.hpp"

namespace useq {

enum class ModelKind { multi_head_attention, tcn, lstm, bilstm };

// Short CLI names: mha, tcn, lstm, bilstm.
std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct ModelSpec {
    ModelKind kind = ModelKind::lstm;
    std::size_t vocab_size = 10000;
    std::size_t embed_dim = 50;
    std::size_t max_len = 100;
    double dropout_rate = 0.04;

    // attention
    std::size_t num_heads = 2;
    std::size_t ffn_hidden = 4;
    double layer_norm_eps = 1e-6;

    // temporal convolution
    std::size_t tcn_units = 126;
    std::size_t tcn_kernel = 2;
    std::vector<std::size_t> tcn_dilations = {1, 2, 4, 8, 16, 32};

    // recurrent
    std::size_t lstm_units = 256;
    std::size_t bilstm_units = 35;

    // Throws UsageError on an inconsistent spec.
    void validate() const;

    // Width of the pooled feature vector that feeds the output head.
    std::size_t feature_width() const;

    // Number of most recent steps that can influence the final TCN output.
    std::size_t tcn_receptive_field() const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

enum class ParamInit { glorot_uniform, orthogonal, zeros, ones, lstm_bias };

struct ParamDecl {
    std::string name;
    Shape shape;
    ParamInit init = ParamInit::zeros;
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
};

// Names and shapes are a pure function of the spec, in a fixed order.
std::vector<ParamDecl> declare_params(const ModelSpec& spec);

template <typename T>
class ModelParams {
public:
    struct Entry {
        std::string name;
        BasicTensor<T> tensor;
    };

    void add(std::string name, BasicTensor<T> tensor);
    // Throws ContractError when the name is unknown.
    const BasicTensor<T>& get(std::string_view name) const;
    BasicTensor<T>& get(std::string_view name);
    bool contains(std::string_view name) const;

    std::span<const Entry> entries() const noexcept { return entries_; }
    std::span<Entry> entries() noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t scalar_count() const;

    void zero_grad();

    // Throws ContractError if names or shapes differ from declare_params(spec).
    void check_against(const ModelSpec& spec) const;

    template <typename U>
    ModelParams<U> cast() const {
        ModelParams<U> out;
        for (const auto& e : entries_) out.add(e.name, e.tensor.template cast<U>());
        return out;
    }

private:
    std::vector<Entry> entries_;
};

extern template class ModelParams<float>;
extern template class ModelParams<double>;

// Fresh trainable parameters. Glorot-uniform for embeddings, kernels and
// gate weights; orthogonal recurrent matrices; zero biases except the LSTM
// forget gate (1.0); unit layer-norm scales.
ModelParams<float> init_params(const ModelSpec& spec, std::uint64_t seed);

}  // namespace useq
