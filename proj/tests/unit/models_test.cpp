#include <gtest/gtest.h>

#include <cmath>

#include "toy.hpp"
#include "useq/errors.hpp"
#include "useq/layers.hpp"
#include "useq/model.hpp"
#include "useq/ops.hpp"

using namespace useq;
using namespace useq::testing;

namespace {

ModelParams<double> toy_params(const ModelSpec& spec, std::uint64_t seed = kGradcheckParamSeed) {
    return init_params(spec, seed).cast<double>();
}

void zero_all(ModelParams<float>& params) {
    for (auto& e : params.entries())
        for (auto& v : e.tensor.mutable_data()) v = 0.0f;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TransformerWeights<float> transformer_from(const ModelParams<float>& p) {
    auto dw = [&](const std::string& n) {
        return DenseWeights<float>{p.get(n + ".kernel"), p.get(n + ".bias")};
    };
    TransformerWeights<float> w;
    w.token_embedding = p.get("embedding.token");
    w.position_embedding = p.get("embedding.position");
    w.attention = {dw("attention.query"), dw("attention.key"), dw("attention.value"),
                   dw("attention.output")};
    w.norm1_gamma = p.get("norm1.gamma");
    w.norm1_beta = p.get("norm1.beta");
    w.ffn_hidden = dw("ffn.hidden");
    w.ffn_output = dw("ffn.output");
    w.norm2_gamma = p.get("norm2.gamma");
    w.norm2_beta = p.get("norm2.beta");
    return w;
}

std::vector<float> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(Embed, LookupAndScatter) {
    auto table = Tensor::from_data({4, 2}, {0, 0, 1, 1, 2, 2, 3, 3}, true);
    TokenBatch ids{1, 3, {3, 0, 3}};
    auto y = embed(table, ids);
    EXPECT_EQ(y.shape(), (Shape{1, 3, 2}));
    EXPECT_EQ(values(y), (std::vector<float>{3, 3, 0, 0, 3, 3}));
    sum(y).backward();
    EXPECT_EQ(std::vector<float>(table.grad().begin(), table.grad().end()),
              (std::vector<float>{1, 1, 0, 0, 0, 0, 2, 2}));
    TokenBatch bad{1, 1, {4}};
    EXPECT_THROW(embed(table, bad), ContractError);
}

TEST(Embed, DefaultDimensions) {
    auto table = Tensor::zeros({10000, 50});
    auto y = embed(table, random_batch(32, 100, 10000, 1));
    EXPECT_EQ(y.shape(), (Shape{32, 100, 50}));
}

TEST(Lstm, ZeroWeightsGiveZeroState) {
    LstmWeights<float> w{Tensor::zeros({3, 8}), Tensor::zeros({2, 8}), Tensor::zeros({8})};
    auto h = lstm_forward(Tensor::full({2, 5, 3}, 0.7f), w);
    EXPECT_EQ(h.shape(), (Shape{2, 2}));
    for (float v : h.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Lstm, SingleStepMatchesHandComputedCell) {
    // One input, one unit; gate order input, forget, cell, output.
    const double x = 0.8;
    const double wi = 0.5, wf = -0.3, wc = 0.9, wo = 0.2;
    const double bi = 0.1, bf = 1.0, bc = -0.2, bo = 0.05;
    LstmWeights<double> w{TensorD::from_data({1, 4}, {wi, wf, wc, wo}),
                          TensorD::from_data({1, 4}, {0.4, 0.4, 0.4, 0.4}),
                          TensorD::from_data({4}, {bi, bf, bc, bo})};
    auto h = lstm_forward(TensorD::from_data({1, 1, 1}, {x}), w);
    const double i = sigmoid(wi * x + bi), o = sigmoid(wo * x + bo);
    const double g = std::tanh(wc * x + bc);
    const double c = i * g;  // previous cell state is zero
    EXPECT_NEAR(h.item(), o * std::tanh(c), 1e-14);
}

TEST(Lstm, TwoStepsMatchHandRecurrence) {
    const double xs[2] = {0.8, -0.5};
    const double k[4] = {0.5, -0.3, 0.9, 0.2}, r[4] = {0.3, -0.6, 0.7, 0.1};
    const double b[4] = {0.1, 1.0, -0.2, 0.05};
    LstmWeights<double> w{TensorD::from_data({1, 4}, {k[0], k[1], k[2], k[3]}),
                          TensorD::from_data({1, 4}, {r[0], r[1], r[2], r[3]}),
                          TensorD::from_data({4}, {b[0], b[1], b[2], b[3]})};
    double h = 0, c = 0;
    for (double x : xs) {
        const double i = sigmoid(k[0] * x + r[0] * h + b[0]);
        const double f = sigmoid(k[1] * x + r[1] * h + b[1]);
        const double g = std::tanh(k[2] * x + r[2] * h + b[2]);
        const double o = sigmoid(k[3] * x + r[3] * h + b[3]);
        c = f * c + i * g;
        h = o * std::tanh(c);
    }
    EXPECT_NEAR(lstm_forward(TensorD::from_data({1, 2, 1}, {xs[0], xs[1]}), w).item(), h, 1e-14);
}

TEST(Lstm, ThreeStepGradientCheck) {
    Rng rng(8);
    auto rnd = [&](Shape s) {
        std::vector<double> v(shape_numel(s));
        for (auto& x : v) x = rng.uniform(-0.8, 0.8);
        return TensorD::from_data(std::move(s), std::move(v), true);
    };
    auto x = rnd({2, 3, 3});
    LstmWeights<double> w{rnd({3, 8}), rnd({2, 8}), rnd({8})};
    std::vector<TensorD*> all = {&x, &w.kernel, &w.recurrent, &w.bias};
    auto loss = [&] {
        auto h = lstm_forward(x, w);
        return sum(mul(h, h));
    };
    loss().backward();
    for (TensorD* t : all) {
        const std::vector<double> analytic(t->grad().begin(), t->grad().end());
        auto v = t->mutable_data();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double saved = v[i];
            NoGradGuard guard;
            v[i] = saved + 1e-3;
            const double plus = loss().item();
            v[i] = saved - 1e-3;
            const double minus = loss().item();
            v[i] = saved;
            EXPECT_LE(relative_error(analytic[i], (plus - minus) / 2e-3), 1e-3);
        }
    }
}

TEST(BiLstm, PalindromeWithTiedWeightsGivesEqualHalves) {
    Rng rng(4);
    std::vector<float> k(3 * 12), r(3 * 12), b(12);
    for (auto* v : {&k, &r, &b})
        for (auto& x : *v) x = static_cast<float>(rng.uniform(-1, 1));
    LstmWeights<float> w{Tensor::from_data({3, 12}, k), Tensor::from_data({3, 12}, r),
                         Tensor::from_data({12}, b)};
    // Steps a, b, c, b, a.
    const float steps[3][3] = {{0.1f, -0.4f, 0.9f}, {0.5f, 0.2f, -0.7f}, {-0.3f, 0.8f, 0.0f}};
    std::vector<float> x;
    for (int t : {0, 1, 2, 1, 0}) x.insert(x.end(), steps[t], steps[t] + 3);
    auto y = bilstm_forward(Tensor::from_data({1, 5, 3}, x), w, w);
    ASSERT_EQ(y.shape(), (Shape{1, 6}));
    for (std::size_t u = 0; u < 3; ++u) EXPECT_EQ(y.data()[u], y.data()[3 + u]);
}

TEST(BiLstm, ZeroWeightsAndDefaultWidth) {
    ModelSpec spec;
    spec.kind = ModelKind::bilstm;
    spec.vocab_size = 50;
    spec.max_len = 10;
    auto params = init_params(spec, 1);
    EXPECT_EQ(spec.feature_width(), 70u);
    auto features = backbone_features(spec, params, random_batch(3, 10, 50, 2));
    EXPECT_EQ(features.shape(), (Shape{3, 70}));
    zero_all(params);
    const auto zeroed = backbone_features(spec, params, random_batch(3, 10, 50, 2));
    for (float v : zeroed.data()) EXPECT_EQ(v, 0.0f);
}

TEST(BiLstm, BackwardDirectionReadsReversedSequence) {
    Rng rng(6);
    std::vector<float> k(2 * 8), r(2 * 8), b(8);
    for (auto* v : {&k, &r, &b})
        for (auto& x : *v) x = static_cast<float>(rng.uniform(-1, 1));
    LstmWeights<float> w{Tensor::from_data({2, 8}, k), Tensor::from_data({2, 8}, r),
                         Tensor::from_data({8}, b)};
    const std::vector<float> x = {1, 2, 3, 4, 5, 6};
    const std::vector<float> reversed = {5, 6, 3, 4, 1, 2};
    auto backward = lstm_forward(Tensor::from_data({1, 3, 2}, x), w, true);
    auto forward_on_reversed = lstm_forward(Tensor::from_data({1, 3, 2}, reversed), w);
    EXPECT_EQ(values(backward), values(forward_on_reversed));
}

TEST(Tcn, ReceptiveFieldIs64) {
    ModelSpec spec;
    spec.kind = ModelKind::tcn;
    spec.vocab_size = 30;
    spec.max_len = 100;
    spec.embed_dim = 6;
    spec.tcn_units = 5;
    EXPECT_EQ(spec.tcn_receptive_field(), 64u);
    const auto params = init_params(spec, 3);
    auto base = random_batch(1, 100, 30, 9);
    for (auto& id : base.ids) id = 1 + (id % 29);  // no padding, so every step is a token
    const auto reference = values(backbone_features(spec, params, base));

    // Steps 0..35 lie outside the last 64 steps.
    for (std::size_t t : {0u, 20u, 35u}) {
        auto probe = base;
        probe.ids[t] = probe.ids[t] == 7 ? 8 : 7;
        EXPECT_EQ(values(backbone_features(spec, params, probe)), reference) << "step " << t;
    }
    for (std::size_t t : {36u, 60u, 99u}) {
        auto probe = base;
        probe.ids[t] = probe.ids[t] == 7 ? 8 : 7;
        EXPECT_NE(values(backbone_features(spec, params, probe)), reference) << "step " << t;
    }
}

TEST(Tcn, ZeroWeightsAndDefaultShape) {
    ModelSpec spec;
    spec.kind = ModelKind::tcn;
    spec.vocab_size = 40;
    spec.max_len = 100;
    auto params = init_params(spec, 2);
    auto batch = random_batch(2, 100, 40, 3);
    EXPECT_EQ(backbone_features(spec, params, batch).shape(), (Shape{2, 126}));
    zero_all(params);
    const auto zeroed = backbone_features(spec, params, batch);
    for (float v : zeroed.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Tcn, SequenceOutputIsCausal) {
    ModelSpec spec = toy_spec(ModelKind::tcn);
    spec.max_len = 12;
    const auto params = init_params(spec, 4);
    std::vector<TcnBlockWeights<float>> blocks;
    for (std::size_t i = 0; i < spec.tcn_dilations.size(); ++i) {
        const std::string p = "tcn.block" + std::to_string(i);
        TcnBlockWeights<float> b{params.get(p + ".conv.kernel"), params.get(p + ".conv.bias"),
                                 spec.tcn_dilations[i], {}};
        if (params.contains(p + ".residual.kernel"))
            b.residual = {params.get(p + ".residual.kernel"), params.get(p + ".residual.bias")};
        blocks.push_back(b);
    }
    Rng rng(1);
    std::vector<float> x(12 * 8);
    for (auto& v : x) v = static_cast<float>(rng.uniform(-1, 1));
    auto changed = x;
    for (std::size_t i = 6 * 8; i < x.size(); ++i) changed[i] += 1.0f;
    auto a = tcn_sequence(Tensor::from_data({1, 12, 8}, x), blocks);
    auto b = tcn_sequence(Tensor::from_data({1, 12, 8}, changed), blocks);
    for (std::size_t i = 0; i < 6 * 4; ++i) EXPECT_EQ(a.data()[i], b.data()[i]);
    EXPECT_NE(a.data()[6 * 4], b.data()[6 * 4]);
}

TEST(Attention, ZeroQueryKeyGivesUniformWeights) {
    ModelSpec spec = toy_spec(ModelKind::multi_head_attention);
    auto params = init_params(spec, 7);
    for (const char* n : {"attention.query.kernel", "attention.query.bias", "attention.key.kernel",
                          "attention.key.bias"})
        for (auto& v : params.get(n).mutable_data()) v = 0.0f;
    Tensor attn;
    transformer_forward(random_batch(3, 6, 20, 4), transformer_from(params), 2, 1e-6, &attn);
    EXPECT_EQ(attn.shape(), (Shape{6, 6, 6}));
    for (float v : attn.data()) EXPECT_EQ(v, 1.0f / 6.0f);
}

TEST(Attention, RowsSumToOne) {
    ModelSpec spec = toy_spec(ModelKind::multi_head_attention);
    const auto params = init_params(spec, 8);
    Tensor attn;
    transformer_forward(random_batch(4, 6, 20, 5), transformer_from(params), 2, 1e-6, &attn);
    for (std::size_t r = 0; r < attn.numel() / 6; ++r) {
        double total = 0;
        for (std::size_t i = 0; i < 6; ++i) total += attn.data()[r * 6 + i];
        EXPECT_NEAR(total, 1.0, 1e-6);
    }
}

TEST(Attention, PositionTableBreaksPermutationInvariance) {
    ModelSpec spec = toy_spec(ModelKind::multi_head_attention);
    auto params = init_params(spec, 9);
    TokenBatch a{1, 6, {3, 4, 5, 6, 7, 8}};
    TokenBatch b{1, 6, {4, 3, 5, 6, 7, 8}};  // first two positions swapped
    auto pooled = [&](const TokenBatch& ids) {
        return values(transformer_forward(ids, transformer_from(params), 2, 1e-6));
    };
    EXPECT_NE(pooled(a), pooled(b));
    for (auto& v : params.get("embedding.position").mutable_data()) v = 0.0f;
    const auto pa = pooled(a), pb = pooled(b);
    for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(pa[i], pb[i], 1e-6);
}

TEST(Attention, DefaultPooledShape) {
    ModelSpec spec;
    spec.kind = ModelKind::multi_head_attention;
    spec.vocab_size = 60;
    const auto params = init_params(spec, 1);
    EXPECT_EQ(backbone_features(spec, params, random_batch(2, 100, 60, 1)).shape(),
              (Shape{2, 50}));
}

TEST(Head, ZeroWeightsGiveOneHalfAndMonotone) {
    DenseWeights<float> w{Tensor::zeros({3, 1}), Tensor::zeros({1})};
    auto p = head(Tensor::full({32, 3}, 4.0f), w);
    EXPECT_EQ(p.shape(), (Shape{32, 1}));
    for (float v : p.data()) EXPECT_EQ(v, 0.5f);

    DenseWeights<float> one{Tensor::full({1, 1}, 1.0f), Tensor::zeros({1})};
    auto q = head(Tensor::from_data({3, 1}, {-1.0f, 0.0f, 2.0f}), one);
    EXPECT_LT(q.data()[0], q.data()[1]);
    EXPECT_LT(q.data()[1], q.data()[2]);
}

TEST(Forward, AllKindsShareInputAndOutputShapes) {
    for (ModelKind kind : kAllKinds) {
        ModelSpec spec;
        spec.kind = kind;
        spec.vocab_size = 80;
        spec.embed_dim = 10;
        spec.lstm_units = 6;
        spec.bilstm_units = 5;
        spec.tcn_units = 7;
        const auto params = init_params(spec, 1);
        auto p = forward(spec, params, random_batch(3, 100, 80, 2), false);
        EXPECT_EQ(p.shape(), (Shape{3, 1})) << to_string(kind);
        for (float v : p.data()) {
            EXPECT_GT(v, 0.0f);
            EXPECT_LT(v, 1.0f);
        }
    }
}

TEST(Forward, InferenceIsDeterministicAndDropoutReplays) {
    for (ModelKind kind : kAllKinds) {
        ModelSpec spec = toy_spec(kind);
        spec.dropout_rate = 0.5;
        const auto params = init_params(spec, 2);
        const auto batch = random_batch(4, 6, 20, 3);
        EXPECT_EQ(values(forward(spec, params, batch, false)),
                  values(forward(spec, params, batch, false)));
        Rng a(10), b(10);
        EXPECT_EQ(values(forward(spec, params, batch, true, &a)),
                  values(forward(spec, params, batch, true, &b)));
        EXPECT_THROW(forward(spec, params, batch, true), ContractError);
    }
}

TEST(Forward, DropoutScalesKeptFeatures) {
    ModelSpec spec = toy_spec(ModelKind::lstm);
    const auto params = init_params(spec, 2);
    const auto batch = random_batch(64, 6, 20, 3);
    // Reconstruct the training-mode output from features and the replayed mask.
    auto features = backbone_features(spec, params, batch);
    Rng mask_rng(77), run_rng(77);
    auto dropped = dropout(features, spec.dropout_rate, mask_rng);
    auto expected = head(dropped, DenseWeights<float>{params.get("head.kernel"),
                                                      params.get("head.bias")});
    EXPECT_EQ(values(forward(spec, params, batch, true, &run_rng)), values(expected));
    std::size_t kept = 0;
    for (std::size_t i = 0; i < features.numel(); ++i) {
        if (dropped.data()[i] == 0.0f) continue;
        ++kept;
        EXPECT_FLOAT_EQ(dropped.data()[i], features.data()[i] / 0.96f);
    }
    EXPECT_GT(kept, features.numel() * 9 / 10);
}

TEST(Forward, MismatchedParamsRejected) {
    ModelSpec spec = toy_spec(ModelKind::lstm);
    const auto params = init_params(spec, 1);
    ModelSpec other = spec;
    other.lstm_units = 5;
    EXPECT_THROW(forward(other, params, random_batch(2, 6, 20, 1), false), ContractError);
    EXPECT_THROW(forward(spec, params, random_batch(2, 5, 20, 1), false), ContractError);
}

TEST(Params, AuditMatchesAnalyticCounts) {
    const std::size_t V = 10000, L = 100, E = 50;
    const std::size_t F = 4, U = 126, K = 2, H = 256, B = 35;
    const std::size_t embedding = V * E;
    auto dense = [](std::size_t in, std::size_t out) { return in * out + out; };
    auto lstm = [](std::size_t in, std::size_t u) { return 4 * u * (in + u) + 4 * u; };

    const std::size_t mha = embedding + L * E + 4 * dense(E, E) + 4 * E + dense(E, F) +
                            dense(F, E) + dense(E, 1);
    const std::size_t tcn = embedding + (K * E * U + U) + dense(E, U) + 5 * (K * U * U + U) +
                            dense(U, 1);
    const std::size_t lstm_total = embedding + lstm(E, H) + dense(H, 1);
    const std::size_t bilstm_total = embedding + 2 * lstm(E, B) + dense(2 * B, 1);

    const std::pair<ModelKind, std::size_t> expected[] = {
        {ModelKind::multi_head_attention, mha},
        {ModelKind::tcn, tcn},
        {ModelKind::lstm, lstm_total},
        {ModelKind::bilstm, bilstm_total}};
    for (const auto& [kind, count] : expected) {
        ModelSpec spec;
        spec.kind = kind;
        EXPECT_EQ(init_params(spec, 1).scalar_count(), count) << to_string(kind);
        std::size_t declared = 0;
        for (const auto& d : declare_params(spec)) declared += shape_numel(d.shape);
        EXPECT_EQ(declared, count);
    }
    EXPECT_EQ(mha, 515905u);
}

TEST(Params, InitializationIsSeeded) {
    ModelSpec spec = toy_spec(ModelKind::bilstm);
    const auto a = init_params(spec, 3), b = init_params(spec, 3), c = init_params(spec, 4);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(values(a.entries()[i].tensor), values(b.entries()[i].tensor));
        any_difference |= values(a.entries()[i].tensor) != values(c.entries()[i].tensor);
    }
    EXPECT_TRUE(any_difference);
    // Forget-gate bias starts at one, the rest at zero.
    const auto bias = a.get("bilstm.forward.bias").data();
    for (std::size_t i = 0; i < bias.size(); ++i)
        EXPECT_EQ(bias[i], (i >= 4 && i < 8) ? 1.0f : 0.0f);
}

TEST(Spec, ValidationRejectsInconsistentSpecs) {
    ModelSpec spec;
    spec.kind = ModelKind::multi_head_attention;
    spec.num_heads = 3;  // 50 is not divisible by 3
    EXPECT_THROW(spec.validate(), UsageError);
    spec = ModelSpec{};
    spec.dropout_rate = 1.0;
    EXPECT_THROW(spec.validate(), UsageError);
    spec = ModelSpec{};
    spec.lstm_units = 0;
    EXPECT_THROW(spec.validate(), UsageError);
    EXPECT_EQ(parse_model_kind("mha"), ModelKind::multi_head_attention);
    EXPECT_THROW(parse_model_kind("gru"), UsageError);
}

TEST(GradientCheck, AllKindsAtToySize) {
    for (ModelKind kind : kAllKinds) {
        const ModelSpec spec = toy_spec(kind);
        auto params = toy_params(spec);
        // Fixed data whose FFN ReLU inputs stay more than a step of 1e-3 away
        // from zero; a straddled kink is a property of the difference
        // quotient, not of the analytic gradient.
        const auto batch = random_batch(3, spec.max_len, spec.vocab_size, kGradcheckBatchSeed);
        const std::vector<double> labels = {1, 0, 1};
        const auto report = gradcheck(params, [&](const ModelParams<double>& p) {
            return model_loss(spec, p, batch, labels);
        });
        EXPECT_LE(report.worst_error, 1e-3)
            << to_string(kind) << ": " << report.worst_param << "[" << report.worst_index
            << "] analytic " << report.worst_analytic << " numeric " << report.worst_numeric;
        EXPECT_EQ(report.checked, params.scalar_count());
    }
}
