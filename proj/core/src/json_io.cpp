#include "json_io.hpp"

namespace useq::json_io {

json to_json(const ModelSpec& s) {
    return {
        {"kind", to_string(s.kind)},
        {"vocab_size", s.vocab_size},
        {"embed_dim", s.embed_dim},
        {"max_len", s.max_len},
        {"dropout_rate", s.dropout_rate},
        {"num_heads", s.num_heads},
        {"ffn_hidden", s.ffn_hidden},
        {"layer_norm_eps", s.layer_norm_eps},
        {"tcn_units", s.tcn_units},
        {"tcn_kernel", s.tcn_kernel},
        {"tcn_dilations", s.tcn_dilations},
        {"lstm_units", s.lstm_units},
        {"bilstm_units", s.bilstm_units},
    };
}

ModelSpec model_spec_from_json(const json& j) {
    ModelSpec s;
    s.kind = parse_model_kind(j.at("kind").get<std::string>());
    j.at("vocab_size").get_to(s.vocab_size);
    j.at("embed_dim").get_to(s.embed_dim);
    j.at("max_len").get_to(s.max_len);
    j.at("dropout_rate").get_to(s.dropout_rate);
    j.at("num_heads").get_to(s.num_heads);
    j.at("ffn_hidden").get_to(s.ffn_hidden);
    j.at("layer_norm_eps").get_to(s.layer_norm_eps);
    j.at("tcn_units").get_to(s.tcn_units);
    j.at("tcn_kernel").get_to(s.tcn_kernel);
    j.at("tcn_dilations").get_to(s.tcn_dilations);
    j.at("lstm_units").get_to(s.lstm_units);
    j.at("bilstm_units").get_to(s.bilstm_units);
    s.validate();
    return s;
}

json to_json(const TokenizerConfig& c) {
    return {
        {"mode", to_string(c.mode)},         {"max_tokens", c.max_tokens},
        {"max_len", c.max_len},              {"lowercase", c.lowercase},
        {"padding", to_string(c.padding)},   {"truncation", to_string(c.truncation)},
    };
}

TokenizerConfig tokenizer_config_from_json(const json& j) {
    TokenizerConfig c;
    c.mode = parse_token_mode(j.at("mode").get<std::string>());
    j.at("max_tokens").get_to(c.max_tokens);
    j.at("max_len").get_to(c.max_len);
    j.at("lowercase").get_to(c.lowercase);
    c.padding = parse_pad_side(j.at("padding").get<std::string>());
    c.truncation = parse_pad_side(j.at("truncation").get<std::string>());
    c.validate();
    return c;
}

json to_json(const Vocabulary& v) {
    json tokens = json::array();
    for (const auto& t : v.tokens()) tokens.push_back(t);
    return {
        {"max_tokens", v.max_tokens()},
        {"fitted_corpus_size", v.fitted_corpus_size()},
        {"tokens", std::move(tokens)},
    };
}

Vocabulary vocabulary_from_json(const json& j) {
    return Vocabulary(j.at("tokens").get<std::vector<std::string>>(),
                      j.at("max_tokens").get<std::size_t>(),
                      j.at("fitted_corpus_size").get<std::size_t>());
}

json to_json(const TrainConfig& c) {
    return {
        {"batch_size", c.batch_size},
        {"epochs", c.epochs},
        {"learning_rate", c.learning_rate},
        {"adam_beta1", c.adam_beta1},
        {"adam_beta2", c.adam_beta2},
        {"adam_eps", c.adam_eps},
        {"split_fraction", c.split_fraction},
        {"validation_fraction", c.validation_fraction},
        {"seed", c.seed},
        {"shuffle_each_epoch", c.shuffle_each_epoch},
    };
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    j.at("batch_size").get_to(c.batch_size);
    j.at("epochs").get_to(c.epochs);
    j.at("learning_rate").get_to(c.learning_rate);
    j.at("adam_beta1").get_to(c.adam_beta1);
    j.at("adam_beta2").get_to(c.adam_beta2);
    j.at("adam_eps").get_to(c.adam_eps);
    j.at("split_fraction").get_to(c.split_fraction);
    j.at("validation_fraction").get_to(c.validation_fraction);
    j.at("seed").get_to(c.seed);
    j.at("shuffle_each_epoch").get_to(c.shuffle_each_epoch);
    return c;
}

json to_json(const EpochRecord& r) {
    json j = {
        {"epoch", r.epoch},
        {"steps", r.steps},
        {"loss", r.loss},
        {"accuracy", r.accuracy},
        {"duration_ms", r.duration_ms},
        {"cumulative_ms", r.cumulative_ms},
    };
    if (r.validation_loss) j["validation_loss"] = *r.validation_loss;
    if (r.validation_accuracy) j["validation_accuracy"] = *r.validation_accuracy;
    return j;
}

EpochRecord epoch_record_from_json(const json& j) {
    EpochRecord r;
    j.at("epoch").get_to(r.epoch);
    j.at("steps").get_to(r.steps);
    j.at("loss").get_to(r.loss);
    j.at("accuracy").get_to(r.accuracy);
    j.at("duration_ms").get_to(r.duration_ms);
    j.at("cumulative_ms").get_to(r.cumulative_ms);
    if (j.contains("validation_loss")) r.validation_loss = j.at("validation_loss").get<double>();
    if (j.contains("validation_accuracy"))
        r.validation_accuracy = j.at("validation_accuracy").get<double>();
    return r;
}

namespace {
json class_json(const ClassMetrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}
}  // namespace

json to_json(const EvalReport& r) {
    const auto& m = r.metrics;
    return {
        {"model", r.model},
        {"epochs", r.epochs},
        {"records", r.records},
        {"threshold", r.threshold},
        {"tn", r.counts.tn},
        {"fp", r.counts.fp},
        {"fn", r.counts.fn},
        {"tp", r.counts.tp},
        {"legitimate", class_json(m.negative)},
        {"phishing", class_json(m.positive)},
        {"macro", class_json(m.macro)},
        {"micro", class_json(m.micro)},
        {"accuracy", m.accuracy},
        {"roc_auc", r.roc_auc},
        {"degenerate", m.degenerate},
        {"eval_ms", r.eval_ms},
    };
}

}  // namespace useq::json_io
