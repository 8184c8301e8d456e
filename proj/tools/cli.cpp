#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>

#include "useq/checkpoint.hpp"
#include "useq/errors.hpp"
#include "useq/evaluation.hpp"
#include "useq/pipeline.hpp"

namespace useq::cli {

namespace {

struct TrainFlags {
    std::string data;
    std::string model;
    std::string out;
    std::string format = "tsv";
    std::string token_mode = "delimiter";
    std::string report = "text";
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::size_t max_len = 100;
    std::size_t vocab_size = 10000;
    std::size_t embed_dim = 50;
    std::uint64_t seed = 42;
    double split = 0.8;
    double validation_split = 0.0;
    double learning_rate = 0.001;
    double dropout = 0.04;
    std::optional<std::size_t> units;
    std::optional<std::size_t> heads;
    std::optional<std::size_t> ffn_hidden;
    bool quiet = false;
};

struct EvaluateFlags {
    std::string model_file;
    std::string data;
    std::string format = "tsv";
    std::string report = "text";
};

struct PredictFlags {
    std::string model_file;
    std::optional<std::string> url;
};

void print_report(const EvalReport& report, const std::string& style, std::ostream& out) {
    if (style == "structured")
        out << render_structured(report) << '\n';
    else
        out << render_text(report);
}

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
    const auto dataset = load_dataset(f.data, parse_dataset_format(f.format));

    PipelineConfig config;
    config.model.kind = parse_model_kind(f.model);
    config.model.embed_dim = f.embed_dim;
    config.model.dropout_rate = f.dropout;
    if (f.units) {
        switch (config.model.kind) {
            case ModelKind::multi_head_attention: break;  // width is embed_dim
            case ModelKind::tcn: config.model.tcn_units = *f.units; break;
            case ModelKind::lstm: config.model.lstm_units = *f.units; break;
            case ModelKind::bilstm: config.model.bilstm_units = *f.units; break;
        }
    }
    if (f.heads) config.model.num_heads = *f.heads;
    if (f.ffn_hidden) config.model.ffn_hidden = *f.ffn_hidden;
    config.tokenizer.mode = parse_token_mode(f.token_mode);
    config.tokenizer.max_len = f.max_len;
    config.tokenizer.max_tokens = f.vocab_size;
    config.train.epochs = f.epochs;
    config.train.batch_size = f.batch_size;
    config.train.seed = f.seed;
    config.train.split_fraction = f.split;
    config.train.validation_fraction = f.validation_split;
    config.train.learning_rate = f.learning_rate;

    if (!f.quiet)
        err << "loaded " << dataset.records.size() << " records from " << f.data << '\n';
    auto progress = [&](const EpochRecord& r) {
        if (f.quiet) return;
        char line[256];
        std::snprintf(line, sizeof line, "epoch %zu/%zu  loss %.4f  acc %.4f  %.0f ms\n", r.epoch,
                      f.epochs, r.loss, r.accuracy, r.duration_ms);
        err << line << std::flush;
    };
    const auto result = run_pipeline(dataset.records, config, progress);

    save_checkpoint(result.checkpoint, f.out);
    write_trainlog(result.log, trainlog_path_for(f.out));
    if (!f.quiet)
        err << "train " << result.train_size << " / test " << result.test_size
            << "; checkpoint written to " << f.out << '\n';
    print_report(result.report, f.report, out);
    return kExitOk;
}

int cmd_evaluate(const EvaluateFlags& f, std::ostream& out) {
    const auto ckpt = load_checkpoint(f.model_file);
    const auto dataset = load_dataset(f.data, parse_dataset_format(f.format));
    const auto report = evaluate(ckpt.spec, ckpt.params, ckpt.vocabulary, ckpt.tokenizer,
                                 dataset.records, ckpt.train_config.epochs);
    print_report(report, f.report, out);
    return kExitOk;
}

int cmd_predict(const PredictFlags& f, std::istream& in, std::ostream& out) {
    const auto ckpt = load_checkpoint(f.model_file);
    auto emit = [&](std::string_view url) {
        const auto p = predict(ckpt.spec, ckpt.params, ckpt.vocabulary, ckpt.tokenizer, url);
        char line[64];
        std::snprintf(line, sizeof line, "%.6f\t%d\n", p.probability, p.label);
        out << line;
    };
    if (f.url) {
        emit(*f.url);
        return kExitOk;
    }
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) emit(line);
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
    CLI::App app{"Phishing URL detection with sequential deep-learning models", "useq"};
    app.require_subcommand(1);
    const auto models = CLI::IsMember({"mha", "tcn", "lstm", "bilstm"});
    const auto reports = CLI::IsMember({"text", "structured"});
    const auto formats = CLI::IsMember({"tsv", "csv"});

    TrainFlags tf;
    auto* train_cmd = app.add_subcommand("train", "Split, fit tokenizer, train and evaluate");
    train_cmd->add_option("--data", tf.data, "Labeled URL dataset")->required();
    train_cmd->add_option("--model", tf.model, "Architecture")->required()->check(models);
    train_cmd->add_option("--out", tf.out, "Checkpoint path")->required();
    train_cmd->add_option("--epochs", tf.epochs)->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--batch-size", tf.batch_size)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--max-len", tf.max_len)->capture_default_str()->check(CLI::PositiveNumber);
    train_cmd->add_option("--vocab-size", tf.vocab_size, "Cap on token ids (0 is padding)")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 31));
    train_cmd->add_option("--embed-dim", tf.embed_dim)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--seed", tf.seed)->capture_default_str();
    train_cmd->add_option("--token-mode", tf.token_mode)
        ->capture_default_str()
        ->check(CLI::IsMember({"delimiter", "character"}));
    train_cmd->add_option("--split", tf.split, "Training fraction")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    train_cmd->add_option("--validation-split", tf.validation_split,
                          "Fraction of the training split held out for validation")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    train_cmd->add_option("--lr", tf.learning_rate)->capture_default_str();
    train_cmd->add_option("--dropout", tf.dropout)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    train_cmd->add_option("--units", tf.units, "Override the recurrent/convolutional unit count")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--heads", tf.heads)->check(CLI::PositiveNumber);
    train_cmd->add_option("--ffn-hidden", tf.ffn_hidden)->check(CLI::PositiveNumber);
    train_cmd->add_option("--format", tf.format)->capture_default_str()->check(formats);
    train_cmd->add_option("--report", tf.report)->capture_default_str()->check(reports);
    train_cmd->add_flag("--quiet", tf.quiet, "Suppress progress output");

    EvaluateFlags ef;
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
    eval_cmd->add_option("--model-file", ef.model_file)->required();
    eval_cmd->add_option("--data", ef.data)->required();
    eval_cmd->add_option("--format", ef.format)->capture_default_str()->check(formats);
    eval_cmd->add_option("--report", ef.report)->capture_default_str()->check(reports);

    PredictFlags pf;
    auto* predict_cmd = app.add_subcommand(
        "predict", "Score URLs given with --url or one per line on standard input");
    predict_cmd->add_option("--model-file", pf.model_file)->required();
    predict_cmd->add_option("--url", pf.url);

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(tf, out, err);
        if (eval_cmd->parsed()) return cmd_evaluate(ef, out);
        if (predict_cmd->parsed()) return cmd_predict(pf, in, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace useq::cli
