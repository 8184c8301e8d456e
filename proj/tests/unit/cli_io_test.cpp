#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "toy.hpp"
#include "useq/checkpoint.hpp"
#include "useq/dataset.hpp"
#include "useq/errors.hpp"
#include "useq/random.hpp"
#include "useq/training.hpp"

using namespace useq;
using namespace useq::testing;
namespace fs = std::filesystem;

namespace {

DatasetFile parse_text(const std::string& text, DatasetFormat format = DatasetFormat::tsv) {
    std::istringstream in(text);
    return parse_dataset(in, format);
}

std::size_t parse_error_line(const std::string& text,
                             DatasetFormat format = DatasetFormat::tsv) {
    try {
        parse_text(text, format);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

CheckpointError::Kind load_error_kind(std::string_view bytes) {
    try {
        deserialize_checkpoint(bytes);
    } catch (const CheckpointError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "checkpoint decoded unexpectedly";
    return CheckpointError::Kind::io;
}

class ScratchDir : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() /
               (std::string("useq_cli_io_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path path(const std::string& name) const { return dir_ / name; }

private:
    fs::path dir_;
};

Checkpoint toy_checkpoint(ModelKind kind, std::uint64_t seed = 3) {
    Checkpoint c;
    c.tokenizer.max_len = 6;
    c.tokenizer.max_tokens = 20;
    c.vocabulary = fit(std::vector<std::string>{"http://login.example.com/verify",
                                                "https://www.example.org/about"},
                       c.tokenizer);
    c.spec = toy_spec(kind);
    c.params = init_params(c.spec, seed);
    c.train_config.epochs = 3;
    c.train_config.seed = seed;
    return c;
}

struct CliResult {
    int code;
    std::string out, err;
};

CliResult run_cli(std::vector<std::string> args, const std::string& input = "") {
    args.insert(args.begin(), "useq");
    std::istringstream in(input);
    std::ostringstream out, err;
    const int code = cli::run(args, in, out, err);
    return {code, out.str(), err.str()};
}

std::vector<LabeledUrl> small_corpus() {
    std::vector<LabeledUrl> data;
    for (int i = 0; i < 40; ++i) {
        const bool phish = i % 2;
        data.push_back({static_cast<std::uint8_t>(phish),
                        phish ? "http://secure-login.verify" + std::to_string(i) + ".tk/account"
                              : "https://www.news" + std::to_string(i) + ".com/article"});
    }
    return data;
}

}  // namespace

// --- dataset parsing ------------------------------------------------------------

TEST(Dataset, TwoRecords) {
    const auto d = parse_text("1\thttp://evil.example/login\n0\thttp://good.example\n");
    ASSERT_EQ(d.records.size(), 2u);
    EXPECT_EQ(d.records[0], (LabeledUrl{1, "http://evil.example/login"}));
    EXPECT_EQ(d.records[1], (LabeledUrl{0, "http://good.example"}));
}

TEST(Dataset, BadLabelReportsLine) {
    EXPECT_EQ(parse_error_line("2\tx"), 1u);
    EXPECT_EQ(parse_error_line("0\ta\n# note\n\n1\tb\nno-tab-here\n"), 5u);
    EXPECT_EQ(parse_error_line("0\ta\n1\t\n"), 2u);
}

TEST(Dataset, CommentsAndBlankLinesSkipped) {
    const auto d = parse_text("# header\n\n0\ta.com\n\n1\tb.com\n");
    EXPECT_EQ(d.records.size(), 2u);
    EXPECT_EQ(d.skipped_lines, 3u);
}

TEST(Dataset, LineEndingVariantsGiveSameRecords) {
    const auto lf = parse_text("0\ta.com\n1\tb.com/x\n");
    EXPECT_EQ(parse_text("0\ta.com\r\n1\tb.com/x\r\n").records, lf.records);
    EXPECT_EQ(parse_text("0\ta.com\n1\tb.com/x").records, lf.records);
    EXPECT_EQ(parse_text("0\ta.com\r\n1\tb.com/x").records, lf.records);
}

TEST(Dataset, EmptyIsUsageError) {
    EXPECT_THROW(parse_text(""), UsageError);
    EXPECT_THROW(parse_text("# only a comment\n\n"), UsageError);
}

TEST(Dataset, InvalidUtf8Rejected) {
    EXPECT_EQ(parse_error_line("0\tok.com\n1\tbad\xFF.com\n"), 2u);
    EXPECT_EQ(parse_text("0\tb\xC3\xBC" "cher.de\n").records.size(), 1u);
}

TEST(Dataset, CsvFormat) {
    const auto d = parse_text("url,label\nhttp://a.com/?q=1,2,0\nhttp://b.tk,1\n", DatasetFormat::csv);
    ASSERT_EQ(d.records.size(), 2u);
    EXPECT_EQ(d.records[0], (LabeledUrl{0, "http://a.com/?q=1,2"}));
    EXPECT_EQ(d.records[1], (LabeledUrl{1, "http://b.tk"}));
    EXPECT_EQ(parse_error_line("url,label\nhttp://a.com\n", DatasetFormat::csv), 2u);
    EXPECT_THROW(parse_dataset_format("xml"), UsageError);
}

TEST_F(ScratchDir, WriteThenLoadDataset) {
    const auto data = small_corpus();
    write_dataset(path("d.tsv"), data);
    const auto loaded = load_dataset(path("d.tsv"));
    EXPECT_EQ(loaded.records, data);
    EXPECT_EQ(count_label(loaded.records, 1), 20u);
    EXPECT_THROW(load_dataset(path("missing.tsv")), Error);
}

// --- checkpoints --------------------------------------------------------------

TEST(Checkpoint, RoundTripIsBitIdentical) {
    for (auto kind : kAllKinds) {
        const auto c = toy_checkpoint(kind);
        const auto bytes = serialize_checkpoint(c);
        EXPECT_EQ(bytes.substr(0, 4), "USEQ");
        const auto back = deserialize_checkpoint(bytes);
        EXPECT_EQ(back.spec, c.spec);
        EXPECT_EQ(back.tokenizer, c.tokenizer);
        EXPECT_TRUE(back.vocabulary == c.vocabulary);
        EXPECT_EQ(back.train_config, c.train_config);
        ASSERT_EQ(back.params.entries().size(), c.params.entries().size());
        for (std::size_t i = 0; i < c.params.entries().size(); ++i) {
            const auto& a = c.params.entries()[i];
            const auto& b = back.params.entries()[i];
            EXPECT_EQ(a.name, b.name);
            EXPECT_EQ(a.tensor.shape(), b.tensor.shape());
            const auto da = a.tensor.data();
            const auto db = b.tensor.data();
            ASSERT_EQ(da.size(), db.size());
            EXPECT_EQ(std::memcmp(da.data(), db.data(), da.size() * sizeof(float)), 0) << a.name;
        }
        EXPECT_EQ(serialize_checkpoint(back), bytes);
    }
}

TEST(Checkpoint, PreambleLayout) {
    const auto bytes = serialize_checkpoint(toy_checkpoint(ModelKind::lstm));
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), kCheckpointVersion);
    EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
    std::uint64_t header_length = 0;
    for (int i = 0; i < 8; ++i)
        header_length |= std::uint64_t(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
    const auto header = nlohmann::json::parse(bytes.substr(16, header_length));
    EXPECT_TRUE(header.contains("parameters"));
    EXPECT_EQ(bytes.size(), 16 + header_length + header["data_length"].get<std::uint64_t>());
}

TEST(Checkpoint, EveryTruncationIsRejected) {
    const auto bytes = serialize_checkpoint(toy_checkpoint(ModelKind::lstm));
    for (std::size_t cut = 0; cut < bytes.size(); cut += 1 + cut / 4) {
        const auto kind = load_error_kind(std::string_view(bytes).substr(0, cut));
        EXPECT_EQ(kind, CheckpointError::Kind::truncated) << "cut at " << cut;
    }
    EXPECT_EQ(load_error_kind(std::string_view(bytes).substr(0, bytes.size() - 1)),
              CheckpointError::Kind::truncated);
}

TEST(Checkpoint, BadMagicAndVersion) {
    auto bytes = serialize_checkpoint(toy_checkpoint(ModelKind::tcn));
    auto magic = bytes;
    magic[0] = 'X';
    EXPECT_EQ(load_error_kind(magic), CheckpointError::Kind::bad_magic);
    auto version = bytes;
    version[4] = 9;
    EXPECT_EQ(load_error_kind(version), CheckpointError::Kind::unsupported_version);
}

TEST(Checkpoint, ManifestShapeMismatch) {
    const auto bytes = serialize_checkpoint(toy_checkpoint(ModelKind::lstm));
    std::uint64_t header_length = 0;
    for (int i = 0; i < 8; ++i)
        header_length |= std::uint64_t(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
    auto header = nlohmann::json::parse(bytes.substr(16, header_length));
    const std::string data = bytes.substr(16 + header_length);

    auto rebuild = [&](const nlohmann::json& h, const std::string& payload) {
        const std::string text = h.dump();
        std::string out = bytes.substr(0, 8);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((text.size() >> (8 * i)) & 0xFF));
        return out + text + payload;
    };
    ASSERT_NO_THROW(deserialize_checkpoint(rebuild(header, data)));

    auto wrong_length = header;
    wrong_length["parameters"][0]["length"] = wrong_length["parameters"][0]["length"].get<int>() + 4;
    EXPECT_EQ(load_error_kind(rebuild(wrong_length, data)), CheckpointError::Kind::manifest);

    auto wrong_shape = header;
    wrong_shape["parameters"][0]["shape"][0] = 3;
    EXPECT_EQ(load_error_kind(rebuild(wrong_shape, data)), CheckpointError::Kind::manifest);

    EXPECT_EQ(load_error_kind(rebuild(header, data + "junk")), CheckpointError::Kind::manifest);

    auto no_model = header;
    no_model.erase("model");
    EXPECT_EQ(load_error_kind(rebuild(no_model, data)), CheckpointError::Kind::malformed_header);
}

TEST_F(ScratchDir, SaveLoadPreservesPredictions) {
    const auto c = toy_checkpoint(ModelKind::bilstm);
    save_checkpoint(c, path("m.useq"));
    const auto back = load_checkpoint(path("m.useq"));
    for (const char* url : {"http://login.example.com/verify", "zzz", "", "https://a.b/c?d=e"}) {
        const auto a = predict(c.spec, c.params, c.vocabulary, c.tokenizer, url);
        const auto b = predict(back.spec, back.params, back.vocabulary, back.tokenizer, url);
        EXPECT_EQ(a.probability, b.probability) << url;
        EXPECT_EQ(a.label, b.label);
    }
    try {
        load_checkpoint(path("absent.useq"));
        ADD_FAILURE();
    } catch (const CheckpointError& e) {
        EXPECT_EQ(e.kind(), CheckpointError::Kind::io);
    }
}

TEST_F(ScratchDir, TrainLogRoundTrip) {
    TrainLog log;
    log.epochs.push_back({1, 5, 0.693, 0.5, 12.5, 12.5, std::nullopt, std::nullopt});
    log.epochs.push_back({2, 5, 0.4, 0.875, 11.25, 23.75, 0.45, 0.8});
    const auto p = trainlog_path_for(path("m.useq"));
    EXPECT_EQ(p.filename(), "m.useq.trainlog.jsonl");
    write_trainlog(log, p);
    const auto back = read_trainlog(p);
    ASSERT_EQ(back.epochs.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(back.epochs[i].epoch, log.epochs[i].epoch);
        EXPECT_EQ(back.epochs[i].loss, log.epochs[i].loss);
        EXPECT_EQ(back.epochs[i].cumulative_ms, log.epochs[i].cumulative_ms);
        EXPECT_EQ(back.epochs[i].validation_accuracy, log.epochs[i].validation_accuracy);
    }
    EXPECT_EQ(trainlog_line(log.epochs[1]).find('\n'), std::string::npos);
}

// --- command line -------------------------------------------------------------

TEST(Cli, MissingOutIsUsageError) {
    const auto r = run_cli({"train", "--data", "x.tsv", "--model", "lstm"});
    EXPECT_EQ(r.code, cli::kExitUsage);
}

TEST(Cli, UnknownModelAndNoSubcommandAreUsageErrors) {
    EXPECT_EQ(run_cli({"train", "--data", "x", "--model", "gru", "--out", "y"}).code,
              cli::kExitUsage);
    EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
}

TEST(Cli, MissingCheckpointIsFailure) {
    const auto r = run_cli({"predict", "--model-file", "/nonexistent/model.useq", "--url", "a"});
    EXPECT_EQ(r.code, cli::kExitFailure);
    EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST_F(ScratchDir, MissingDataIsFailure) {
    const auto r = run_cli({"train", "--data", path("nope.tsv").string(), "--model", "lstm",
                            "--out", path("m.useq").string()});
    EXPECT_EQ(r.code, cli::kExitFailure);
}

TEST_F(ScratchDir, PredictWithZeroHeadPrintsOneHalf) {
    auto c = toy_checkpoint(ModelKind::tcn);
    for (const char* n : {"head.kernel", "head.bias"})
        for (auto& v : c.params.get(n).mutable_data()) v = 0.0f;
    save_checkpoint(c, path("z.useq"));
    const auto one = run_cli({"predict", "--model-file", path("z.useq").string(), "--url",
                              "http://anything.example"});
    EXPECT_EQ(one.code, 0);
    EXPECT_EQ(one.out, "0.500000\t1\n");
    const auto piped = run_cli({"predict", "--model-file", path("z.useq").string()},
                               "a.com\r\n\nb.org/x\n");
    EXPECT_EQ(piped.out, "0.500000\t1\n0.500000\t1\n");
}

TEST_F(ScratchDir, TrainThenEvaluate) {
    write_dataset(path("d.tsv"), small_corpus());
    const std::vector<std::string> train_args = {
        "train", "--data", path("d.tsv").string(), "--model", "lstm", "--out",
        path("m.useq").string(), "--epochs", "2", "--embed-dim", "8", "--units", "4",
        "--max-len", "12", "--quiet", "--report", "structured"};
    const auto t = run_cli(train_args);
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_TRUE(fs::exists(path("m.useq")));
    const auto log = read_trainlog(trainlog_path_for(path("m.useq")));
    EXPECT_EQ(log.epochs.size(), 2u);
    const auto report = nlohmann::json::parse(t.out);
    EXPECT_EQ(report["records"], 8);
    EXPECT_EQ(report["epochs"], 2);

    const auto e = run_cli({"evaluate", "--model-file", path("m.useq").string(), "--data",
                            path("d.tsv").string(), "--report", "structured"});
    ASSERT_EQ(e.code, 0) << e.err;
    const auto j = nlohmann::json::parse(e.out);
    EXPECT_EQ(j["tn"].get<int>() + j["fp"].get<int>() + j["fn"].get<int>() + j["tp"].get<int>(), 40);

    const auto text = run_cli({"evaluate", "--model-file", path("m.useq").string(), "--data",
                               path("d.tsv").string()});
    EXPECT_NE(text.out.find("confusion: TN="), std::string::npos);
}
