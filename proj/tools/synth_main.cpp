// useq-synth: writes a synthetic labeled URL corpus in the TSV dataset format.

#include <CLI11.hpp>
#include <iostream>

#include "synthetic_corpus.hpp"
#include "useq/dataset.hpp"
#include "useq/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic phishing/legitimate URL corpus", "useq-synth"};
    useq::synth::CorpusOptions options;
    std::string out;
    app.add_option("--out", out, "Output TSV path")->required();
    app.add_option("--legitimate", options.legitimate)->capture_default_str();
    app.add_option("--phishing", options.phishing)->capture_default_str();
    app.add_option("--hard-fraction", options.hard_fraction)
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--label-noise", options.label_noise)
        ->capture_default_str()
        ->check(CLI::Range(0.0, 0.5));
    app.add_option("--seed", options.seed)->capture_default_str();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    try {
        const auto records = useq::synth::generate_corpus(options);
        useq::write_dataset(out, records);
        std::cerr << "wrote " << records.size() << " records to " << out << '\n';
    } catch (const useq::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
