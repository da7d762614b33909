#include "rae/bytes.hpp"
#include "rae/preprocess.hpp"
#include "rae/synthetic.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

// Companion generator for self-contained experiments: writes a seeded
// corpus of sinusoid-mix traces as CSV files.
int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic sinusoid corpus as CSV files"};

    rae::SyntheticConfig cfg;
    std::string out_dir;
    app.add_option("--out-dir", out_dir, "Directory to write trace CSVs into")->required();
    app.add_option("--n-traces", cfg.n_traces, "Number of traces");
    app.add_option("--trace-len", cfg.trace_len, "Samples per trace");
    app.add_option("--channels", cfg.n_channels, "Channels per trace");
    app.add_option("--seed", cfg.seed, "Deterministic seed");
    app.add_option("--noise", cfg.noise_amplitude, "Additive noise amplitude");

    try {
        app.parse(argc, argv);
        std::filesystem::create_directories(out_dir);
        const auto traces = rae::synthetic_corpus(cfg);
        for (std::size_t i = 0; i < traces.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "trace_%04zu.csv", i);
            rae::write_file_atomic((std::filesystem::path(out_dir) / name).string(),
                                   rae::to_csv(traces[i].samples));
        }
        std::cerr << "wrote " << traces.size() << " traces to " << out_dir << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
