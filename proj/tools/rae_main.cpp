#include "rae/bytes.hpp"
#include "rae/codec.hpp"
#include "rae/model.hpp"
#include "rae/preprocess.hpp"
#include "rae/trainer.hpp"
#include "rae/types.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<rae::TimeSeries> load_corpus(const std::vector<std::string>& paths) {
    std::vector<std::string> files;
    for (const std::string& p : paths) {
        if (fs::is_directory(p)) {
            std::vector<std::string> found;
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.is_regular_file() && entry.path().extension() == ".csv")
                    found.push_back(entry.path().string());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else if (fs::exists(p)) {
            files.push_back(p);
        } else {
            throw std::invalid_argument("input not found: " + p);
        }
    }
    if (files.empty()) throw std::invalid_argument("no CSV files found in the given inputs");

    std::vector<rae::TimeSeries> traces;
    traces.reserve(files.size());
    for (const std::string& f : files) traces.push_back(rae::load_csv_file(f));
    return traces;
}

rae::RaeParams load_model_file(const std::string& path) {
    const rae::Bytes bytes = rae::read_file(path);
    return rae::load_model(bytes);
}

std::vector<rae::Scalar> parse_scalar_list(const std::string& text) {
    std::vector<rae::Scalar> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        values.push_back(std::stod(item));
    }
    if (values.empty()) throw std::invalid_argument("empty list: " + text);
    return values;
}

int env_thread_cap() {
    if (const char* raw = std::getenv("RAE_THREADS")) {
        const int v = std::atoi(raw);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// --config <file> supplies flat key=value defaults; explicit flags win.
// Values are injected as extra arguments for options not already given.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config " + path + ": line " + std::to_string(line_no) +
                                        " is not key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config " + path + ": empty key on line " +
                                        std::to_string(line_no));
        entries.emplace_back(key, value);
    }
    return entries;
}

std::vector<std::string> expand_config_args(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;
    for (const auto& [key, value] : read_config_file(config_path)) {
        const std::string flag = "--" + key;
        bool present = false;
        for (const std::string& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
        if (!present) {
            args.push_back(flag);
            args.push_back(value);
        }
    }
    return args;
}

struct TrainArgs {
    std::vector<std::string> data;
    std::string out;
    std::string log;
    rae::Scalar tau = 0.4;
    rae::Index rae_len = 32;
    rae::Index d_z = 16;
    rae::Index d_h = 4;
    rae::Index d_m = 16;
    rae::Index max_segment_len = 0;
    int epochs = 80;
    rae::Index sequence_len = 8;
    rae::Scalar learning_rate = 3e-3;
    std::uint64_t seed = 1;
    rae::Scalar validation_fraction = 0.1;
};

int run_train(const TrainArgs& args) {
    std::vector<rae::TimeSeries> traces = load_corpus(args.data);
    const rae::Index channels = traces.front().channels();
    for (const auto& t : traces)
        if (t.channels() != channels)
            throw std::invalid_argument("trace '" + t.name + "' has " +
                                        std::to_string(t.channels()) +
                                        " channels, others have " + std::to_string(channels));

    for (auto& t : traces) t = rae::normalize(t);
    const auto evicted = rae::evict_outliers(traces);
    for (const auto& name : evicted.dropped)
        std::cerr << "evicted high-variation trace: " << name << "\n";

    rae::TrainConfig cfg;
    cfg.dims = rae::RaeDims{args.rae_len * channels, args.d_z, args.d_h, args.d_m, channels};
    cfg.tau = args.tau;
    cfg.max_segment_len = args.max_segment_len;
    cfg.epochs = args.epochs;
    cfg.sequence_len = args.sequence_len;
    cfg.learning_rate = args.learning_rate;
    cfg.seed = args.seed;
    cfg.validation_fraction = args.validation_fraction;

    const rae::Dataset dataset = rae::build_dataset(evicted.kept, cfg);
    if (dataset.empty()) throw std::invalid_argument("dataset is empty after preprocessing");
    std::size_t n_windows = 0;
    for (const auto& seq : dataset) n_windows += seq.size();
    std::cerr << "training on " << dataset.size() << " sequences (" << n_windows
              << " windows) from " << evicted.kept.size() << " traces\n";

    const rae::TrainResult result = rae::train(cfg, dataset);
    rae::write_file_atomic(args.out, rae::save_model(result.params));

    std::string log_csv = "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < result.log.epochs.size(); ++e) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e + 1,
                      result.log.epochs[e].train_loss, result.log.epochs[e].val_loss);
        log_csv += buf;
    }
    const std::string log_path = args.log.empty() ? args.out + ".log.csv" : args.log;
    rae::write_file_atomic(log_path, log_csv);

    std::cerr << "model written to " << args.out << " (fingerprint "
              << rae::model_fingerprint(result.params) << "), log to " << log_path << ", "
              << result.log.wall_seconds << " s\n";
    return 0;
}

struct CompressArgs {
    std::string model;
    std::string data;
    std::string out;
    rae::Scalar epsilon = 0;
    rae::Index min_window = 0;
    rae::Index max_window = 0;
    std::string emit_reconstruction;
};

rae::CodecConfig make_codec_config(const rae::RaeParams& params, rae::Scalar epsilon,
                                   rae::Index min_window, rae::Index max_window) {
    rae::CodecConfig cfg;
    cfg.epsilon = epsilon;
    cfg.rae_len = params.dims.d_in / params.dims.n_channels;
    cfg.min_window = min_window;
    cfg.max_window = max_window;
    return cfg;
}

int run_compress(const CompressArgs& args) {
    const rae::RaeParams params = load_model_file(args.model);
    const rae::TimeSeries normalized = rae::normalize(rae::load_csv_file(args.data));
    const rae::CodecConfig cfg =
        make_codec_config(params, args.epsilon, args.min_window, args.max_window);

    const rae::CompressResult result = rae::compress(params, normalized, cfg);
    const rae::Bytes bytes = rae::serialize_stream(result.stream);
    rae::write_file_atomic(args.out, bytes);

    const rae::Deviation dev =
        rae::deviation_metrics(normalized.samples, result.reconstruction.normalized);
    const rae::Scalar ratio = static_cast<rae::Scalar>(bytes.size()) /
                              (static_cast<rae::Scalar>(normalized.n()) *
                               static_cast<rae::Scalar>(normalized.channels()) * 4.0);
    std::cout << json{{"ratio", ratio},
                      {"rmse", dev.rmse},
                      {"linf", dev.linf},
                      {"n_blocks", result.stream.blocks.size()},
                      {"n_raw_blocks", rae::count_raw_blocks(result.stream)}}
                     .dump()
              << "\n";

    if (!args.emit_reconstruction.empty())
        rae::write_file_atomic(args.emit_reconstruction, rae::to_csv(result.reconstruction.raw));
    return 0;
}

struct DecompressArgs {
    std::string model;
    std::string data;
    std::string out;
};

int run_decompress(const DecompressArgs& args) {
    const rae::RaeParams params = load_model_file(args.model);
    const rae::CompressedStream stream = rae::parse_stream(rae::read_file(args.data));
    const rae::DecompressResult result = rae::decompress(params, stream);
    rae::write_file_atomic(args.out, rae::to_csv(result.raw));
    std::cerr << "decompressed " << stream.header.n_samples << " samples x "
              << stream.header.n_channels << " channels to " << args.out << "\n";
    return 0;
}

struct EvalArgs {
    std::string model;
    std::string data;
    std::string out;
    std::string epsilon_list;
    rae::Index min_window = 0;
    rae::Index max_window = 0;
};

int run_eval(const EvalArgs& args) {
    const rae::RaeParams params = load_model_file(args.model);
    const rae::TimeSeries normalized = rae::normalize(rae::load_csv_file(args.data));
    const std::vector<rae::Scalar> epsilons = parse_scalar_list(args.epsilon_list);
    for (rae::Scalar eps : epsilons)
        if (eps <= 0) throw std::invalid_argument("epsilon must be positive");

    struct Row {
        rae::Scalar epsilon, ratio, rmse, linf;
        double runtime_ms;
    };
    std::vector<Row> rows(epsilons.size());

    // Each epsilon run carries its own recurrent state, so runs are
    // independent and may proceed in parallel.
    const int workers = std::min<int>(env_thread_cap(), static_cast<int>(epsilons.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t i = next.fetch_add(1); i < epsilons.size(); i = next.fetch_add(1)) {
            const auto t0 = std::chrono::steady_clock::now();
            const rae::CodecConfig cfg =
                make_codec_config(params, epsilons[i], args.min_window, args.max_window);
            const rae::CompressResult result = rae::compress(params, normalized, cfg);
            const double ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
            const rae::Deviation dev =
                rae::deviation_metrics(normalized.samples, result.reconstruction.normalized);
            rows[i] = Row{epsilons[i],
                          rae::stream_ratio(result.stream, result.stream.header.n_samples,
                                            normalized.channels()),
                          dev.rmse, dev.linf, ms};
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    std::string csv = "epsilon,ratio,rmse,linf,runtime_ms\n";
    for (const Row& row : rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.3f\n", row.epsilon, row.ratio,
                      row.rmse, row.linf, row.runtime_ms);
        csv += buf;
    }
    if (args.out.empty())
        std::cout << csv;
    else
        rae::write_file_atomic(args.out, csv);
    return 0;
}

int run_inspect(const std::string& path) {
    const rae::Bytes bytes = rae::read_file(path);
    if (bytes.size() >= 4 && bytes[0] == 'R' && bytes[1] == 'A' && bytes[2] == 'E' &&
        bytes[3] == 'M') {
        const rae::RaeParams params = rae::load_model(bytes);
        std::cout << "kind: model\n"
                  << "d_in: " << params.dims.d_in << "\n"
                  << "d_z: " << params.dims.d_z << "\n"
                  << "d_h: " << params.dims.d_h << "\n"
                  << "d_m: " << params.dims.d_m << "\n"
                  << "n_channels: " << params.dims.n_channels << "\n"
                  << "parameters: " << rae::param_count(params.dims) << "\n"
                  << "fingerprint: " << rae::model_fingerprint(params) << "\n";
        return 0;
    }
    const rae::CompressedStream stream = rae::parse_stream(bytes);
    const auto& h = stream.header;
    std::cout << "kind: stream\n"
              << "n_samples: " << h.n_samples << "\n"
              << "n_channels: " << h.n_channels << "\n"
              << "rae_len: " << h.rae_len << "\n"
              << "d_h: " << h.d_h << "\n"
              << "epsilon: " << h.epsilon << "\n"
              << "fingerprint: " << h.model_fingerprint << "\n"
              << "blocks: " << stream.blocks.size() << "\n"
              << "raw_blocks: " << rae::count_raw_blocks(stream) << "\n"
              << "bytes: " << bytes.size() << "\n"
              << "ratio: "
              << rae::stream_ratio(stream, h.n_samples, static_cast<rae::Index>(h.n_channels))
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrent-autoencoder time-series compression toolkit"};
    app.require_subcommand(1);

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "Train a model on a CSV corpus");
    std::string train_config;
    train->add_option("--config", train_config, "Flat key=value defaults file");
    train->add_option("--data", train_args.data, "CSV files or directories of CSVs")->required();
    train->add_option("--out", train_args.out, "Output model path (.raem)")->required();
    train->add_option("--log", train_args.log, "Training log CSV (default <out>.log.csv)");
    train->add_option("--tau", train_args.tau, "Total-variation segmentation threshold");
    train->add_option("--rae-len", train_args.rae_len, "Window resolution (samples)");
    train->add_option("--d-z", train_args.d_z, "Feature width");
    train->add_option("--d-h", train_args.d_h, "Code width");
    train->add_option("--d-m", train_args.d_m, "Recurrent hidden width");
    train->add_option("--max-segment-len", train_args.max_segment_len,
                      "Segment length cap (0 = 8 x rae-len)");
    train->add_option("--epochs", train_args.epochs, "Training epochs");
    train->add_option("--sequence-len", train_args.sequence_len, "Windows per unrolled sequence");
    train->add_option("--learning-rate", train_args.learning_rate, "Optimizer step size");
    train->add_option("--seed", train_args.seed, "Deterministic seed");
    train->add_option("--validation-fraction", train_args.validation_fraction,
                      "Fraction of sequences held out for validation");

    CompressArgs compress_args;
    CLI::App* compress = app.add_subcommand("compress", "Compress a CSV series");
    std::string compress_config;
    compress->add_option("--config", compress_config, "Flat key=value defaults file");
    compress->add_option("--model", compress_args.model, "Trained model path")->required();
    compress->add_option("--data", compress_args.data, "Input CSV")->required();
    compress->add_option("--out", compress_args.out, "Output stream path (.raec)")->required();
    compress->add_option("--epsilon", compress_args.epsilon,
                         "Max tolerable deviation (normalized units)")
        ->required()
        ->check(CLI::PositiveNumber);
    compress->add_option("--min-window", compress_args.min_window,
                         "Smallest window (0 = max(2, rae-len/4))");
    compress->add_option("--max-window", compress_args.max_window,
                         "Largest window (0 = 8 x rae-len)");
    compress->add_option("--emit-reconstruction", compress_args.emit_reconstruction,
                         "Also write the reconstruction CSV here");

    DecompressArgs decompress_args;
    CLI::App* decompress = app.add_subcommand("decompress", "Reconstruct a CSV from a stream");
    std::string decompress_config;
    decompress->add_option("--config", decompress_config, "Flat key=value defaults file");
    decompress->add_option("--model", decompress_args.model, "Trained model path")->required();
    decompress->add_option("--data", decompress_args.data, "Input stream (.raec)")->required();
    decompress->add_option("--out", decompress_args.out, "Output CSV path")->required();

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "Rate-distortion sweep over epsilons");
    std::string eval_config;
    eval->add_option("--config", eval_config, "Flat key=value defaults file");
    eval->add_option("--model", eval_args.model, "Trained model path")->required();
    eval->add_option("--data", eval_args.data, "Input CSV")->required();
    eval->add_option("--epsilon-list", eval_args.epsilon_list, "Comma-separated epsilons")
        ->required();
    eval->add_option("--out", eval_args.out, "Metrics CSV path (stdout if omitted)");
    eval->add_option("--min-window", eval_args.min_window, "Smallest window");
    eval->add_option("--max-window", eval_args.max_window, "Largest window");

    std::string inspect_path;
    CLI::App* inspect = app.add_subcommand("inspect", "Print model or stream header info");
    inspect->add_option("--data", inspect_path, "Model (.raem) or stream (.raec) file")
        ->required();

    try {
        std::vector<std::string> args = expand_config_args(argc, argv);
        std::reverse(args.begin(), args.end()); // CLI11 consumes from the back
        app.parse(std::move(args));
        if (train->parsed()) return run_train(train_args);
        if (compress->parsed()) return run_compress(compress_args);
        if (decompress->parsed()) return run_decompress(decompress_args);
        if (eval->parsed()) return run_eval(eval_args);
        if (inspect->parsed()) return run_inspect(inspect_path);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const rae::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
