// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. The synthetic end-to-end criterion trains a real model,
// so a full run takes a few minutes.

#include "rae/codec.hpp"
#include "rae/model.hpp"
#include "rae/preprocess.hpp"
#include "rae/synthetic.hpp"
#include "rae/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace rae;

namespace {

struct CriterionResult {
    std::string name;
    bool ok = false;
    std::string detail;
    double seconds = 0;
};

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

CodecConfig codec_cfg(Scalar epsilon) {
    CodecConfig cfg;
    cfg.epsilon = epsilon;
    cfg.rae_len = 32;
    return cfg;
}

RaeDims dims_for(Index channels) { return RaeDims{32 * channels, 16, 4, 16, channels}; }

// Shared setup: models trained on the bundled sinusoid corpus.
struct TrainedModels {
    RaeParams c1;
    double c1_train_seconds = 0;
    std::size_t c1_windows = 0;
    RaeParams c3;
    std::vector<TimeSeries> held_out_c1; // never seen by the trainer
};

TrainedModels train_models() {
    TrainedModels models{zero_params(dims_for(1)), 0, 0, zero_params(dims_for(3)), {}};

    SyntheticConfig synth;
    synth.n_traces = 44;
    synth.trace_len = 1024;
    synth.n_channels = 1;
    synth.seed = 101;
    synth.noise_amplitude = 0.008;
    const auto corpus = synthetic_corpus(synth);
    const std::size_t n_train = 36;
    std::vector<TimeSeries> train_traces(corpus.begin(),
                                         corpus.begin() + static_cast<long>(n_train));
    models.held_out_c1.assign(corpus.begin() + static_cast<long>(n_train), corpus.end());

    TrainConfig cfg;
    cfg.dims = dims_for(1);
    cfg.tau = 0.4;
    cfg.epochs = 220;
    cfg.sequence_len = 8;
    cfg.learning_rate = 3e-3;
    cfg.seed = 7;
    cfg.validation_fraction = 0.1;

    const Dataset dataset = build_dataset(train_traces, cfg);
    for (const auto& seq : dataset) models.c1_windows += seq.size();
    std::cerr << "[setup] training 1-channel model on " << models.c1_windows << " windows\n";
    TrainResult result = train(cfg, dataset);
    models.c1 = std::move(result.params);
    models.c1_train_seconds = result.log.wall_seconds;
    std::cerr << "[setup] 1-channel model trained in " << fmt(models.c1_train_seconds)
              << " s, final val loss " << fmt(result.log.epochs.back().val_loss) << "\n";

    SyntheticConfig synth3 = synth;
    synth3.n_traces = 12;
    synth3.trace_len = 512;
    synth3.n_channels = 3;
    synth3.seed = 202;
    TrainConfig cfg3 = cfg;
    cfg3.dims = dims_for(3);
    cfg3.epochs = 60;
    const Dataset dataset3 = build_dataset(synthetic_corpus(synth3), cfg3);
    std::cerr << "[setup] training 3-channel model\n";
    models.c3 = train(cfg3, dataset3).params;
    return models;
}

// Criterion 1 and 2 share the randomized corpus sweep.
struct SweepOutcome {
    bool linf_ok = true;
    bool roundtrip_ok = true;
    std::string linf_detail;
    std::string roundtrip_detail;
    double compress_seconds = 0;
};

SweepOutcome run_sweep(const TrainedModels& models) {
    SweepOutcome out;
    SeededRng rng(4242);
    Scalar worst_margin = -1e9;
    Timer timer;
    for (int i = 0; i < 100; ++i) {
        const Index channels = (i % 2 == 0) ? 1 : 3;
        const bool use_trained = (i % 4) < 2;
        const RaeParams untrained = init_params(dims_for(channels), 1000 + rng.raw() % 1000);
        const RaeParams& params =
            use_trained ? (channels == 1 ? models.c1 : models.c3) : untrained;

        SyntheticConfig synth;
        synth.n_traces = 1;
        synth.trace_len = 200 + static_cast<Index>(rng.raw() % 4801);
        synth.n_channels = channels;
        synth.seed = rng.raw();
        synth.min_period = 48;
        const TimeSeries series = synthetic_corpus(synth)[0];
        const Scalar epsilon = rng.uniform(0.05, 0.3);

        const CompressResult result = compress(params, series, codec_cfg(epsilon));
        const Deviation dev =
            deviation_metrics(series.samples, result.reconstruction.normalized);
        if (dev.linf > epsilon && out.linf_ok) {
            out.linf_ok = false;
            out.linf_detail = "case " + std::to_string(i) + ": linf " + fmt(dev.linf) +
                              " > epsilon " + fmt(epsilon);
        }
        worst_margin = std::max(worst_margin, dev.linf - epsilon);

        const Bytes bytes = serialize_stream(result.stream);
        const CompressedStream parsed = parse_stream(bytes);
        const DecompressResult redo = decompress(params, parsed);
        const bool bits_equal = redo.normalized == result.reconstruction.normalized &&
                                redo.raw == result.reconstruction.raw &&
                                serialize_stream(parsed) == bytes;
        if (!bits_equal && out.roundtrip_ok) {
            out.roundtrip_ok = false;
            out.roundtrip_detail = "case " + std::to_string(i) + ": bit mismatch";
        }
    }
    out.compress_seconds = timer.seconds();
    if (out.linf_ok)
        out.linf_detail = "100 series, worst linf-epsilon margin " + fmt(worst_margin) + ", " +
                          fmt(out.compress_seconds) + " s";
    if (out.compress_seconds >= 120.0) {
        out.linf_ok = false;
        out.linf_detail += " (exceeded the 2 min budget)";
    }
    return out;
}

CriterionResult criterion_stream_fuzz(const SweepOutcome& sweep) {
    CriterionResult r;
    r.name = "round-trip-determinism";
    Timer timer;
    bool fuzz_ok = true;
    SeededRng rng(31337);
    for (int trial = 0; trial < 1000 && fuzz_ok; ++trial) {
        CompressedStream s;
        s.header.n_channels = static_cast<std::uint16_t>(1 + rng.raw() % 3);
        s.header.rae_len = static_cast<std::uint16_t>(2 + rng.raw() % 64);
        s.header.d_h = static_cast<std::uint16_t>(1 + rng.raw() % 8);
        s.header.epsilon = static_cast<float>(rng.uniform(0.01, 0.5));
        s.header.model_fingerprint = static_cast<std::uint32_t>(rng.raw());
        for (int c = 0; c < s.header.n_channels; ++c) {
            s.header.scale.push_back(static_cast<float>(rng.uniform(0.1, 10)));
            s.header.offset.push_back(static_cast<float>(rng.uniform(-5, 5)));
        }
        std::uint64_t covered = 0;
        const int n_blocks = static_cast<int>(rng.raw() % 24);
        for (int b = 0; b < n_blocks; ++b) {
            Block blk;
            blk.kind = (rng.raw() % 2 == 0) ? BlockKind::Coded : BlockKind::Raw;
            blk.window_len = static_cast<std::uint16_t>(1 + rng.raw() % 400);
            const std::size_t count =
                blk.kind == BlockKind::Coded
                    ? s.header.d_h
                    : static_cast<std::size_t>(blk.window_len) * s.header.n_channels;
            for (std::size_t k = 0; k < count; ++k)
                blk.payload.push_back(static_cast<float>(rng.uniform(-2, 2)));
            covered += blk.window_len;
            s.blocks.push_back(std::move(blk));
        }
        s.header.n_samples = covered;

        const Bytes a = serialize_stream(s);
        const CompressedStream parsed = parse_stream(a);
        fuzz_ok = parsed == s && serialize_stream(parsed) == a;
    }
    r.ok = sweep.roundtrip_ok && fuzz_ok;
    r.detail = sweep.roundtrip_ok
                   ? (fuzz_ok ? "100 codec round trips + 1000 stream fuzz cases bit-identical"
                              : "stream fuzz mismatch")
                   : sweep.roundtrip_detail;
    r.seconds = timer.seconds();
    return r;
}

CriterionResult criterion_gradients() {
    CriterionResult r;
    r.name = "gradient-correctness";
    Timer timer;
    const RaeDims dims{3, 2, 1, 2, 1};
    Scalar worst = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SeededRng rng(seed * 7919);
        std::vector<Vec> xs;
        for (int t = 0; t < 3; ++t) {
            Vec x(3);
            // Modest window amplitude keeps the finite-difference rounding
            // noise far below the relative-error threshold.
            for (Index i = 0; i < 3; ++i) x(i) = rng.uniform(-0.1, 0.1);
            xs.push_back(x);
        }
        const RaeParams params = init_params(dims, seed);
        const ForwardResult fwd = forward_sequence(params, xs);
        const RaeGrads grads = backward_sequence(params, fwd.caches, xs, fwd.x_hats);
        auto objective = [&](const Vec& flat) {
            const ForwardResult f = forward_sequence(unflatten(dims, flat), xs);
            return sequence_loss(f.x_hats, xs);
        };
        worst = std::max(worst, grad_check(objective, flatten(params), flatten(grads), 1e-5));
    }
    r.seconds = timer.seconds();
    r.ok = worst <= 1e-4 && r.seconds < 30.0;
    r.detail = "worst relative error " + fmt(worst) + " over 10 seeds, " + fmt(r.seconds) + " s";
    return r;
}

CriterionResult criterion_segmentation() {
    CriterionResult r;
    r.name = "segmentation-properties";
    Timer timer;
    SeededRng rng(555);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        SyntheticConfig synth;
        synth.n_traces = 1;
        synth.trace_len = 50 + static_cast<Index>(rng.raw() % 1500);
        synth.n_channels = 1 + static_cast<Index>(rng.raw() % 3);
        synth.seed = rng.raw();
        synth.min_period = 16;
        synth.max_period = 512;
        const TimeSeries series = synthetic_corpus(synth)[0];
        SegmenterConfig cfg{rng.uniform(0.1, 1.0), 16 + static_cast<Index>(rng.raw() % 256)};
        const auto segments = segment_by_tv(series, cfg);

        Index expect = 0;
        for (const Segment& seg : segments) {
            if (seg.start != expect || seg.length() < 1 || seg.length() > cfg.max_segment_len) {
                ok = false;
                detail = "tiling violated in trial " + std::to_string(trial);
                break;
            }
            expect = seg.end;
        }
        if (ok && expect != series.n()) {
            ok = false;
            detail = "segments do not cover the series in trial " + std::to_string(trial);
        }
        for (std::size_t s = 0; ok && s + 1 < segments.size(); ++s) {
            const Segment& seg = segments[s];
            const Scalar tv = total_variation(series, seg);
            if (!(tv >= cfg.tau || seg.length() == cfg.max_segment_len)) {
                ok = false;
                detail = "non-final segment below tau without hitting the cap (trial " +
                         std::to_string(trial) + ")";
            }
            if (ok && seg.length() >= 2 &&
                !(total_variation(series, Segment{seg.start, seg.end - 1}) < cfg.tau)) {
                ok = false;
                detail = "greedy minimality violated (trial " + std::to_string(trial) + ")";
            }
        }
        // Additivity across a shared boundary sample.
        for (int check = 0; ok && check < 10; ++check) {
            const Index b = 1 + static_cast<Index>(rng.raw() %
                                                   static_cast<std::uint64_t>(series.n() - 2));
            const Scalar left = total_variation(series, Segment{0, b + 1});
            const Scalar right = total_variation(series, Segment{b, series.n()});
            const Scalar whole = total_variation(series, Segment{0, series.n()});
            if (std::abs(left + right - whole) > 1e-12) {
                ok = false;
                detail = "additivity off by " + fmt(std::abs(left + right - whole));
            }
        }
    }
    r.ok = ok;
    r.seconds = timer.seconds();
    r.detail = ok ? "100 traces tiled, minimal, additive to 1e-12" : detail;
    return r;
}

CriterionResult criterion_search_budget(const TrainedModels& models) {
    CriterionResult r;
    r.name = "search-budget";
    Timer timer;
    bool ok = true;
    int worst_probes = 0;
    std::string detail;

    // Synthetic oracles over the bare schedule.
    SeededRng rng(808);
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        const Index remaining = 2 + static_cast<Index>(rng.raw() % 4000);
        const Index min_w = std::min<Index>(remaining, 2 + static_cast<Index>(rng.raw() % 16));
        const Index max_w = min_w + static_cast<Index>(rng.raw() % 1024);
        const std::uint64_t salt = rng.raw();
        const auto outcome = adaptive_window_search(remaining, min_w, max_w, [&](Index len) {
            return ((static_cast<std::uint64_t>(len) * 0x9E3779B9u) ^ salt) % 4 != 0;
        });
        const Index initial = std::min(remaining, max_w);
        const int budget =
            static_cast<int>(std::ceil(std::log2(static_cast<double>(initial)))) + 2;
        worst_probes = std::max(worst_probes, outcome.probes - budget);
        if (outcome.probes > budget) {
            ok = false;
            detail = "oracle schedule used " + std::to_string(outcome.probes) + " probes, budget " +
                     std::to_string(budget);
        }
    }

    // Real model probes along an actual compression pass.
    const TimeSeries series = synthetic_corpus(SyntheticConfig{1, 2000, 1, 999})[0];
    const CodecConfig cfg = codec_cfg(0.12);
    RaeState state = zero_rae_state(models.c1.dims);
    Index st = 0;
    while (st < series.n() && ok) {
        const Index remaining = series.n() - st;
        if (remaining < cfg.effective_min()) break;
        const SearchOutcome outcome = search_window(models.c1, state, series, st, cfg);
        const Index initial = std::min(remaining, cfg.effective_max());
        const int budget =
            static_cast<int>(std::ceil(std::log2(static_cast<double>(initial)))) + 2;
        if (outcome.probes > budget) {
            ok = false;
            detail = "model search used " + std::to_string(outcome.probes) + " probes, budget " +
                     std::to_string(budget);
        }
        Index advance = cfg.effective_min();
        if (outcome.input_len) {
            const auto enc = encode_step(models.c1, state,
                                         pack_window(series.samples.middleRows(st, *outcome.input_len),
                                                     cfg.rae_len));
            Vec q(enc.h.size());
            for (Index i = 0; i < q.size(); ++i)
                q(i) = static_cast<Scalar>(static_cast<float>(enc.h(i)));
            state = decode_step(models.c1, enc.state, q).state;
            advance = *outcome.input_len;
        }
        st += advance;
    }

    r.ok = ok;
    r.seconds = timer.seconds();
    r.detail = ok ? "1000 oracle schedules + live searches within ceil(log2)+2" : detail;
    return r;
}

CriterionResult criterion_end_to_end(const TrainedModels& models) {
    CriterionResult r;
    r.name = "synthetic-end-to-end";
    Timer timer;

    std::vector<std::string> problems;
    if (models.c1_train_seconds > 600.0)
        problems.push_back("training took " + fmt(models.c1_train_seconds) + " s > 600 s");

    // Aggregate rate/distortion at each deviation over the held-out traces.
    const std::vector<Scalar> epsilons = {0.05, 0.1, 0.2};
    std::vector<Scalar> ratios;
    Scalar rmse_at_01 = 0;
    std::size_t samples_at_01 = 0;
    for (Scalar eps : epsilons) {
        double compressed_bytes = 0;
        double original_bytes = 0;
        Scalar sq_sum = 0;
        std::size_t n_vals = 0;
        for (const TimeSeries& trace : models.held_out_c1) {
            const CompressResult result = compress(models.c1, trace, codec_cfg(eps));
            compressed_bytes += static_cast<double>(serialize_stream(result.stream).size());
            original_bytes += static_cast<double>(trace.n() * trace.channels()) * 4.0;
            const Mat diff = trace.samples - result.reconstruction.normalized;
            sq_sum += diff.squaredNorm();
            n_vals += static_cast<std::size_t>(diff.size());
        }
        ratios.push_back(static_cast<Scalar>(compressed_bytes / original_bytes));
        if (eps == 0.1) {
            rmse_at_01 = std::sqrt(sq_sum / static_cast<Scalar>(n_vals));
            samples_at_01 = n_vals;
        }
    }

    if (!(ratios[1] <= 0.5))
        problems.push_back("ratio at eps 0.1 is " + fmt(ratios[1]) + " > 0.5");
    if (!(rmse_at_01 <= 0.05))
        problems.push_back("rmse at eps 0.1 is " + fmt(rmse_at_01) + " > 0.05");
    if (!(ratios[0] > ratios[1] && ratios[1] > ratios[2]))
        problems.push_back("ratios not strictly decreasing: " + fmt(ratios[0]) + ", " +
                           fmt(ratios[1]) + ", " + fmt(ratios[2]));

    r.ok = problems.empty();
    r.seconds = timer.seconds() + models.c1_train_seconds;
    if (r.ok) {
        r.detail = "train " + fmt(models.c1_train_seconds) + " s on " +
                   std::to_string(models.c1_windows) + " windows; held-out ratios " +
                   fmt(ratios[0]) + " / " + fmt(ratios[1]) + " / " + fmt(ratios[2]) +
                   " at eps 0.05/0.1/0.2; rmse@0.1 " + fmt(rmse_at_01) + " over " +
                   std::to_string(samples_at_01) + " samples";
    } else {
        for (std::size_t i = 0; i < problems.size(); ++i)
            r.detail += (i ? "; " : "") + problems[i];
    }
    return r;
}

CriterionResult criterion_adversarial(const TrainedModels& models) {
    CriterionResult r;
    r.name = "adversarial-fallback";
    Timer timer;
    const TimeSeries noise = white_noise_series(3000, 1, 771);
    const CompressResult result = compress(models.c1, noise, codec_cfg(0.01));
    const Deviation dev = deviation_metrics(noise.samples, result.reconstruction.normalized);
    const bool all_raw = count_raw_blocks(result.stream) == result.stream.blocks.size();
    r.ok = all_raw && dev.linf == 0.0;
    r.seconds = timer.seconds();
    r.detail = "blocks " + std::to_string(result.stream.blocks.size()) + ", raw " +
               std::to_string(count_raw_blocks(result.stream)) + ", linf " + fmt(dev.linf);
    return r;
}

CriterionResult criterion_adaptive_windows(const TrainedModels& models) {
    CriterionResult r;
    r.name = "adaptive-window-behavior";
    Timer timer;

    const Index n = 2048;
    Mat samples(n, 1);
    samples.topRows(n / 2).setConstant(0.2);
    for (Index t = n / 2; t < n; ++t)
        samples(t, 0) = 0.9 * std::sin(2.0 * 3.14159265358979324 * static_cast<Scalar>(t) / 96.0);
    for (Index t = 0; t < n; ++t)
        samples(t, 0) = static_cast<Scalar>(static_cast<float>(samples(t, 0)));
    const TimeSeries series = make_series(std::move(samples), "half_and_half");

    const CompressResult result = compress(models.c1, series, codec_cfg(0.1));
    double first_sum = 0, second_sum = 0;
    std::size_t first_n = 0, second_n = 0;
    Index at = 0;
    for (const Block& blk : result.stream.blocks) {
        if (blk.kind == BlockKind::Coded) {
            if (at < n / 2) {
                first_sum += blk.window_len;
                ++first_n;
            } else {
                second_sum += blk.window_len;
                ++second_n;
            }
        }
        at += blk.window_len;
    }
    const double first_mean = first_n ? first_sum / static_cast<double>(first_n) : 0.0;
    const double second_mean = second_n ? second_sum / static_cast<double>(second_n) : 0.0;
    r.ok = first_n > 0 && second_n > 0 && first_mean > second_mean;
    r.seconds = timer.seconds();
    r.detail = "mean coded window " + fmt(first_mean) + " (quiet half, " +
               std::to_string(first_n) + " blocks) vs " + fmt(second_mean) + " (active half, " +
               std::to_string(second_n) + " blocks)";
    return r;
}

} // namespace

int main() {
    std::vector<CriterionResult> results;

    std::cerr << "[setup] training models for the acceptance run...\n";
    const TrainedModels models = train_models();

    std::cerr << "[run] randomized codec sweep\n";
    const SweepOutcome sweep = run_sweep(models);
    CriterionResult linf;
    linf.name = "linf-guarantee";
    linf.ok = sweep.linf_ok;
    linf.detail = sweep.linf_detail;
    linf.seconds = sweep.compress_seconds;
    results.push_back(linf);

    results.push_back(criterion_stream_fuzz(sweep));
    std::cerr << "[run] gradient check\n";
    results.push_back(criterion_gradients());
    std::cerr << "[run] segmentation properties\n";
    results.push_back(criterion_segmentation());
    std::cerr << "[run] search budget\n";
    results.push_back(criterion_search_budget(models));
    std::cerr << "[run] synthetic end-to-end\n";
    results.push_back(criterion_end_to_end(models));
    std::cerr << "[run] adversarial fallback\n";
    results.push_back(criterion_adversarial(models));
    std::cerr << "[run] adaptive windows\n";
    results.push_back(criterion_adaptive_windows(models));

    int failures = 0;
    for (const CriterionResult& r : results) {
        if (!r.ok) ++failures;
        std::printf("%s %-26s (%.1f s) %s\n", r.ok ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                    r.detail.c_str());
    }
    return failures;
}
