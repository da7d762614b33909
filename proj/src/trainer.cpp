#include "rae/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace rae {

void validate_train_config(const TrainConfig& cfg) {
    validate_dims(cfg.dims);
    require(cfg.tau > 0, "train config: tau must be positive");
    require(cfg.epochs >= 1, "train config: epochs must be >= 1");
    require(cfg.sequence_len >= 1, "train config: sequence_len must be >= 1");
    require(cfg.learning_rate > 0, "train config: learning rate must be positive");
    require(cfg.validation_fraction >= 0 && cfg.validation_fraction < 1,
            "train config: validation fraction must lie in [0, 1)");
    require(cfg.dims.d_in % cfg.dims.n_channels == 0,
            "train config: d_in must be a multiple of n_channels");
}

Dataset build_dataset(const std::vector<TimeSeries>& traces, const TrainConfig& cfg) {
    validate_train_config(cfg);
    const Index rae_len = cfg.rae_len();
    SegmenterConfig seg_cfg{cfg.tau, cfg.segment_cap()};

    Dataset dataset;
    for (const TimeSeries& trace : traces) {
        if (trace.n() < 2) {
            std::cerr << "build_dataset: skipping trace '" << trace.name
                      << "' with fewer than 2 samples\n";
            continue;
        }
        require(trace.channels() == cfg.dims.n_channels,
                "build_dataset: trace '" + trace.name + "' has " +
                    std::to_string(trace.channels()) + " channels, config expects " +
                    std::to_string(cfg.dims.n_channels));

        std::vector<Vec> windows;
        for (const Segment& seg : segment_by_tv(trace, seg_cfg)) {
            if (seg.length() < 2) continue; // tail stub too short to resample
            windows.push_back(
                pack_window(trace.samples.middleRows(seg.start, seg.length()), rae_len));
        }
        for (std::size_t at = 0; at < windows.size(); at += static_cast<std::size_t>(cfg.sequence_len)) {
            const std::size_t take =
                std::min(static_cast<std::size_t>(cfg.sequence_len), windows.size() - at);
            dataset.emplace_back(windows.begin() + static_cast<std::ptrdiff_t>(at),
                                 windows.begin() + static_cast<std::ptrdiff_t>(at + take));
        }
    }
    return dataset;
}

namespace {

Scalar mean_sequence_loss(const RaeParams& params, const std::vector<Vec>& xs) {
    const ForwardResult fwd = forward_sequence(params, xs);
    return sequence_loss(fwd.x_hats, xs) / static_cast<Scalar>(xs.size());
}

} // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& dataset) {
    validate_train_config(cfg);
    require(!dataset.empty(), "train: empty dataset");
    for (const auto& seq : dataset) require(!seq.empty(), "train: empty sequence in dataset");

    RaeParams params = init_params(cfg.dims, cfg.seed);
    Vec flat = flatten(params);
    OptimizerState opt = make_optimizer_state(flat.size(), cfg.learning_rate);

    // Shuffle stream is independent of the weight-init stream.
    SeededRng rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    seeded_shuffle(order, rng);

    const auto n_val = static_cast<std::size_t>(
        std::floor(cfg.validation_fraction * static_cast<Scalar>(dataset.size())));
    std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    std::vector<std::size_t> train_idx(order.begin(),
                                       order.end() - static_cast<std::ptrdiff_t>(n_val));

    TrainResult result;
    result.log.epochs.reserve(static_cast<std::size_t>(cfg.epochs));
    Scalar best_val = std::numeric_limits<Scalar>::infinity();
    Vec best_flat = flat;
    const auto started = std::chrono::steady_clock::now();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        seeded_shuffle(train_idx, rng);
        Scalar train_loss_sum = 0;
        for (std::size_t idx : train_idx) {
            const std::vector<Vec>& xs = dataset[idx];
            const Scalar inv_t = 1.0 / static_cast<Scalar>(xs.size());

            const ForwardResult fwd = forward_sequence(params, xs);
            const Scalar loss = sequence_loss(fwd.x_hats, xs) * inv_t;
            if (!std::isfinite(loss))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   "; the learning rate is likely too high");
            train_loss_sum += loss;

            RaeGrads grads = backward_sequence(params, fwd.caches, xs, fwd.x_hats);
            flat = optimizer_step(flat, flatten(grads) * inv_t, opt);
            params = unflatten(cfg.dims, flat);
        }
        const Scalar train_loss = train_loss_sum / static_cast<Scalar>(train_idx.size());

        Scalar val_loss = train_loss;
        if (!val_idx.empty()) {
            Scalar sum = 0;
            for (std::size_t idx : val_idx) sum += mean_sequence_loss(params, dataset[idx]);
            val_loss = sum / static_cast<Scalar>(val_idx.size());
        }
        if (val_loss < best_val) {
            best_val = val_loss;
            best_flat = flat;
        }
        result.log.epochs.push_back(EpochStats{train_loss, val_loss});
    }

    result.log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.params = unflatten(cfg.dims, best_flat);
    return result;
}

EvalMetrics evaluate(const RaeParams& params, const Dataset& dataset) {
    require(!dataset.empty(), "evaluate: empty dataset");
    Scalar mse_sum = 0;
    Scalar max_linf = 0;
    std::size_t n_windows = 0;
    for (const auto& xs : dataset) {
        require(!xs.empty(), "evaluate: empty sequence");
        const ForwardResult fwd = forward_sequence(params, xs);
        for (std::size_t t = 0; t < xs.size(); ++t) {
            mse_sum += mse_loss(fwd.x_hats[t], xs[t]).loss;
            max_linf = std::max(max_linf, (fwd.x_hats[t] - xs[t]).cwiseAbs().maxCoeff());
            ++n_windows;
        }
    }
    return EvalMetrics{mse_sum / static_cast<Scalar>(n_windows), max_linf};
}

EvictionResult evict_outliers(const std::vector<TimeSeries>& traces) {
    EvictionResult result;
    if (traces.empty()) return result;

    std::vector<Scalar> tv_rate(traces.size());
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const TimeSeries& t = traces[i];
        tv_rate[i] = t.n() >= 2 ? total_variation(t, Segment{0, t.n()}) /
                                      static_cast<Scalar>(t.n())
                                : 0.0;
    }
    std::vector<Scalar> sorted = tv_rate;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(
        std::ceil(0.99 * static_cast<double>(sorted.size())));
    const Scalar threshold = sorted[std::min(rank == 0 ? 0 : rank - 1, sorted.size() - 1)];

    for (std::size_t i = 0; i < traces.size(); ++i) {
        if (tv_rate[i] > threshold)
            result.dropped.push_back(traces[i].name);
        else
            result.kept.push_back(traces[i]);
    }
    return result;
}

} // namespace rae
