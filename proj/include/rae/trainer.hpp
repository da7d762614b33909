#pragma once

#include "rae/model.hpp"
#include "rae/preprocess.hpp"
#include "rae/types.hpp"

#include <cstdint>
#include <vector>

namespace rae {

// Sequences of window vectors, grouped per trace by build_dataset.
using Dataset = std::vector<std::vector<Vec>>;

struct TrainConfig {
    RaeDims dims;
    Scalar tau = 0.4;
    Index max_segment_len = 0; // 0 -> 8 x window resolution
    int epochs = 100;
    Index sequence_len = 8;
    Scalar learning_rate = 1e-3;
    std::uint64_t seed = 1;
    Scalar validation_fraction = 0.1;

    Index rae_len() const { return dims.d_in / dims.n_channels; }
    Index segment_cap() const { return max_segment_len > 0 ? max_segment_len : 8 * rae_len(); }
};

void validate_train_config(const TrainConfig& cfg);

/// Segments each normalized trace by total variation, resamples every
/// segment to the window resolution, and groups consecutive windows of one
/// trace into sequences of cfg.sequence_len (the last group may be shorter).
/// Traces with fewer than 2 samples are skipped with a warning on stderr.
Dataset build_dataset(const std::vector<TimeSeries>& traces, const TrainConfig& cfg);

struct EpochStats {
    Scalar train_loss;
    Scalar val_loss;
};

struct TrainingLog {
    std::vector<EpochStats> epochs;
    double wall_seconds = 0;
};

struct TrainResult {
    RaeParams params;
    TrainingLog log;
};

/// Seeded deterministic loop: per epoch, shuffle, then one forward/backward/
/// optimizer step per sequence. Returns the parameters with the best
/// validation loss (training loss when the validation split is empty).
/// Throws NumericError if the loss stops being finite.
TrainResult train(const TrainConfig& cfg, const Dataset& dataset);

struct EvalMetrics {
    Scalar mean_mse;
    Scalar max_linf; // max over windows of the largest per-sample deviation
};

/// Forward-only metrics over the dataset; state resets per sequence.
EvalMetrics evaluate(const RaeParams& params, const Dataset& dataset);

struct EvictionResult {
    std::vector<TimeSeries> kept;
    std::vector<std::string> dropped;
};

/// Drops traces whose total variation per sample exceeds the corpus's
/// 99th percentile (nearest-rank). Expects normalized traces.
EvictionResult evict_outliers(const std::vector<TimeSeries>& traces);

/// Deterministic in-place Fisher-Yates shuffle (stdlib shuffles differ
/// between implementations).
template <class T>
void seeded_shuffle(std::vector<T>& items, SeededRng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.raw() % i);
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace rae
