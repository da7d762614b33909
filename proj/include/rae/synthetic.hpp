#pragma once

#include "rae/preprocess.hpp"
#include "rae/types.hpp"

#include <cstdint>
#include <vector>

namespace rae {

// Seeded generator for self-contained experiments: each channel is a sum
// of 2-5 random sinusoids plus low-amplitude noise, scaled into [-1, 1]
// and snapped to the 32-bit float grid the codec stores raw samples on.
struct SyntheticConfig {
    Index n_traces = 40;
    Index trace_len = 1024;
    Index n_channels = 1;
    std::uint64_t seed = 7;
    Scalar noise_amplitude = 0.01;
    Scalar min_period = 64;   // samples per cycle, log-uniform draw
    Scalar max_period = 1024;
};

std::vector<TimeSeries> synthetic_corpus(const SyntheticConfig& cfg);

/// Single already-normalized white-noise trace on the float grid; the
/// adversarial input nothing learnable can compress.
TimeSeries white_noise_series(Index n, Index channels, std::uint64_t seed);

} // namespace rae
