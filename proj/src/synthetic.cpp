#include "rae/synthetic.hpp"

#include "rae/nn.hpp"

#include <cmath>
#include <numbers>

namespace rae {

std::vector<TimeSeries> synthetic_corpus(const SyntheticConfig& cfg) {
    require(cfg.n_traces >= 1 && cfg.trace_len >= 2 && cfg.n_channels >= 1,
            "synthetic_corpus: invalid shape");
    require(cfg.min_period > 0 && cfg.min_period <= cfg.max_period,
            "synthetic_corpus: invalid period range");
    SeededRng rng(cfg.seed);

    std::vector<TimeSeries> traces;
    traces.reserve(static_cast<std::size_t>(cfg.n_traces));
    for (Index i = 0; i < cfg.n_traces; ++i) {
        Mat samples(cfg.trace_len, cfg.n_channels);
        for (Index c = 0; c < cfg.n_channels; ++c) {
            const int n_waves = 2 + static_cast<int>(rng.raw() % 4);
            std::vector<Scalar> amp(static_cast<std::size_t>(n_waves));
            std::vector<Scalar> omega(static_cast<std::size_t>(n_waves));
            std::vector<Scalar> phase(static_cast<std::size_t>(n_waves));
            for (int k = 0; k < n_waves; ++k) {
                amp[static_cast<std::size_t>(k)] = rng.uniform(0.3, 1.0);
                const Scalar period = std::exp(
                    rng.uniform(std::log(cfg.min_period), std::log(cfg.max_period)));
                omega[static_cast<std::size_t>(k)] = 2.0 * std::numbers::pi / period;
                phase[static_cast<std::size_t>(k)] = rng.uniform(0.0, 2.0 * std::numbers::pi);
            }
            for (Index t = 0; t < cfg.trace_len; ++t) {
                Scalar v = 0;
                for (int k = 0; k < n_waves; ++k)
                    v += amp[static_cast<std::size_t>(k)] *
                         std::sin(omega[static_cast<std::size_t>(k)] * static_cast<Scalar>(t) +
                                  phase[static_cast<std::size_t>(k)]);
                v += rng.uniform(-cfg.noise_amplitude, cfg.noise_amplitude);
                samples(t, c) = v;
            }
            const Scalar peak = samples.col(c).cwiseAbs().maxCoeff();
            if (peak > 0) samples.col(c) /= peak;
            for (Index t = 0; t < cfg.trace_len; ++t)
                samples(t, c) = static_cast<Scalar>(static_cast<float>(samples(t, c)));
        }
        traces.push_back(make_series(std::move(samples), "synth_" + std::to_string(i)));
    }
    return traces;
}

TimeSeries white_noise_series(Index n, Index channels, std::uint64_t seed) {
    require(n >= 1 && channels >= 1, "white_noise_series: invalid shape");
    SeededRng rng(seed);
    Mat samples(n, channels);
    for (Index t = 0; t < n; ++t)
        for (Index c = 0; c < channels; ++c)
            samples(t, c) = static_cast<Scalar>(static_cast<float>(rng.uniform(-1.0, 1.0)));
    return make_series(std::move(samples), "white_noise");
}

} // namespace rae
