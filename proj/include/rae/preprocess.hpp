#pragma once

#include "rae/types.hpp"

#include <string>
#include <vector>

namespace rae {

/// n_samples x n_channels series plus the per-channel affine map that took
/// it to [-1, 1]. `constant_channel[c]` marks channels that were flat in the
/// raw data (normalized to all zeros with scale 1).
struct TimeSeries {
    Mat samples;
    Vec scale;
    Vec offset;
    std::vector<bool> constant_channel;
    std::string name;

    Index n() const { return samples.rows(); }
    Index channels() const { return samples.cols(); }
};

TimeSeries make_series(Mat samples, std::string name = {});

struct SegmenterConfig {
    Scalar tau = 0.4;
    Index max_segment_len = 256;
};

void validate_segmenter_config(const SegmenterConfig& cfg);

/// Half-open index range; consecutive segments tile the series.
struct Segment {
    Index start = 0;
    Index end = 0;

    Index length() const { return end - start; }
    bool operator==(const Segment&) const = default;
};

/// Sum over interior steps of the l1 norm across channels of consecutive
/// differences inside [start, end). A single-point range has zero variation.
Scalar total_variation(const TimeSeries& series, Segment range);

/// Greedy left-to-right scan: a segment grows until its variation first
/// reaches tau or its length hits the cap, then the cut is placed.
/// The final segment may fall short of tau.
std::vector<Segment> segment_by_tv(const TimeSeries& series, const SegmenterConfig& cfg);

/// Per-channel linear interpolation onto the grid t_k = k (n-1)/(m-1).
/// Endpoints are preserved exactly; m == n returns the input unchanged.
Mat resample(const Mat& values, Index target_len);
Vec resample(const Vec& values, Index target_len);

/// Per-channel affine map onto [-1, 1]; records scale/offset on the result.
/// A constant channel maps to zeros with scale 1 and is flagged.
TimeSeries normalize(const TimeSeries& series);

/// Inverse of normalize using the recorded scale/offset.
Mat denormalize(const TimeSeries& series);

/// Numeric CSV, one row per timestep, one column per channel. A first row
/// whose cells are all non-numeric is treated as a header and skipped.
TimeSeries load_csv_text(const std::string& text, const std::string& name = {});
TimeSeries load_csv_file(const std::string& path);

std::string to_csv(const Mat& samples);

/// Resamples a window to `rae_len` rows and flattens channel-major
/// (channel 0's samples, then channel 1's, ...) into a d_in vector.
Vec pack_window(const Mat& window, Index rae_len);

/// Inverse of pack_window followed by resampling to `target_len` rows.
Mat unpack_window(const Vec& flat, Index rae_len, Index channels, Index target_len);

} // namespace rae
