#include "rae/preprocess.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace rae {

TimeSeries make_series(Mat samples, std::string name) {
    TimeSeries s;
    s.samples = std::move(samples);
    s.scale = Vec::Ones(s.samples.cols());
    s.offset = Vec::Zero(s.samples.cols());
    s.constant_channel.assign(static_cast<std::size_t>(s.samples.cols()), false);
    s.name = std::move(name);
    return s;
}

void validate_segmenter_config(const SegmenterConfig& cfg) {
    require(cfg.tau > 0, "segmenter: tau must be positive");
    require(cfg.max_segment_len >= 1, "segmenter: max_segment_len must be positive");
}

Scalar total_variation(const TimeSeries& series, Segment range) {
    require(range.start >= 0 && range.start < range.end && range.end <= series.n(),
            "total_variation: range [" + std::to_string(range.start) + ", " +
                std::to_string(range.end) + ") out of bounds for n=" + std::to_string(series.n()));
    Scalar tv = 0;
    for (Index t = range.start + 1; t < range.end; ++t)
        tv += (series.samples.row(t) - series.samples.row(t - 1)).cwiseAbs().sum();
    return tv;
}

std::vector<Segment> segment_by_tv(const TimeSeries& series, const SegmenterConfig& cfg) {
    validate_segmenter_config(cfg);
    require(series.n() >= 1, "segment_by_tv: empty series");

    std::vector<Segment> segments;
    Index start = 0;
    Scalar tv = 0;
    for (Index t = 0; t < series.n(); ++t) {
        // Differences crossing a cut do not count toward the next segment.
        if (t > start) tv += (series.samples.row(t) - series.samples.row(t - 1)).cwiseAbs().sum();
        const Index len = t - start + 1;
        if (tv >= cfg.tau || len >= cfg.max_segment_len) {
            segments.push_back(Segment{start, t + 1});
            start = t + 1;
            tv = 0;
        }
    }
    if (start < series.n()) segments.push_back(Segment{start, series.n()});
    return segments;
}

Mat resample(const Mat& values, Index target_len) {
    const Index n = values.rows();
    require(n >= 2, "resample: input length must be >= 2, got " + std::to_string(n));
    require(target_len >= 2, "resample: target length must be >= 2, got " +
                                 std::to_string(target_len));
    if (target_len == n) return values;

    Mat out(target_len, values.cols());
    const Scalar step = static_cast<Scalar>(n - 1) / static_cast<Scalar>(target_len - 1);
    out.row(0) = values.row(0);
    out.row(target_len - 1) = values.row(n - 1);
    for (Index k = 1; k < target_len - 1; ++k) {
        const Scalar pos = static_cast<Scalar>(k) * step;
        const Index lo = static_cast<Index>(pos);
        const Scalar frac = pos - static_cast<Scalar>(lo);
        out.row(k) = (1.0 - frac) * values.row(lo) + frac * values.row(lo + 1);
    }
    return out;
}

Vec resample(const Vec& values, Index target_len) {
    Mat column = values;
    return resample(column, target_len).col(0);
}

TimeSeries normalize(const TimeSeries& series) {
    require(series.n() >= 1, "normalize: empty series");
    TimeSeries out = series;
    out.scale = Vec::Ones(series.channels());
    out.offset = Vec::Zero(series.channels());
    out.constant_channel.assign(static_cast<std::size_t>(series.channels()), false);
    for (Index c = 0; c < series.channels(); ++c) {
        const Scalar hi = series.samples.col(c).maxCoeff();
        const Scalar lo = series.samples.col(c).minCoeff();
        if (hi == lo) {
            out.scale(c) = 1.0;
            out.offset(c) = hi;
            out.constant_channel[static_cast<std::size_t>(c)] = true;
            out.samples.col(c).setZero();
        } else {
            out.scale(c) = (hi - lo) / 2.0;
            out.offset(c) = (hi + lo) / 2.0;
            out.samples.col(c) = (series.samples.col(c).array() - out.offset(c)) / out.scale(c);
        }
    }
    return out;
}

Mat denormalize(const TimeSeries& series) {
    Mat raw(series.n(), series.channels());
    for (Index c = 0; c < series.channels(); ++c)
        raw.col(c) = series.samples.col(c).array() * series.scale(c) + series.offset(c);
    return raw;
}

namespace {

bool parse_number(const std::string& cell, Scalar& out) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    if (begin == end) return false;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

} // namespace

TimeSeries load_csv_text(const std::string& text, const std::string& name) {
    std::vector<std::vector<Scalar>> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t file_row = 0;
    Index n_cols = -1;
    bool first_data_row = true;

    while (std::getline(in, line)) {
        ++file_row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_row(line);

        if (first_data_row) {
            // A fully non-numeric first row is a header.
            bool any_numeric = false;
            Scalar tmp;
            for (const auto& c : cells)
                if (parse_number(c, tmp)) any_numeric = true;
            if (!any_numeric) {
                first_data_row = false;
                continue;
            }
        }

        std::vector<Scalar> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (!parse_number(cells[j], row[j]))
                throw FormatError("csv: non-numeric cell at row " + std::to_string(file_row) +
                                  " column " + std::to_string(j + 1) + " in " + name);
        }
        if (n_cols < 0) {
            n_cols = static_cast<Index>(row.size());
        } else if (static_cast<Index>(row.size()) != n_cols) {
            throw FormatError("csv: ragged row at row " + std::to_string(file_row) + " (" +
                              std::to_string(row.size()) + " cells, expected " +
                              std::to_string(n_cols) + ") in " + name);
        }
        rows.push_back(std::move(row));
        first_data_row = false;
    }

    if (rows.empty()) throw FormatError("csv: no data rows in " + name);

    Mat samples(static_cast<Index>(rows.size()), n_cols);
    for (Index i = 0; i < samples.rows(); ++i)
        for (Index j = 0; j < n_cols; ++j)
            samples(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return make_series(std::move(samples), name);
}

TimeSeries load_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("csv: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return load_csv_text(buffer.str(), path);
}

std::string to_csv(const Mat& samples) {
    std::string out;
    out.reserve(static_cast<std::size_t>(samples.size()) * 12);
    char buf[32];
    for (Index i = 0; i < samples.rows(); ++i) {
        for (Index j = 0; j < samples.cols(); ++j) {
            const int len = std::snprintf(buf, sizeof(buf), "%.17g", samples(i, j));
            if (j) out.push_back(',');
            out.append(buf, static_cast<std::size_t>(len));
        }
        out.push_back('\n');
    }
    return out;
}

Vec pack_window(const Mat& window, Index rae_len) {
    const Mat scaled = resample(window, rae_len);
    Vec flat(rae_len * scaled.cols());
    for (Index c = 0; c < scaled.cols(); ++c) flat.segment(c * rae_len, rae_len) = scaled.col(c);
    return flat;
}

Mat unpack_window(const Vec& flat, Index rae_len, Index channels, Index target_len) {
    require(flat.size() == rae_len * channels,
            "unpack_window: flat length != rae_len * channels");
    Mat window(rae_len, channels);
    for (Index c = 0; c < channels; ++c) window.col(c) = flat.segment(c * rae_len, rae_len);
    return resample(window, target_len);
}

} // namespace rae
