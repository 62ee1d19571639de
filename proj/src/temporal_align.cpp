#include "ragent/temporal_align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "ragent/error.hpp"

namespace ragent {

MotionEnvelope radar_envelope(const Matrix& dtm, double frame_rate)
{
    MotionEnvelope env;
    env.rate = frame_rate;
    env.values.resize(dtm.rows());
    for (std::size_t t = 0; t < dtm.rows(); ++t) {
        const auto row = dtm.row(t);
        env.values[t] = std::accumulate(row.begin(), row.end(), 0.0);
    }
    return env;
}

MotionEnvelope video_envelope(const FlowMagnitudeSequence& flows)
{
    if (flows.frames.empty()) throw Error(ErrorCode::DegenerateSignal, "flow sequence has no frames");
    MotionEnvelope env;
    env.rate = flows.rate;
    env.values.reserve(flows.frames.size());
    for (const Matrix& f : flows.frames) {
        const double pixels = static_cast<double>(f.data().size());
        env.values.push_back(pixels > 0 ? std::accumulate(f.data().begin(), f.data().end(), 0.0) / pixels : 0.0);
    }
    return env;
}

FlowMagnitudeSequence frame_difference_flow(const std::vector<Matrix>& intensity, double rate)
{
    FlowMagnitudeSequence seq;
    seq.rate = rate;
    for (std::size_t t = 0; t < intensity.size(); ++t) {
        Matrix m(intensity[t].rows(), intensity[t].cols());
        if (t > 0) {
            if (intensity[t].rows() != intensity[t - 1].rows() || intensity[t].cols() != intensity[t - 1].cols())
                throw Error(ErrorCode::FormatError, "video frames differ in size");
            for (std::size_t k = 0; k < m.data().size(); ++k)
                m.data()[k] = std::abs(intensity[t].data()[k] - intensity[t - 1].data()[k]);
        }
        seq.frames.push_back(std::move(m));
    }
    return seq;
}

MotionEnvelope resample_linear(const MotionEnvelope& env, double target_rate)
{
    if (!(target_rate > 0.0) || !(env.rate > 0.0))
        throw Error(ErrorCode::ConfigError, "sampling rates must be positive");
    MotionEnvelope out;
    out.rate = target_rate;
    if (env.values.empty()) return out;
    const std::size_t n = env.values.size();
    const double span = static_cast<double>(n - 1) * target_rate / env.rate;
    const std::size_t count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    out.values.resize(count);
    for (std::size_t m = 0; m < count; ++m) {
        const double pos = static_cast<double>(m) * env.rate / target_rate;
        const std::size_t i0 = std::min(static_cast<std::size_t>(std::floor(pos)), n - 1);
        const std::size_t i1 = std::min(i0 + 1, n - 1);
        const double frac = pos - static_cast<double>(i0);
        out.values[m] = env.values[i0] + (env.values[i1] - env.values[i0]) * frac;
    }
    return out;
}

MotionEnvelope zscore(const MotionEnvelope& env)
{
    MotionEnvelope out = env;
    out.normalized = true;
    const std::size_t n = env.values.size();
    if (n == 0) return out;
    const double mean = std::accumulate(env.values.begin(), env.values.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : env.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    // Constant input, including round-off residue around a constant.
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
        std::fill(out.values.begin(), out.values.end(), 0.0);
        return out;
    }
    for (double& v : out.values) v = (v - mean) / sd;
    return out;
}

MotionEnvelope resample_and_normalize(const MotionEnvelope& env, double target_rate)
{
    return zscore(resample_linear(env, target_rate));
}

SyncResult estimate_offset(const MotionEnvelope& video, const MotionEnvelope& radar, std::size_t max_lag)
{
    const auto all_zero = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    };
    if (all_zero(video.values) || all_zero(radar.values))
        throw Error(ErrorCode::DegenerateSignal, "normalized envelope is all zeros");
    const std::size_t t_len = radar.values.size();
    if (max_lag >= std::max(t_len, video.values.size()))
        throw Error(ErrorCode::ConfigError, "max_lag must be shorter than the envelopes");

    const long nv = static_cast<long>(video.values.size());
    const long lag_max = static_cast<long>(max_lag);
    long best_lag = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (long lag = -lag_max; lag <= lag_max; ++lag) {
        double c = 0.0;
        for (long t = 0; t < static_cast<long>(t_len); ++t) {
            const long tv = t + lag;
            if (tv < 0 || tv >= nv) continue;
            c += video.values[static_cast<std::size_t>(tv)] * radar.values[static_cast<std::size_t>(t)];
        }
        const bool better = c > best ||
                            (c == best && (std::labs(lag) < std::labs(best_lag) ||
                                           (std::labs(lag) == std::labs(best_lag) && lag < best_lag)));
        if (better) {
            best = c;
            best_lag = lag;
        }
    }
    double ev = 0.0, er = 0.0;
    for (double v : video.values) ev += v * v;
    for (double v : radar.values) er += v * v;

    SyncResult r;
    r.lag = static_cast<int>(best_lag);
    r.offset_s = static_cast<double>(best_lag) / radar.rate;
    r.peak_correlation = std::clamp(best / std::sqrt(ev * er), -1.0, 1.0);
    return r;
}

Matrix suppress_static(const Matrix& dtm, std::size_t guard_bins)
{
    const std::size_t nd = dtm.cols();
    if (2 * guard_bins >= nd) throw Error(ErrorCode::ConfigError, "guard_bins must be < N_D / 2");
    Matrix out = dtm;
    const std::size_t zero = nd / 2;
    for (std::size_t t = 0; t < out.rows(); ++t)
        for (std::size_t i = zero - guard_bins; i <= zero + guard_bins; ++i) out(t, i) = 0.0;
    return out;
}

namespace {

std::vector<double> moving_average(const std::vector<double>& x, std::size_t window)
{
    const std::size_t n = x.size();
    std::vector<double> out(n);
    const std::size_t w = std::max<std::size_t>(window, 1);
    const std::size_t before = (w - 1) / 2, after = w / 2;
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t lo = t >= before ? t - before : 0;
        const std::size_t hi = std::min(n - 1, t + after);
        double s = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) s += x[k];
        out[t] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

std::vector<SegmentBounds> runs_of(const std::vector<bool>& mask)
{
    std::vector<SegmentBounds> runs;
    for (std::size_t t = 0; t < mask.size();) {
        if (!mask[t]) {
            ++t;
            continue;
        }
        std::size_t e = t;
        while (e < mask.size() && mask[e]) ++e;
        runs.push_back({t, e});
        t = e;
    }
    return runs;
}

}  // namespace

std::vector<bool> activity_mask(const MotionEnvelope& env, const SegmenterConfig& cfg)
{
    const std::vector<double> smooth = moving_average(env.values, cfg.window);
    std::vector<bool> mask(smooth.size(), false);
    if (smooth.empty()) return mask;
    const double n = static_cast<double>(smooth.size());
    const double mean = std::accumulate(smooth.begin(), smooth.end(), 0.0) / n;
    double var = 0.0;
    for (double v : smooth) var += (v - mean) * (v - mean);
    const double threshold = mean + cfg.k * std::sqrt(var / n);
    for (std::size_t t = 0; t < smooth.size(); ++t) mask[t] = smooth[t] > threshold;
    return mask;
}

std::vector<SegmentBounds> detect_segments(const MotionEnvelope& env, const SegmenterConfig& cfg)
{
    const std::size_t total = env.values.size();
    std::vector<SegmentBounds> runs = runs_of(activity_mask(env, cfg));

    std::vector<SegmentBounds> merged;
    for (const SegmentBounds& r : runs) {
        if (!merged.empty() && r.start - merged.back().end < cfg.gap)
            merged.back().end = r.end;
        else
            merged.push_back(r);
    }

    std::vector<SegmentBounds> padded;
    for (SegmentBounds r : merged) {
        r.start = r.start >= cfg.pad ? r.start - cfg.pad : 0;
        r.end = std::min(total, r.end + cfg.pad);
        if (!padded.empty() && r.start < padded.back().end)
            padded.back().end = std::max(padded.back().end, r.end);
        else
            padded.push_back(r);
    }

    std::vector<SegmentBounds> out;
    for (const SegmentBounds& r : padded)
        if (r.length() >= cfg.min_length) out.push_back(r);
    return out;
}

std::vector<std::pair<Matrix, Matrix>> apply_segments(const Matrix& dtm, const Matrix& rtm,
                                                      const std::vector<SegmentBounds>& bounds)
{
    std::vector<std::pair<Matrix, Matrix>> out;
    for (const SegmentBounds& b : bounds) {
        if (b.start >= b.end || b.end > dtm.rows() || b.end > rtm.rows())
            throw Error(ErrorCode::OutOfRange, "segment [" + std::to_string(b.start) + ", " + std::to_string(b.end) +
                                                   ") exceeds " + std::to_string(dtm.rows()) + " frames");
        out.emplace_back(dtm.slice_rows(b.start, b.end), rtm.slice_rows(b.start, b.end));
    }
    return out;
}

}  // namespace ragent
