#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ragent/matrix.hpp"

namespace ragent {

struct MotionEnvelope {
    std::vector<double> values;
    double rate = 0.0;  ///< Hz
    bool normalized = false;
};

/// Per-frame non-negative motion magnitudes over the pixel domain.
struct FlowMagnitudeSequence {
    std::vector<Matrix> frames;
    double rate = 0.0;
};

struct SyncResult {
    int lag = 0;                 ///< frames on the radar timebase
    double offset_s = 0.0;       ///< lag / frame rate
    double peak_correlation = 0.0;
};

struct SegmentBounds {
    std::size_t start = 0;
    std::size_t end = 0;  ///< exclusive

    std::size_t length() const noexcept { return end - start; }
    friend bool operator==(const SegmentBounds&, const SegmentBounds&) = default;
};

struct SegmenterConfig {
    std::size_t window = 5;        ///< W, moving-average length in frames
    double k = 1.0;                ///< threshold = mean + k * std
    std::size_t gap = 10;          ///< G, gaps shorter than this are merged
    std::size_t pad = 5;           ///< P, frames added on both sides
    std::size_t min_length = 20;   ///< Lmin
};

MotionEnvelope radar_envelope(const Matrix& dtm, double frame_rate);
MotionEnvelope video_envelope(const FlowMagnitudeSequence& flows);

/// |I_t - I_{t-1}| per pixel; the first frame gets zero motion.
FlowMagnitudeSequence frame_difference_flow(const std::vector<Matrix>& intensity, double rate);

/// Linear interpolation onto samples m / target_rate covering the original span.
MotionEnvelope resample_linear(const MotionEnvelope& env, double target_rate);
/// Z-score; a constant signal maps to all zeros.
MotionEnvelope zscore(const MotionEnvelope& env);
MotionEnvelope resample_and_normalize(const MotionEnvelope& env, double target_rate);

/// Cross-correlation C(l) = sum_t v(t + l) r(t) over |l| <= max_lag; argmax prefers smaller |l|, then negative l.
SyncResult estimate_offset(const MotionEnvelope& video, const MotionEnvelope& radar, std::size_t max_lag);

/// Zeroes the 2 * guard_bins + 1 Doppler columns centred on zero Doppler (column N_D / 2).
Matrix suppress_static(const Matrix& dtm, std::size_t guard_bins);

/// Smoothing, adaptive threshold, gap merging, padding and short-run removal, in that order.
std::vector<SegmentBounds> detect_segments(const MotionEnvelope& env, const SegmenterConfig& cfg = {});

/// Frames masked above threshold after smoothing, before merging or padding.
std::vector<bool> activity_mask(const MotionEnvelope& env, const SegmenterConfig& cfg = {});

std::vector<std::pair<Matrix, Matrix>> apply_segments(const Matrix& dtm, const Matrix& rtm,
                                                      const std::vector<SegmentBounds>& bounds);

}  // namespace ragent
