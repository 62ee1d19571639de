#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ragent/matrix.hpp"

namespace ragent {

inline constexpr std::size_t kFeatureDim = 25;
inline constexpr std::string_view kFeatureSchemaVersion = "physics-25/v1";

/// Frozen schema order; it is also the on-disk order.
enum class Feature : std::size_t {
    energy_mean,
    energy_std,
    duration_s,
    cadence_freq_hz,
    cadence_strength,
    doppler_bw_max,
    doppler_bw_std,
    torso_limb_ratio,
    signed_energy_balance,
    spectral_spread_mean,
    doppler_symmetry,
    glcm_contrast,
    glcm_energy,
    glcm_homogeneity,
    spectral_entropy,
    doppler_kurtosis,
    svd_energy_top1,
    svd_energy_top3,
    total_displacement_m,
    trajectory_linearity_r2,
    mean_velocity_mps,
    mean_acceleration_mps2,
    range_drift_std_m,
    burstiness_index,
    peak_to_mean_ratio,
};

const std::array<std::string_view, kFeatureDim>& feature_names();
std::optional<std::size_t> feature_index(std::string_view name);

using FeatureArray = std::array<double, kFeatureDim>;

struct PhysicsFeatureVector {
    FeatureArray values{};

    double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
    double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
    friend bool operator==(const PhysicsFeatureVector&, const PhysicsFeatureVector&) = default;
};

/// Radar facts needed to put features in physical units.
struct FeatureMeta {
    double frame_rate = 20.0;         ///< Hz
    double wavelength = 3.9e-3;       ///< m
    double range_resolution = 0.195;  ///< m / bin
};

struct FeatureConfig {
    double torso_band_fraction = 0.10;  ///< central share of Doppler bins counted as torso
    double bandwidth_energy = 0.90;     ///< energy share inside the Doppler bandwidth interval
    double cadence_low_hz = 0.3;
    double cadence_high_hz = 5.0;
    std::size_t glcm_levels = 16;
};

/// Per-frame energy-weighted range centroid track from an RTM (frames with no energy are absent).
struct RangeTrack {
    std::vector<double> frame;     ///< frame index
    std::vector<double> centroid;  ///< bins
};
RangeTrack range_centroid_track(const Matrix& rtm);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
/// Ordinary least squares; r2 = 0 when the response is constant or fewer than two points exist.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

PhysicsFeatureVector extract_features(const Matrix& dtm, const Matrix& rtm, const FeatureMeta& meta,
                                      const FeatureConfig& cfg = {});

class FeatureStandardizer {
public:
    FeatureStandardizer() = default;
    FeatureStandardizer(FeatureArray mean, FeatureArray stddev);

    const FeatureArray& mean() const noexcept { return mean_; }
    const FeatureArray& stddev() const noexcept { return std_; }

    FeatureArray standardize(const FeatureArray& x) const;

    friend bool operator==(const FeatureStandardizer&, const FeatureStandardizer&) = default;

private:
    FeatureArray mean_{};
    FeatureArray std_{};
};

/// Sample mean and population standard deviation per dimension; sigma < 1e-12 becomes 1.
FeatureStandardizer fit_standardizer(std::span<const PhysicsFeatureVector> entries);

FeatureArray standardize(const PhysicsFeatureVector& x, const FeatureStandardizer& s);

}  // namespace ragent
