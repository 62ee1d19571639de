#include "ragent/features.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "fft.hpp"
#include "ragent/error.hpp"

namespace ragent {

const std::array<std::string_view, kFeatureDim>& feature_names()
{
    static constexpr std::array<std::string_view, kFeatureDim> names = {
        "energy_mean",          "energy_std",           "duration_s",
        "cadence_freq_hz",      "cadence_strength",     "doppler_bw_max",
        "doppler_bw_std",       "torso_limb_ratio",     "signed_energy_balance",
        "spectral_spread_mean", "doppler_symmetry",     "glcm_contrast",
        "glcm_energy",          "glcm_homogeneity",     "spectral_entropy",
        "doppler_kurtosis",     "svd_energy_top1",      "svd_energy_top3",
        "total_displacement_m", "trajectory_linearity_r2", "mean_velocity_mps",
        "mean_acceleration_mps2", "range_drift_std_m",  "burstiness_index",
        "peak_to_mean_ratio",
    };
    return names;
}

std::optional<std::size_t> feature_index(std::string_view name)
{
    const auto& names = feature_names();
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name) return k;
    return std::nullopt;
}

namespace {

double mean_of(std::span<const double> v)
{
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pop_std(std::span<const double> v)
{
    if (v.empty()) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

struct Cadence {
    double freq = 0.0;
    double strength = 0.0;
};

Cadence cadence_of(const std::vector<double>& envelope, double frame_rate, const FeatureConfig& cfg)
{
    const std::size_t n = envelope.size();
    const double m = mean_of(envelope);
    std::vector<std::complex<double>> x(n), spectrum(n);
    double scale = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        x[t] = envelope[t] - m;
        scale += envelope[t] * envelope[t];
    }
    detail::fft_forward(x, spectrum);

    Cadence c;
    double band_power = 0.0, peak_power = -1.0;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double f = static_cast<double>(k) * frame_rate / static_cast<double>(n);
        if (f < cfg.cadence_low_hz || f > cfg.cadence_high_hz) continue;
        const double p = std::norm(spectrum[k]);
        band_power += p;
        if (p > peak_power) {
            peak_power = p;
            c.freq = f;
        }
    }
    // Round-off residue of a constant envelope is not a cadence.
    if (band_power <= 1e-20 * static_cast<double>(n) * scale || band_power <= 0.0) return {};
    c.strength = peak_power / band_power;
    return c;
}

struct Glcm {
    double contrast = 0.0;
    double energy = 0.0;
    double homogeneity = 0.0;
};

// Offset (1, 0): each cell against the same Doppler bin in the next frame, counted symmetrically.
Glcm glcm_of(const Matrix& dtm, std::size_t levels)
{
    const auto [mn_it, mx_it] = std::minmax_element(dtm.data().begin(), dtm.data().end());
    const double mn = *mn_it, range = *mx_it - *mn_it;
    auto level = [&](double v) -> std::size_t {
        if (!(range > 0.0)) return 0;
        const double q = std::floor(static_cast<double>(levels) * (v - mn) / range);
        return static_cast<std::size_t>(std::clamp(q, 0.0, static_cast<double>(levels - 1)));
    };
    std::vector<double> counts(levels * levels, 0.0);
    double total = 0.0;
    for (std::size_t n = 0; n + 1 < dtm.rows(); ++n)
        for (std::size_t i = 0; i < dtm.cols(); ++i) {
            const std::size_t a = level(dtm(n, i)), b = level(dtm(n + 1, i));
            counts[a * levels + b] += 1.0;
            counts[b * levels + a] += 1.0;
            total += 2.0;
        }
    Glcm g;
    if (total == 0.0) return g;
    for (std::size_t a = 0; a < levels; ++a)
        for (std::size_t b = 0; b < levels; ++b) {
            const double p = counts[a * levels + b] / total;
            if (p == 0.0) continue;
            const double d = static_cast<double>(a) - static_cast<double>(b);
            g.contrast += p * d * d;
            g.energy += p * p;
            g.homogeneity += p / (1.0 + std::abs(d));
        }
    return g;
}

}  // namespace

RangeTrack range_centroid_track(const Matrix& rtm)
{
    RangeTrack track;
    for (std::size_t n = 0; n < rtm.rows(); ++n) {
        double w = 0.0, wj = 0.0;
        for (std::size_t j = 0; j < rtm.cols(); ++j) {
            w += rtm(n, j);
            wj += rtm(n, j) * static_cast<double>(j);
        }
        if (w > 0.0) {
            track.frame.push_back(static_cast<double>(n));
            track.centroid.push_back(wj / w);
        }
    }
    return track;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    LineFit fit;
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return fit;
    const double mx = mean_of(x.first(n)), my = mean_of(y.first(n));
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (sxx <= 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = y[k] - (fit.intercept + fit.slope * x[k]);
        sse += e * e;
    }
    // A flat track has no trajectory to explain.
    if (syy > 1e-18 * std::max(1.0, my * my)) fit.r2 = std::clamp(1.0 - sse / syy, 0.0, 1.0);
    return fit;
}

PhysicsFeatureVector extract_features(const Matrix& dtm, const Matrix& rtm, const FeatureMeta& meta,
                                      const FeatureConfig& cfg)
{
    const std::size_t frames = dtm.rows();
    if (frames < 2 || rtm.rows() != frames)
        throw Error(ErrorCode::DegenerateSegment, "segment needs >= 2 frames with matching DTM/RTM rows");
    const std::size_t nd = dtm.cols();
    const std::size_t zero = nd / 2;
    PhysicsFeatureVector x;

    // Kinematic / temporal.
    std::vector<double> envelope(frames);
    for (std::size_t n = 0; n < frames; ++n) {
        const auto row = dtm.row(n);
        envelope[n] = std::accumulate(row.begin(), row.end(), 0.0);
    }
    const double e_mean = mean_of(envelope), e_std = pop_std(envelope);
    x[Feature::energy_mean] = e_mean;
    x[Feature::energy_std] = e_std;
    x[Feature::duration_s] = static_cast<double>(frames) / meta.frame_rate;
    const Cadence cad = cadence_of(envelope, meta.frame_rate, cfg);
    x[Feature::cadence_freq_hz] = cad.freq;
    x[Feature::cadence_strength] = cad.strength;

    // Morphological.
    const double tail = (1.0 - cfg.bandwidth_energy) / 2.0;
    std::vector<double> bw(frames, 0.0);
    double spread_weighted = 0.0, entropy_weighted = 0.0, energy_total = 0.0;
    for (std::size_t n = 0; n < frames; ++n) {
        const auto row = dtm.row(n);
        const double total = envelope[n];
        if (!(total > 0.0)) continue;
        double cum = 0.0;
        std::size_t lo = nd, hi = nd;
        for (std::size_t i = 0; i < nd; ++i) {
            cum += row[i];
            if (lo == nd && cum >= tail * total) lo = i;
            if (hi == nd && cum >= (1.0 - tail) * total) hi = i;
        }
        if (hi == nd) hi = nd - 1;
        bw[n] = static_cast<double>(hi - lo + 1);

        double centroid = 0.0;
        for (std::size_t i = 0; i < nd; ++i) centroid += row[i] * static_cast<double>(i);
        centroid /= total;
        double var = 0.0, entropy = 0.0;
        for (std::size_t i = 0; i < nd; ++i) {
            const double d = static_cast<double>(i) - centroid;
            var += row[i] * d * d;
            const double p = row[i] / total;
            if (p > 0.0) entropy -= p * std::log(p);
        }
        spread_weighted += std::sqrt(var / total) * total;
        entropy_weighted += entropy * total;
        energy_total += total;
    }
    x[Feature::doppler_bw_max] = *std::max_element(bw.begin(), bw.end());
    x[Feature::doppler_bw_std] = pop_std(bw);
    x[Feature::spectral_spread_mean] = energy_total > 0.0 ? spread_weighted / energy_total : 0.0;
    x[Feature::spectral_entropy] = energy_total > 0.0 ? entropy_weighted / energy_total : 0.0;

    std::vector<double> profile(nd, 0.0);
    for (std::size_t n = 0; n < frames; ++n)
        for (std::size_t i = 0; i < nd; ++i) profile[i] += dtm(n, i);
    const double grand = std::accumulate(profile.begin(), profile.end(), 0.0);

    const std::size_t torso_bins =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(cfg.torso_band_fraction * static_cast<double>(nd))), 1, nd);
    const std::size_t torso_lo = zero - std::min(zero, torso_bins / 2);
    double torso = 0.0;
    for (std::size_t i = torso_lo; i < std::min(nd, torso_lo + torso_bins); ++i) torso += profile[i];
    x[Feature::torso_limb_ratio] = grand > 0.0 ? torso / ((grand - torso) + 1e-12 * grand) : 0.0;

    double pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < nd; ++i) {
        if (i > zero) pos += profile[i];
        if (i < zero) neg += profile[i];
    }
    x[Feature::signed_energy_balance] = pos + neg > 0.0 ? (pos - neg) / (pos + neg) : 0.0;

    double sym_min = 0.0, sym_max = 0.0;
    for (std::size_t k = 1; k <= zero && zero + k < nd; ++k) {
        sym_min += std::min(profile[zero + k], profile[zero - k]);
        sym_max += std::max(profile[zero + k], profile[zero - k]);
    }
    x[Feature::doppler_symmetry] = sym_max > 0.0 ? sym_min / sym_max : 0.0;

    // Texture and higher-order statistics.
    const Glcm g = glcm_of(dtm, cfg.glcm_levels);
    x[Feature::glcm_contrast] = g.contrast;
    x[Feature::glcm_energy] = g.energy;
    x[Feature::glcm_homogeneity] = g.homogeneity;

    if (grand > 0.0) {
        double mu = 0.0;
        for (std::size_t i = 0; i < nd; ++i) mu += profile[i] / grand * static_cast<double>(i);
        double m2 = 0.0, m4 = 0.0;
        for (std::size_t i = 0; i < nd; ++i) {
            const double p = profile[i] / grand, d = static_cast<double>(i) - mu;
            m2 += p * d * d;
            m4 += p * d * d * d * d;
        }
        x[Feature::doppler_kurtosis] = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
    }

    Eigen::MatrixXd a(frames, nd);
    for (std::size_t n = 0; n < frames; ++n)
        for (std::size_t i = 0; i < nd; ++i) a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = dtm(n, i);
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
    const double sv_total = sv.squaredNorm();
    if (sv_total > 0.0) {
        x[Feature::svd_energy_top1] = sv(0) * sv(0) / sv_total;
        x[Feature::svd_energy_top3] = sv.head(std::min<Eigen::Index>(3, sv.size())).squaredNorm() / sv_total;
    }

    // Range trajectory.
    const RangeTrack track = range_centroid_track(rtm);
    if (track.frame.size() >= 2) {
        const LineFit fit = fit_line(track.frame, track.centroid);
        const double res = meta.range_resolution;
        x[Feature::total_displacement_m] = fit.slope * static_cast<double>(frames - 1) * res;
        x[Feature::trajectory_linearity_r2] = fit.r2;

        std::vector<double> vel, mid;
        for (std::size_t k = 0; k + 1 < track.frame.size(); ++k) {
            const double dt = (track.frame[k + 1] - track.frame[k]) / meta.frame_rate;
            vel.push_back((track.centroid[k + 1] - track.centroid[k]) * res / dt);
            mid.push_back(0.5 * (track.frame[k + 1] + track.frame[k]) / meta.frame_rate);
        }
        double speed = 0.0;
        for (double v : vel) speed += std::abs(v);
        x[Feature::mean_velocity_mps] = speed / static_cast<double>(vel.size());
        if (vel.size() >= 2) {
            double acc = 0.0;
            for (std::size_t k = 0; k + 1 < vel.size(); ++k) acc += std::abs(vel[k + 1] - vel[k]) / (mid[k + 1] - mid[k]);
            x[Feature::mean_acceleration_mps2] = acc / static_cast<double>(vel.size() - 1);
        }
        x[Feature::range_drift_std_m] = pop_std(track.centroid) * res;
    }

    // Cross-map burst statistics.
    x[Feature::burstiness_index] = e_std + e_mean > 0.0 ? (e_std - e_mean) / (e_std + e_mean) : 0.0;
    x[Feature::peak_to_mean_ratio] = e_mean > 0.0 ? *std::max_element(envelope.begin(), envelope.end()) / e_mean : 0.0;
    return x;
}

FeatureStandardizer::FeatureStandardizer(FeatureArray mean, FeatureArray stddev) : mean_(mean), std_(stddev) {}

FeatureArray FeatureStandardizer::standardize(const FeatureArray& x) const
{
    FeatureArray z{};
    for (std::size_t j = 0; j < kFeatureDim; ++j) z[j] = (x[j] - mean_[j]) / std_[j];
    return z;
}

FeatureStandardizer fit_standardizer(std::span<const PhysicsFeatureVector> entries)
{
    if (entries.size() < 2) throw Error(ErrorCode::InsufficientData, "standardizer needs at least 2 entries");
    const double n = static_cast<double>(entries.size());
    FeatureArray mean{}, sd{};
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
        double m = 0.0;
        for (const auto& e : entries) m += e.values[j];
        m /= n;
        double v = 0.0;
        for (const auto& e : entries) v += (e.values[j] - m) * (e.values[j] - m);
        const double s = std::sqrt(v / n);
        mean[j] = m;
        sd[j] = s < 1e-12 ? 1.0 : s;
    }
    return FeatureStandardizer(mean, sd);
}

FeatureArray standardize(const PhysicsFeatureVector& x, const FeatureStandardizer& s) { return s.standardize(x.values); }

}  // namespace ragent
