#include "ragent/radar_dsp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fft.hpp"
#include "ragent/error.hpp"

namespace ragent {

double RadarMeta::chirp_period(std::size_t samples_per_chirp) const
{
    if (chirp_interval > 0.0) return chirp_interval;
    return static_cast<double>(samples_per_chirp) / sample_rate;
}

RadarCube::RadarCube(std::size_t frames, std::size_t chirps, std::size_t samples, RadarMeta meta)
    : nf_(frames), ni_(chirps), ns_(samples), data_(frames * chirps * samples), meta_(meta)
{}

void RadarCube::validate() const
{
    if (nf_ < 1 || ni_ < 1 || ns_ < 1) throw Error(ErrorCode::SpecError, "cube dimensions must be >= 1");
    if (data_.size() != nf_ * ni_ * ns_) throw Error(ErrorCode::SpecError, "cube payload size mismatch");
    if (!(meta_.frame_rate > 0.0)) throw Error(ErrorCode::SpecError, "frame_rate must be > 0");
    if (!(meta_.wavelength > 0.0)) throw Error(ErrorCode::SpecError, "wavelength must be > 0");
    for (const cplx& s : data_)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw Error(ErrorCode::SpecError, "cube contains non-finite samples");
}

double RadarCube::energy() const
{
    double e = 0.0;
    for (const cplx& s : data_) e += std::norm(s);
    return e;
}

RadarCube remove_clutter(const RadarCube& cube)
{
    RadarCube out = cube;
    const std::size_t nf = cube.frames(), ni = cube.chirps(), ns = cube.samples();
    std::vector<cplx> mean(ns);
    for (std::size_t n = 0; n < nf; ++n) {
        std::fill(mean.begin(), mean.end(), cplx{});
        for (std::size_t i = 0; i < ni; ++i)
            for (std::size_t k = 0; k < ns; ++k) mean[k] += cube.at(n, i, k);
        for (cplx& m : mean) m /= static_cast<double>(ni);
        for (std::size_t i = 0; i < ni; ++i)
            for (std::size_t k = 0; k < ns; ++k) out.at(n, i, k) = cube.at(n, i, k) - mean[k];
    }
    return out;
}

namespace {

std::size_t lower_median(std::vector<std::size_t> values)
{
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

}  // namespace

GatedRangeProfiles range_gate(const RadarCube& cube, std::size_t roi_width, const DspConfig& cfg)
{
    const std::size_t nf = cube.frames(), ni = cube.chirps(), ns = cube.samples();
    const std::size_t nr = cfg.range_fft_size ? cfg.range_fft_size : ns;
    if (nr < ns) throw Error(ErrorCode::ConfigError, "range FFT size smaller than samples per chirp");
    if (roi_width == 0 || roi_width % 2 == 0 || roi_width > nr)
        throw Error(ErrorCode::ConfigError, "ROI width must be odd and within [1, " + std::to_string(nr) + "]");

    GatedRangeProfiles g;
    g.frames = nf;
    g.chirps = ni;
    g.range_bins = nr;
    g.roi_width = roi_width;
    g.data.assign(nf * ni * nr, cplx{});

    const std::vector<double> window = cfg.hann_window ? detail::hann(ns) : std::vector<double>(ns, 1.0);
    std::vector<cplx> chirp(ns);
    std::vector<std::size_t> peaks;
    peaks.reserve(nf * ni);

    for (std::size_t n = 0; n < nf; ++n) {
        for (std::size_t i = 0; i < ni; ++i) {
            bool nonzero = false;
            for (std::size_t k = 0; k < ns; ++k) {
                const cplx s = cube.at(n, i, k);
                nonzero = nonzero || s != cplx{};
                chirp[k] = s * window[k];
            }
            std::span<cplx> spectrum(g.data.data() + (n * ni + i) * nr, nr);
            detail::fft_forward(chirp, spectrum);
            if (!nonzero) continue;
            std::size_t best = 0;
            double best_mag = -1.0;
            for (std::size_t j = 0; j < nr; ++j) {
                const double m = std::abs(spectrum[j]);
                if (m > best_mag) {
                    best_mag = m;
                    best = j;
                }
            }
            if (best_mag > 0.0) peaks.push_back(best);
        }
    }
    if (peaks.empty()) throw Error(ErrorCode::AllZeroInput, "every range profile is zero");

    g.center_bin = lower_median(std::move(peaks));
    const std::size_t half = roi_width / 2;
    std::size_t start = g.center_bin >= half ? g.center_bin - half : 0;
    start = std::min(start, nr - roi_width);
    g.roi_start = start;

    for (std::size_t c = 0; c < nf * ni; ++c) {
        cplx* p = g.data.data() + c * nr;
        for (std::size_t j = 0; j < nr; ++j)
            if (j < start || j >= start + roi_width) p[j] = cplx{};
    }
    return g;
}

RangeDopplerSequence compute_rdm(const GatedRangeProfiles& profiles, const DspConfig& cfg)
{
    const std::size_t ni = profiles.chirps;
    if (ni < 2) throw Error(ErrorCode::SpecError, "Doppler processing needs at least 2 chirps per frame");
    const std::size_t nd = cfg.doppler_fft_size ? cfg.doppler_fft_size : ni;
    if (nd < ni) throw Error(ErrorCode::ConfigError, "Doppler FFT size smaller than chirps per frame");

    RangeDopplerSequence rdm;
    rdm.frames = profiles.frames;
    rdm.doppler_bins = nd;
    rdm.range_bins = profiles.roi_width;
    rdm.center_bin = profiles.center_bin;
    rdm.roi_start = profiles.roi_start;
    rdm.magnitudes.assign(rdm.frames * nd * rdm.range_bins, 0.0);

    const std::vector<double> window = cfg.hann_window ? detail::hann(ni) : std::vector<double>(ni, 1.0);
    std::vector<cplx> slow(ni), spectrum(nd);
    const std::size_t shift = nd - nd / 2;
    for (std::size_t n = 0; n < profiles.frames; ++n) {
        for (std::size_t j = 0; j < rdm.range_bins; ++j) {
            const std::size_t bin = profiles.roi_start + j;
            for (std::size_t i = 0; i < ni; ++i) slow[i] = profiles.at(n, i, bin) * window[i];
            detail::fft_forward(slow, spectrum);
            for (std::size_t i = 0; i < nd; ++i) rdm.at(n, i, j) = std::abs(spectrum[(i + shift) % nd]);
        }
    }
    return rdm;
}

Matrix compute_dtm(const RangeDopplerSequence& rdm)
{
    Matrix d(rdm.frames, rdm.doppler_bins);
    const double inv = 1.0 / static_cast<double>(rdm.range_bins);
    for (std::size_t n = 0; n < rdm.frames; ++n)
        for (std::size_t i = 0; i < rdm.doppler_bins; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < rdm.range_bins; ++j) s += std::abs(rdm.at(n, i, j));
            d(n, i) = s * inv;
        }
    return d;
}

Matrix compute_rtm(const RangeDopplerSequence& rdm)
{
    Matrix r(rdm.frames, rdm.range_bins);
    const double inv = 1.0 / static_cast<double>(rdm.doppler_bins);
    for (std::size_t n = 0; n < rdm.frames; ++n)
        for (std::size_t j = 0; j < rdm.range_bins; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < rdm.doppler_bins; ++i) s += std::abs(rdm.at(n, i, j));
            r(n, j) = s * inv;
        }
    return r;
}

RadarMaps process_cube(const RadarCube& cube, const DspConfig& cfg)
{
    cube.validate();
    const RangeDopplerSequence rdm = compute_rdm(range_gate(remove_clutter(cube), cfg.roi_width, cfg), cfg);
    return {compute_dtm(rdm), compute_rtm(rdm), rdm.center_bin, rdm.roi_start};
}

}  // namespace ragent
