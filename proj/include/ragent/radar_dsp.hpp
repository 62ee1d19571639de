#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "ragent/matrix.hpp"

namespace ragent {

using cplx = std::complex<double>;

/// RF metadata carried next to every cube.
struct RadarMeta {
    double frame_rate = 20.0;         ///< Hz
    double wavelength = 3.9e-3;       ///< m
    double chirp_slope = 1.5e13;      ///< Hz/s
    double sample_rate = 5.0e6;       ///< Hz
    double range_resolution = 0.195;  ///< m per range bin
    /// Chirp repetition interval in seconds. Zero means "ADC time only" (N_S / sample_rate).
    double chirp_interval = 0.0;

    double chirp_period(std::size_t samples_per_chirp) const;
};

/// Complex baseband samples, frames x chirps x samples, row-major frame -> chirp -> sample.
class RadarCube {
public:
    RadarCube() = default;
    RadarCube(std::size_t frames, std::size_t chirps, std::size_t samples, RadarMeta meta = {});

    std::size_t frames() const noexcept { return nf_; }
    std::size_t chirps() const noexcept { return ni_; }
    std::size_t samples() const noexcept { return ns_; }

    cplx& at(std::size_t n, std::size_t i, std::size_t k) { return data_[(n * ni_ + i) * ns_ + k]; }
    cplx at(std::size_t n, std::size_t i, std::size_t k) const { return data_[(n * ni_ + i) * ns_ + k]; }

    std::vector<cplx>& data() noexcept { return data_; }
    const std::vector<cplx>& data() const noexcept { return data_; }

    RadarMeta& meta() noexcept { return meta_; }
    const RadarMeta& meta() const noexcept { return meta_; }

    /// Throws SpecError when dimensions, metadata or samples violate the cube invariants.
    void validate() const;

    double energy() const;

private:
    std::size_t nf_ = 0, ni_ = 0, ns_ = 0;
    std::vector<cplx> data_;
    RadarMeta meta_;
};

struct DspConfig {
    std::size_t roi_width = 11;      ///< L, odd
    bool hann_window = true;         ///< applied before both FFTs
    std::size_t range_fft_size = 0;  ///< 0 -> N_S
    std::size_t doppler_fft_size = 0;///< 0 -> N_I
};

/// Range spectra of every chirp with everything outside the ROI window zeroed.
struct GatedRangeProfiles {
    std::size_t frames = 0;
    std::size_t chirps = 0;
    std::size_t range_bins = 0;  ///< total range FFT length
    std::size_t center_bin = 0;  ///< p_c
    std::size_t roi_start = 0;
    std::size_t roi_width = 0;
    std::vector<cplx> data;      ///< frames x chirps x range_bins

    cplx at(std::size_t n, std::size_t i, std::size_t j) const { return data[(n * chirps + i) * range_bins + j]; }
};

/// |M(n, i, j)| over the retained ROI bins, Doppler axis fftshifted (bin N_D/2 is zero velocity).
struct RangeDopplerSequence {
    std::size_t frames = 0;
    std::size_t doppler_bins = 0;
    std::size_t range_bins = 0;  ///< N_R, equals the ROI width
    std::size_t center_bin = 0;
    std::size_t roi_start = 0;
    std::vector<double> magnitudes;

    double& at(std::size_t n, std::size_t i, std::size_t j) { return magnitudes[(n * doppler_bins + i) * range_bins + j]; }
    double at(std::size_t n, std::size_t i, std::size_t j) const { return magnitudes[(n * doppler_bins + i) * range_bins + j]; }
};

/// Subtracts, for each frame and fast-time sample, the mean over chirps.
RadarCube remove_clutter(const RadarCube& cube);

/// Range FFT per chirp, subject-centric ROI selection and masking.
GatedRangeProfiles range_gate(const RadarCube& cube, std::size_t roi_width, const DspConfig& cfg = {});

RangeDopplerSequence compute_rdm(const GatedRangeProfiles& profiles, const DspConfig& cfg = {});

Matrix compute_dtm(const RangeDopplerSequence& rdm);
Matrix compute_rtm(const RangeDopplerSequence& rdm);

struct RadarMaps {
    Matrix dtm;
    Matrix rtm;
    std::size_t center_bin = 0;
    std::size_t roi_start = 0;
};

/// Full chain: clutter removal, gating, RDM, DTM and RTM.
RadarMaps process_cube(const RadarCube& cube, const DspConfig& cfg = {});

}  // namespace ragent
