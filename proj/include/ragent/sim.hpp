#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "ragent/oracle.hpp"
#include "ragent/radar_dsp.hpp"

namespace ragent::sim {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Sinusoidal radial velocity a*sin(2*pi*f*(t - on) + phase), active on [on_s, off_s).
struct LimbOscillator {
    double amplitude_mps = 0.0;
    double cadence_hz = 1.0;
    double phase_rad = 0.0;
    double reflectivity = 0.5;
    double on_s = 0.0;
    double off_s = std::numeric_limits<double>::infinity();
};

/// Bulk body motion: constant velocity plus an optional one-period sine velocity burst.
struct TorsoTrajectory {
    double initial_range_m = 3.0;
    double velocity_mps = 0.0;
    double burst_start_s = 0.0;
    double burst_duration_s = 0.0;
    double burst_peak_mps = 0.0;

    double range_at(double t) const;
    double peak_speed() const;
};

struct ActivitySpec {
    std::string label;
    double duration_s = 2.0;
    TorsoTrajectory torso;
    double torso_reflectivity = 1.0;
    std::vector<LimbOscillator> limbs;
    double noise = 0.02;  ///< complex noise std relative to unit reflectivity
};

/// Default short-range 77 GHz profile: lambda 3.9 mm, 20 Hz frames, 64 chirps of 256 samples.
struct RadarParams {
    double frame_rate = 20.0;
    double wavelength = 3.9e-3;
    double chirp_slope = 1.5e13;
    double sample_rate = 5.0e6;
    double chirp_interval = 250e-6;
    std::size_t chirps = 64;
    std::size_t samples = 256;

    double range_resolution() const { return kSpeedOfLight * sample_rate / (2.0 * chirp_slope * static_cast<double>(samples)); }
    double max_range() const { return range_resolution() * static_cast<double>(samples); }
    double max_velocity() const { return wavelength / (4.0 * chirp_interval); }
    RadarMeta meta() const;
};

/// Stop-and-hop point-scatterer FMCW model. Throws SpecError on invariant violations.
RadarCube synthesize_cube(const ActivitySpec& spec, const RadarParams& radar, std::uint64_t seed);

/// Randomized spec of one class (Walking, Running, Jumping, Waving, Squatting and Rising).
ActivitySpec make_activity(const std::string& label, std::mt19937_64& rng, const RadarParams& radar = {});

std::uint64_t splitmix64(std::uint64_t x);

struct CorpusSpec {
    std::vector<std::string> classes = {"Walking", "Waving", "Jumping", "Squatting and Rising"};
    std::size_t kb_per_class = 10;
    std::size_t dev_per_class = 0;
    std::size_t test_per_class = 10;
    std::uint64_t seed = 1;
    double vote_error_rate = 0.0;
    int n_max = 5;
    std::string observer = "agree";  ///< agree | timeout | none
    double noise = 0.02;
    RadarParams radar;
};

void to_json(nlohmann::json& j, const CorpusSpec& s);
void from_json(const nlohmann::json& j, CorpusSpec& s);

struct SimSample {
    std::string segment_id;
    std::string label;
    std::string split;  ///< kb | dev | test
    ActivitySpec spec;
    RadarCube cube;
    std::vector<std::string> scripted_votes;  ///< Channel A labels in query order (kb split)
};

struct SimCorpus {
    std::vector<SimSample> samples;
    std::vector<ScriptRecord> transcript;
};

/// Cubes, labels and a scripted oracle transcript. Channel A votes are wrong with probability
/// vote_error_rate, in which case they name another class with that class's evidence profile.
SimCorpus synthesize_corpus(const CorpusSpec& spec);

/// cubes/<id>.rgc (+ .meta), manifest.jsonl, kb/dev/test.jsonl and transcript.jsonl.
void write_corpus(const SimCorpus& corpus, const std::filesystem::path& dir);

}  // namespace ragent::sim
