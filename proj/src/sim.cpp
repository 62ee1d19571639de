#include "ragent/sim.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <cstdio>
#include <numbers>

#include "ragent/error.hpp"
#include "ragent/io.hpp"
#include "ragent/semantics.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace ragent::sim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double limb_displacement(const LimbOscillator& l, double t)
{
    if (t <= l.on_s || l.amplitude_mps == 0.0) return 0.0;
    const double u = std::min(t, l.off_s) - l.on_s;
    const double w = kTwoPi * l.cadence_hz;
    return l.amplitude_mps / w * (std::cos(l.phase_rad) - std::cos(w * u + l.phase_rad));
}

double uniform(std::mt19937_64& rng, double a, double b)
{
    return std::uniform_real_distribution<double>(a, b)(rng);
}

std::string slug(const std::string& label)
{
    std::string s = to_lower(label);
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    return s;
}
}  // namespace

double TorsoTrajectory::range_at(double t) const
{
    double r = initial_range_m + velocity_mps * t;
    if (burst_duration_s > 0.0 && t > burst_start_s) {
        const double u = std::min(t - burst_start_s, burst_duration_s);
        r += burst_peak_mps * burst_duration_s / kTwoPi * (1.0 - std::cos(kTwoPi * u / burst_duration_s));
    }
    return r;
}

double TorsoTrajectory::peak_speed() const
{
    return std::abs(velocity_mps) + (burst_duration_s > 0.0 ? std::abs(burst_peak_mps) : 0.0);
}

RadarMeta RadarParams::meta() const
{
    RadarMeta m;
    m.frame_rate = frame_rate;
    m.wavelength = wavelength;
    m.chirp_slope = chirp_slope;
    m.sample_rate = sample_rate;
    m.range_resolution = range_resolution();
    m.chirp_interval = chirp_interval;
    return m;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RadarCube synthesize_cube(const ActivitySpec& spec, const RadarParams& radar, std::uint64_t seed)
{
    if (!(spec.duration_s > 0.0)) throw Error(ErrorCode::SpecError, "duration must be > 0");
    if (!(radar.frame_rate > 0.0) || !(radar.wavelength > 0.0) || !(radar.sample_rate > 0.0) || !(radar.chirp_slope > 0.0) ||
        !(radar.chirp_interval > 0.0) || radar.chirps < 1 || radar.samples < 1)
        throw Error(ErrorCode::SpecError, "radar parameters must be positive");
    if (radar.chirp_interval * static_cast<double>(radar.chirps) > 1.0 / radar.frame_rate)
        throw Error(ErrorCode::SpecError, "chirps of one frame exceed the frame period");
    if (spec.noise < 0.0) throw Error(ErrorCode::SpecError, "noise level must be >= 0");

    double vmax = spec.torso.peak_speed();
    double limb_peak = 0.0;
    for (const auto& l : spec.limbs) {
        if (!(l.cadence_hz > 0.0)) throw Error(ErrorCode::SpecError, "limb cadence must be > 0");
        limb_peak = std::max(limb_peak, std::abs(l.amplitude_mps));
    }
    vmax += limb_peak;
    if (vmax >= radar.max_velocity()) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "speed %.3f m/s exceeds the unambiguous velocity %.3f m/s", vmax, radar.max_velocity());
        throw Error(ErrorCode::SpecError, buf);
    }

    const auto frames = static_cast<std::size_t>(std::max(1.0, std::round(spec.duration_s * radar.frame_rate)));
    RadarCube cube(frames, radar.chirps, radar.samples, radar.meta());
    const double rmax = radar.max_range();
    const double k_beat = 2.0 * radar.chirp_slope / kSpeedOfLight;

    struct Scatterer {
        double amplitude;
        const LimbOscillator* limb;
    };
    std::vector<Scatterer> scatterers;
    if (spec.torso_reflectivity != 0.0) scatterers.push_back({spec.torso_reflectivity, nullptr});
    for (const auto& l : spec.limbs)
        if (l.reflectivity != 0.0) scatterers.push_back({l.reflectivity, &l});

    for (std::size_t n = 0; n < frames; ++n)
        for (std::size_t i = 0; i < radar.chirps; ++i) {
            const double t = static_cast<double>(n) / radar.frame_rate + static_cast<double>(i) * radar.chirp_interval;
            const double torso_r = spec.torso.range_at(t);
            cplx* row = &cube.at(n, i, 0);
            for (const auto& s : scatterers) {
                const double r = torso_r + (s.limb ? limb_displacement(*s.limb, t) : 0.0);
                if (!(r > 0.0) || r >= rmax) throw Error(ErrorCode::SpecError, "scatterer leaves the unambiguous range");
                // phasor recurrence over fast time: exp(j 2 pi (f_b t_k + 2 r / lambda))
                cplx e = std::polar(s.amplitude, kTwoPi * 2.0 * r / radar.wavelength);
                const cplx step = std::polar(1.0, kTwoPi * k_beat * r / radar.sample_rate);
                for (std::size_t k = 0; k < radar.samples; ++k) {
                    row[k] += e;
                    e *= step;
                }
            }
        }

    if (spec.noise > 0.0) {
        std::mt19937_64 rng(splitmix64(seed));
        std::normal_distribution<double> gauss(0.0, spec.noise / std::numbers::sqrt2);
        for (cplx& v : cube.data()) v += cplx(gauss(rng), gauss(rng));
    }
    return cube;
}

ActivitySpec make_activity(const std::string& label, std::mt19937_64& rng, const RadarParams& radar)
{
    (void)radar;
    ActivitySpec s;
    s.label = label;
    const double pi = std::numbers::pi;
    if (label == "Walking" || label == "Running") {
        const bool run = label == "Running";
        s.duration_s = run ? 1.5 : 2.0;
        s.torso.initial_range_m = uniform(rng, 2.5, 3.5);
        s.torso.velocity_mps = (run ? uniform(rng, 1.0, 1.3) : uniform(rng, 0.4, 0.6)) * ((rng() & 1) ? 1.0 : -1.0);
        const double cadence = run ? uniform(rng, 2.6, 3.0) : uniform(rng, 1.6, 2.0);
        const double leg = run ? 1.4 : uniform(rng, 0.7, 0.9);
        s.limbs.push_back({leg, cadence, 0.0, 0.4});
        s.limbs.push_back({leg, cadence, pi, 0.4});
        s.limbs.push_back({leg / 2.0, cadence, pi / 2.0, 0.2});
        s.limbs.push_back({leg / 2.0, cadence, 3.0 * pi / 2.0, 0.2});
    } else if (label == "Waving") {
        s.duration_s = 2.0;
        s.torso.initial_range_m = uniform(rng, 2.5, 3.5);
        const double cadence = uniform(rng, 1.5, 2.5);
        s.limbs.push_back({uniform(rng, 0.8, 1.0), cadence, 0.0, 0.6});
        s.limbs.push_back({0.5, cadence, 0.3, 0.3});
    } else if (label == "Jumping") {
        s.duration_s = uniform(rng, 1.0, 1.3);
        s.torso.initial_range_m = uniform(rng, 2.5, 3.5);
        s.torso.burst_start_s = uniform(rng, 0.2, 0.3);
        s.torso.burst_duration_s = 0.5;
        s.torso.burst_peak_mps = 1.6;
        const double on = s.torso.burst_start_s, off = on + s.torso.burst_duration_s;
        s.limbs.push_back({1.2, 2.0, 0.0, 0.4, on, off});
        s.limbs.push_back({1.2, 2.0, pi, 0.4, on, off});
        // preparatory sway keeps the subject visible to range gating outside the burst
        s.limbs.push_back({0.15, 0.8, 0.0, 0.5});
    } else if (label == "Squatting and Rising") {
        s.duration_s = 2.0;
        s.torso.initial_range_m = uniform(rng, 2.5, 3.5);
        const double cadence = uniform(rng, 0.5, 0.7);
        s.limbs.push_back({uniform(rng, 0.4, 0.6), cadence, 0.0, 1.0});
        s.limbs.push_back({0.3, cadence, pi / 2.0, 0.3});
    } else {
        throw Error(ErrorCode::SpecError, "no simulation model for class '" + label + "'");
    }
    return s;
}

// ---------------------------------------------------------------------------------------------

void to_json(json& j, const CorpusSpec& s)
{
    j = {{"classes", s.classes},
         {"kb_per_class", s.kb_per_class},
         {"dev_per_class", s.dev_per_class},
         {"test_per_class", s.test_per_class},
         {"seed", s.seed},
         {"vote_error_rate", s.vote_error_rate},
         {"n_max", s.n_max},
         {"observer", s.observer},
         {"noise", s.noise},
         {"radar",
          {{"frame_rate", s.radar.frame_rate},
           {"wavelength", s.radar.wavelength},
           {"chirp_slope", s.radar.chirp_slope},
           {"sample_rate", s.radar.sample_rate},
           {"chirp_interval", s.radar.chirp_interval},
           {"chirps", s.radar.chirps},
           {"samples", s.radar.samples}}}};
}

void from_json(const json& j, CorpusSpec& s)
{
    s = CorpusSpec{};
    s.classes = j.value("classes", s.classes);
    s.kb_per_class = j.value("kb_per_class", s.kb_per_class);
    s.dev_per_class = j.value("dev_per_class", s.dev_per_class);
    s.test_per_class = j.value("test_per_class", s.test_per_class);
    s.seed = j.value("seed", s.seed);
    s.vote_error_rate = j.value("vote_error_rate", s.vote_error_rate);
    s.n_max = j.value("n_max", s.n_max);
    s.observer = j.value("observer", s.observer);
    s.noise = j.value("noise", s.noise);
    if (j.contains("radar")) {
        const auto& r = j.at("radar");
        s.radar.frame_rate = r.value("frame_rate", s.radar.frame_rate);
        s.radar.wavelength = r.value("wavelength", s.radar.wavelength);
        s.radar.chirp_slope = r.value("chirp_slope", s.radar.chirp_slope);
        s.radar.sample_rate = r.value("sample_rate", s.radar.sample_rate);
        s.radar.chirp_interval = r.value("chirp_interval", s.radar.chirp_interval);
        s.radar.chirps = r.value("chirps", s.radar.chirps);
        s.radar.samples = r.value("samples", s.radar.samples);
    }
}

SimCorpus synthesize_corpus(const CorpusSpec& spec)
{
    if (spec.classes.empty()) throw Error(ErrorCode::SpecError, "corpus needs at least one class");
    const LabelSet all = LabelSet::defaults();
    for (const auto& c : spec.classes)
        if (!all.contains(c)) throw Error(ErrorCode::SpecError, "class '" + c + "' is not in the label set");
    if (spec.vote_error_rate < 0.0 || spec.vote_error_rate > 1.0) throw Error(ErrorCode::SpecError, "vote_error_rate must be in [0, 1]");
    if (spec.vote_error_rate > 0.0 && spec.classes.size() < 2) throw Error(ErrorCode::SpecError, "vote noise needs two classes");
    if (spec.n_max < 3) throw Error(ErrorCode::SpecError, "n_max must be at least 3");
    if (spec.observer != "agree" && spec.observer != "timeout" && spec.observer != "none")
        throw Error(ErrorCode::SpecError, "observer mode must be agree, timeout or none");

    SimCorpus out;
    const std::pair<const char*, std::size_t> splits[] = {
        {"kb", spec.kb_per_class}, {"dev", spec.dev_per_class}, {"test", spec.test_per_class}};
    std::uint64_t index = 0;
    for (const auto& [split, per_class] : splits)
        for (const auto& label : spec.classes)
            for (std::size_t n = 0; n < per_class; ++n, ++index) {
                const std::uint64_t sample_seed = splitmix64(spec.seed * 0x100000001b3ULL + index);
                std::mt19937_64 rng(sample_seed);
                SimSample s;
                char id[128];
                std::snprintf(id, sizeof id, "%s-%s-%03zu", split, slug(label).c_str(), n);
                s.segment_id = id;
                s.label = label;
                s.split = split;
                s.spec = make_activity(label, rng, spec.radar);
                s.spec.noise = spec.noise;
                s.cube = synthesize_cube(s.spec, spec.radar, sample_seed);

                if (s.split == "kb") {
                    std::mt19937_64 vote_rng(splitmix64(sample_seed ^ 0x5bd1e995ULL));
                    for (int k = 0; k < spec.n_max; ++k) {
                        std::string vote = label;
                        if (uniform(vote_rng, 0.0, 1.0) < spec.vote_error_rate) {
                            std::vector<std::string> others;
                            for (const auto& c : spec.classes)
                                if (c != label) others.push_back(c);
                            vote = others[vote_rng() % others.size()];
                        }
                        s.scripted_votes.push_back(vote);
                        out.transcript.push_back({"annotate/" + s.segment_id + "/video/" + std::to_string(k), "",
                                                  fenced({{"label", vote}, {"evidence", canonical_profile(vote)}}), ""});
                    }
                    out.transcript.push_back({"annotate/" + s.segment_id + "/radar", "", fenced(canonical_cues(label)), ""});
                } else if (spec.observer == "agree") {
                    out.transcript.push_back({"observer/" + s.segment_id, "",
                                              fenced({{"hypotheses", {label}}, {"ambiguity", "low"}}), ""});
                } else if (spec.observer == "timeout") {
                    out.transcript.push_back({"observer/" + s.segment_id, "", "", "timeout"});
                }
                out.samples.push_back(std::move(s));
            }
    return out;
}

void write_corpus(const SimCorpus& corpus, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir / "cubes", ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    std::string manifest;
    std::map<std::string, std::string> per_split;
    for (const auto& s : corpus.samples) {
        const std::string rel = "cubes/" + s.segment_id + ".rgc";
        io::write_cube(dir / rel, s.cube);
        const json rec = {{"segment_id", s.segment_id}, {"clip_id", s.segment_id}, {"cube", rel},
                          {"label", s.label},           {"split", s.split},      {"environment", "simulated"},
                          {"subject", "synthetic"},     {"date", ""}};
        manifest += rec.dump() + "\n";
        per_split[s.split] += rec.dump() + "\n";
    }
    io::write_text(dir / "manifest.jsonl", manifest);
    for (const char* split : {"kb", "dev", "test"}) io::write_text(dir / (std::string(split) + ".jsonl"), per_split[split]);
    io::write_text(dir / "transcript.jsonl", encode_script(corpus.transcript));
}

}  // namespace ragent::sim
