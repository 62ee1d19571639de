#include "ragent/config.hpp"

#include <cmath>

#include "ragent/error.hpp"
#include "ragent/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ragent {

namespace {

void require(bool ok, const std::string& what)
{
    if (!ok) throw Error(ErrorCode::ConfigError, what);
}

template <typename T>
void read(const json& obj, const char* key, T& dst)
{
    if (obj.contains(key)) dst = obj.at(key).get<T>();
}

}  // namespace

void AppConfig::validate() const
{
    require(dsp.roi_width >= 1 && dsp.roi_width % 2 == 1, "dsp.roi_width must be odd and >= 1");
    require(segmenter.window >= 1, "segmenter.window must be >= 1");
    require(segmenter.k >= 0.0, "segmenter.k must be >= 0");
    require(segmenter.min_length >= 1, "segmenter.min_length must be >= 1");
    require(features.torso_band_fraction > 0.0 && features.torso_band_fraction < 1.0, "features.torso_band_fraction must be in (0, 1)");
    require(features.bandwidth_energy > 0.0 && features.bandwidth_energy <= 1.0, "features.bandwidth_energy must be in (0, 1]");
    require(features.cadence_low_hz > 0.0 && features.cadence_low_hz < features.cadence_high_hz, "features cadence band is empty");
    require(features.glcm_levels >= 2, "features.glcm_levels must be >= 2");
    require(channel_a.n_max >= 3, "kb.n_max must be >= 3");
    require(accept.theta_accept >= 0.0 && accept.theta_accept <= accept.theta_strong && accept.theta_strong <= 1.0,
            "kb thresholds must satisfy 0 <= theta_accept <= theta_strong <= 1");
    require(council.top_k >= 1 && council.top_k <= kFeatureDim, "retrieval.top_k must be in [1, 25]");
    require(council.top_m >= 1, "retrieval.top_m must be >= 1");
    require(council.historian_epsilon >= 0.0, "retrieval.historian_epsilon must be >= 0");
    require(council.pi_floor >= 0.0 && council.pi_floor <= 1.0, "council.pi_floor must be in [0, 1]");
    const auto& w = council.weights;
    require(w.strength >= 0.0 && w.margin >= 0.0 && w.agreement >= 0.0 && w.strength + w.margin + w.agreement <= 1.0 + 1e-9,
            "council.weights must be non-negative and sum to at most 1");
    for (const auto& r : council.rules.rules) {
        require(feature_index(r.feature).has_value(), "council rule " + r.id + " names unknown feature " + r.feature);
        for (const auto& l : r.labels) require(labels.contains(l), "council rule " + r.id + " names unknown label " + l);
        require(r.op == "ge" || r.op == "le" || r.op == "abs_ge" || r.op == "abs_le", "council rule " + r.id + " has bad op " + r.op);
        require(!r.kb_percentile || (*r.kb_percentile >= 0.0 && *r.kb_percentile <= 100.0),
                "council rule " + r.id + " percentile must be in [0, 100]");
    }
    require(oracle.kind == "mock" || oracle.kind == "http", "oracle.kind must be mock or http");
    require(oracle.timeout_s > 0.0, "oracle.timeout_s must be > 0");
    require(oracle.retries >= 0, "oracle.retries must be >= 0");
    require(oracle.max_in_flight >= 1 && oracle.max_in_flight <= 1024, "oracle.max_in_flight must be in [1, 1024]");
    require(oracle.backoff_ms >= 0, "oracle.backoff_ms must be >= 0");
    require(evolution.iterations >= 1, "evolution.iterations must be >= 1");
    require(evolution.delta >= 0.0, "evolution.delta must be >= 0");
    require(jobs >= 1, "jobs must be >= 1");
}

BuildConfig AppConfig::build_config() const
{
    BuildConfig b;
    b.channel_a = channel_a;
    b.accept = accept;
    b.features = features;
    b.top_k = council.top_k;
    b.jobs = jobs;
    b.labels = labels;
    b.consistency = consistency;
    b.compatibility = compatibility;
    return b;
}

AppConfig config_from_json(const json& j, const fs::path& base_dir)
{
    AppConfig c;
    try {
        require(j.is_object(), "config must be a JSON object");
        if (j.contains("dsp")) {
            const auto& s = j.at("dsp");
            read(s, "roi_width", c.dsp.roi_width);
            read(s, "hann_window", c.dsp.hann_window);
            read(s, "range_fft_size", c.dsp.range_fft_size);
            read(s, "doppler_fft_size", c.dsp.doppler_fft_size);
        }
        if (j.contains("segmenter")) {
            const auto& s = j.at("segmenter");
            read(s, "window", c.segmenter.window);
            read(s, "k", c.segmenter.k);
            read(s, "gap", c.segmenter.gap);
            read(s, "pad", c.segmenter.pad);
            read(s, "min_length", c.segmenter.min_length);
        }
        if (j.contains("features")) {
            const auto& s = j.at("features");
            read(s, "torso_band_fraction", c.features.torso_band_fraction);
            read(s, "bandwidth_energy", c.features.bandwidth_energy);
            read(s, "cadence_low_hz", c.features.cadence_low_hz);
            read(s, "cadence_high_hz", c.features.cadence_high_hz);
            read(s, "glcm_levels", c.features.glcm_levels);
        }
        if (j.contains("kb")) {
            const auto& s = j.at("kb");
            read(s, "n_max", c.channel_a.n_max);
            read(s, "theta_accept", c.accept.theta_accept);
            read(s, "theta_strong", c.accept.theta_strong);
            if (s.contains("labels")) c.labels = LabelSet(s.at("labels").get<std::vector<std::string>>());
            if (s.contains("consistency")) s.at("consistency").get_to(c.consistency);
            if (s.contains("compatibility")) s.at("compatibility").get_to(c.compatibility);
        }
        if (j.contains("retrieval")) {
            const auto& s = j.at("retrieval");
            read(s, "top_k", c.council.top_k);
            read(s, "top_m", c.council.top_m);
            read(s, "historian_epsilon", c.council.historian_epsilon);
        }
        if (j.contains("council")) {
            const auto& s = j.at("council");
            read(s, "pi_floor", c.council.pi_floor);
            if (s.contains("weights")) {
                read(s.at("weights"), "strength", c.council.weights.strength);
                read(s.at("weights"), "margin", c.council.weights.margin);
                read(s.at("weights"), "agreement", c.council.weights.agreement);
            }
            if (s.contains("rules")) s.at("rules").get_to(c.council.rules);
            if (s.contains("rules_path")) {
                fs::path p = s.at("rules_path").get<std::string>();
                if (p.is_relative()) p = base_dir / p;
                json::parse(io::read_text(p)).get_to(c.council.rules);
            }
        }
        if (j.contains("oracle")) {
            const auto& s = j.at("oracle");
            read(s, "kind", c.oracle.kind);
            read(s, "transcript", c.oracle.transcript);
            read(s, "endpoint", c.oracle.endpoint);
            read(s, "model", c.oracle.model);
            read(s, "timeout_s", c.oracle.timeout_s);
            read(s, "retries", c.oracle.retries);
            read(s, "max_in_flight", c.oracle.max_in_flight);
            read(s, "backoff_ms", c.oracle.backoff_ms);
            if (!c.oracle.transcript.empty() && fs::path(c.oracle.transcript).is_relative())
                c.oracle.transcript = (base_dir / c.oracle.transcript).string();
        }
        if (j.contains("evolution")) {
            const auto& s = j.at("evolution");
            read(s, "iterations", c.evolution.iterations);
            read(s, "delta", c.evolution.delta);
            read(s, "seed", c.evolution.seed);
            read(s, "max_failures", c.evolution.max_failures);
            read(s, "max_successes", c.evolution.max_successes);
        }
        read(j, "jobs", c.jobs);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("bad config value: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw Error(ErrorCode::ConfigError, e.what());
    }
    c.validate();
    return c;
}

json config_to_json(const AppConfig& c)
{
    json rules;
    to_json(rules, c.council.rules);
    json consistency, compatibility;
    to_json(consistency, c.consistency);
    to_json(compatibility, c.compatibility);
    return {{"dsp", {{"roi_width", c.dsp.roi_width}, {"hann_window", c.dsp.hann_window},
                     {"range_fft_size", c.dsp.range_fft_size}, {"doppler_fft_size", c.dsp.doppler_fft_size}}},
            {"segmenter", {{"window", c.segmenter.window}, {"k", c.segmenter.k}, {"gap", c.segmenter.gap},
                           {"pad", c.segmenter.pad}, {"min_length", c.segmenter.min_length}}},
            {"features", {{"torso_band_fraction", c.features.torso_band_fraction}, {"bandwidth_energy", c.features.bandwidth_energy},
                          {"cadence_low_hz", c.features.cadence_low_hz}, {"cadence_high_hz", c.features.cadence_high_hz},
                          {"glcm_levels", c.features.glcm_levels}}},
            {"kb", {{"n_max", c.channel_a.n_max}, {"theta_accept", c.accept.theta_accept}, {"theta_strong", c.accept.theta_strong},
                    {"labels", c.labels.names()}, {"consistency", consistency}, {"compatibility", compatibility}}},
            {"retrieval", {{"top_k", c.council.top_k}, {"top_m", c.council.top_m}, {"historian_epsilon", c.council.historian_epsilon}}},
            {"council", {{"pi_floor", c.council.pi_floor},
                         {"weights", {{"strength", c.council.weights.strength}, {"margin", c.council.weights.margin},
                                      {"agreement", c.council.weights.agreement}}},
                         {"rules", rules}}},
            {"oracle", {{"kind", c.oracle.kind}, {"transcript", c.oracle.transcript}, {"endpoint", c.oracle.endpoint},
                        {"model", c.oracle.model}, {"timeout_s", c.oracle.timeout_s}, {"retries", c.oracle.retries},
                        {"max_in_flight", c.oracle.max_in_flight}, {"backoff_ms", c.oracle.backoff_ms}}},
            {"evolution", {{"iterations", c.evolution.iterations}, {"delta", c.evolution.delta}, {"seed", c.evolution.seed},
                           {"max_failures", c.evolution.max_failures}, {"max_successes", c.evolution.max_successes}}},
            {"jobs", c.jobs}};
}

AppConfig load_config(const fs::path& path)
{
    std::string text;
    try {
        text = io::read_text(path);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, std::string("cannot read config: ") + e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

}  // namespace ragent
