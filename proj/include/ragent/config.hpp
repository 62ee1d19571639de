#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "ragent/engine.hpp"
#include "ragent/evolver.hpp"
#include "ragent/kb.hpp"
#include "ragent/radar_dsp.hpp"
#include "ragent/temporal_align.hpp"

namespace ragent {

struct OracleSettings {
    std::string kind = "mock";  ///< mock | http
    std::string transcript;     ///< scripted backend input
    std::string endpoint;
    std::string model;
    double timeout_s = 60.0;
    int retries = 3;
    int max_in_flight = 4;
    int backoff_ms = 500;
};

/// Every tunable of the pipeline. JSON sections: dsp, segmenter, features, kb, retrieval, council,
/// oracle, evolution, plus top-level jobs. Missing keys keep their defaults.
struct AppConfig {
    DspConfig dsp;
    SegmenterConfig segmenter;
    FeatureConfig features;
    ChannelAConfig channel_a;
    AcceptConfig accept;
    CouncilConfig council;
    OracleSettings oracle;
    EvolveConfig evolution;
    std::size_t jobs = 1;
    LabelSet labels = LabelSet::defaults();
    ConsistencyTable consistency = ConsistencyTable::defaults();
    CompatibilityTable compatibility = CompatibilityTable::defaults();

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;
    BuildConfig build_config() const;
};

/// Parses and validates. Relative rules_path entries resolve against base_dir. Throws ConfigError.
AppConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const AppConfig& c);
AppConfig load_config(const std::filesystem::path& path);

}  // namespace ragent
