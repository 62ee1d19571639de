#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ragent/engine.hpp"

namespace ragent {

struct TraceRecord {
    std::string query_id;
    std::string predicted;
    std::string reference;
    bool correct = false;
    nlohmann::json reports;  ///< verdict record, or {"error": ...} when inference failed
};

struct EvolutionTrace {
    std::vector<TraceRecord> records;

    std::vector<TraceRecord> successes() const;
    std::vector<TraceRecord> failures() const;
};

struct ScoreResult {
    double score = 0.0;
    EvolutionTrace trace;
};

struct DevSample {
    Query query;
    std::string reference;
};

/// Accuracy of the council under a protocol. Failed samples count as incorrect. Throws EmptyDevSplit.
ScoreResult score_protocol(const Protocol& protocol, const std::vector<DevSample>& dev, const InferenceEngine& engine,
                           OracleBackend* observer);

/// Asks the reviser for new section texts. Empty sections, and observer text naming a class, are
/// inherited from the parent; an oracle failure returns the parent unchanged.
Protocol revise_protocol(const Protocol& current, const std::vector<TraceRecord>& failures,
                         const std::vector<TraceRecord>& successes, OracleBackend& reviser, int iteration,
                         const std::string& next_version, const LabelSet& labels);

/// Seeded Fisher-Yates sample of at most n records, kept in their original order.
std::vector<TraceRecord> sample_traces(const std::vector<TraceRecord>& records, std::size_t n, std::uint64_t seed);

struct EvolveConfig {
    int iterations = 3;  ///< T
    double delta = 0.02;
    std::uint64_t seed = 0;
    std::size_t max_failures = 8;
    std::size_t max_successes = 4;
};

struct EvolutionStep {
    int iteration = 0;
    std::string version;  ///< protocol evaluated this iteration
    double score = 0.0;
    std::string best_version;
    double s_best = 0.0;
    std::string candidate;
    double candidate_score = 0.0;
    bool rollback = false;
    std::uint64_t seed = 0;
};

nlohmann::json step_json(const EvolutionStep& s);

struct EvolveResult {
    Protocol best;
    double s_best = 0.0;
    std::vector<Protocol> versions;  ///< every protocol produced, seed first
    std::vector<EvolutionStep> log;
};

using ScoreFn = std::function<ScoreResult(const Protocol&)>;
using ReviseFn = std::function<Protocol(const Protocol& current, const std::vector<TraceRecord>& failures,
                                        const std::vector<TraceRecord>& successes, int iteration,
                                        const std::string& next_version)>;

/// Zero-gradient protocol search with best tracking and rollback. Scores are cached per version id, so a
/// revision scored inside the rollback guard is not evaluated again in the next iteration.
EvolveResult evolve(const Protocol& p0, const EvolveConfig& cfg, const ScoreFn& score, const ReviseFn& revise);

EvolveResult evolve(const std::vector<DevSample>& dev, const Protocol& p0, const EvolveConfig& cfg,
                    const InferenceEngine& engine, OracleBackend* observer, OracleBackend& reviser);

}  // namespace ragent
