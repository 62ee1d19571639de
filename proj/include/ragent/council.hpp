#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ragent/features.hpp"
#include "ragent/oracle.hpp"
#include "ragent/retrieval.hpp"
#include "ragent/semantics.hpp"

namespace ragent {

inline constexpr double kHistorianEpsilon = 1e-8;

struct RetrievalPrior {
    std::vector<std::string> labels;  ///< label-set order
    std::vector<double> support;      ///< parallel to labels

    double operator()(const std::string& label) const;
    /// argmax support, ties -> label-set order.
    const std::string& leading() const;
};

/// w_d = 1/(d + eps), pi(c) = sum of w_d with label c over the total. Throws EmptyNeighbors, UnknownLabel.
RetrievalPrior historian(const NeighborSet& neighbors, const LabelSet& labels, double epsilon = kHistorianEpsilon);

// ---------------------------------------------------------------------------------------------
// Physicist

/// A predicate "feature op threshold" that each listed label must satisfy. The threshold may be given
/// as a percentile of the accepted KB features ("kb_percentile:60") and is resolved before use.
struct PhysicsRule {
    std::string id;
    std::vector<std::string> labels;
    std::string feature;
    std::string op;  ///< ge | le | abs_ge | abs_le
    double threshold = 0.0;
    std::optional<double> kb_percentile;
};

struct RuleTable {
    std::vector<PhysicsRule> rules;

    static RuleTable defaults();
    /// Replaces percentile thresholds with values from the given features (linear interpolation).
    RuleTable resolved(std::span<const PhysicsFeatureVector> kb_features) const;
    /// Throws BadRuleTable on unknown labels, features or operators, or unresolved percentiles.
    void validate(const LabelSet& labels) const;
};

void to_json(nlohmann::json& j, const RuleTable& t);
void from_json(const nlohmann::json& j, RuleTable& t);

struct FiredRule {
    std::string rule_id;
    std::string label;
    double threshold = 0.0;
    double value = 0.0;
};

struct PhysicistReport {
    std::vector<std::string> feasible;  ///< label-set order
    std::vector<std::string> vetoed;
    std::vector<FiredRule> fired_rules;
    bool fallback = false;

    bool is_feasible(const std::string& label) const;
};

PhysicistReport physicist(const PhysicsFeatureVector& x, const RuleTable& rules, const LabelSet& labels);

// ---------------------------------------------------------------------------------------------
// Observer

/// Blind query over the rendered maps. Errors propagate; see degraded_observer().
ObserverReport observe(const std::string& query_id, const Matrix& dtm, const Matrix& rtm, OracleBackend& oracle,
                       const std::string& instructions, const std::string& protocol_version, const LabelSet& labels,
                       const Vocabulary& vocab);

/// Report used when the observer oracle fails: no hypotheses, high ambiguity.
ObserverReport degraded_observer();

// ---------------------------------------------------------------------------------------------
// Judge and confidence

struct JudgeResult {
    std::string label;
    std::vector<std::string> trace;
};

JudgeResult judge(const RetrievalPrior& prior, const PhysicistReport& physics, const ObserverReport& observer,
                  double pi_floor = 0.25);

struct ConfidenceWeights {
    double strength = 0.5;
    double margin = 0.25;
    double agreement = 0.25;
};

/// Post-hoc: w_s*pi(y) + w_m*margin + w_a*agreement. Agreement is 1 when y is feasible and the observer's
/// top hypothesis, 0.5 when only feasible; under fallback feasibility is vacuous and agreement is 0.
double confidence(const RetrievalPrior& prior, const std::string& label, const PhysicistReport& physics,
                  const ObserverReport& observer, const ConfidenceWeights& w = {});

struct Verdict {
    std::string query_id;
    std::string label;
    std::optional<double> confidence;
    RetrievalPrior prior;
    NeighborSet neighbors;
    PhysicistReport physics;
    ObserverReport observer;
    std::vector<std::string> trace;
};

nlohmann::json verdict_json(const Verdict& v);

}  // namespace ragent
