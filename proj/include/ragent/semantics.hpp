#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ragent {

/// Ordered closed set of activity classes; order is the tie-break order everywhere.
class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<std::string> names);

    static LabelSet defaults();

    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t size() const noexcept { return names_.size(); }
    bool contains(std::string_view name) const;
    std::optional<std::size_t> index_of(std::string_view name) const;
    /// Case-insensitive, whitespace-trimmed lookup returning the canonical spelling.
    std::optional<std::string> canonical(std::string_view text) const;
    /// Labels mentioned anywhere in free text as whole words, case-insensitively.
    std::vector<std::string> mentioned_in(std::string_view text) const;

    friend bool operator==(const LabelSet&, const LabelSet&) = default;

private:
    std::vector<std::string> names_;
};

/// Allowed values per structured field (evidence profile, radar cues, observer ambiguity).
struct Vocabulary {
    std::map<std::string, std::vector<std::string>> fields;

    static Vocabulary defaults();
    bool allows(const std::string& field, const std::string& value) const;
    const std::vector<std::string>& values(const std::string& field) const;
};

inline constexpr std::string_view kEvidenceFields[] = {"displacement", "cadence", "arm_action", "torso_action", "leg_action"};

struct EvidenceProfile {
    std::string displacement;
    std::string cadence;
    std::string arm_action;
    std::string torso_action;
    std::string leg_action;

    const std::string& field(std::string_view name) const;
    std::string& field(std::string_view name);
    friend bool operator==(const EvidenceProfile&, const EvidenceProfile&) = default;
};

struct RadarCueReport {
    std::string description;
    std::string temporal_pattern;
    std::string range_motion;
    friend bool operator==(const RadarCueReport&, const RadarCueReport&) = default;
};

struct StructuredVote {
    std::string label;
    EvidenceProfile evidence;
};

struct ObserverReport {
    std::vector<std::string> hypotheses;  ///< ranked, at most 3
    std::string ambiguity = "high";
    bool degraded = false;                ///< set when the oracle failed and this is the fallback report
};

/// Per-class required / forbidden evidence values used to validate Channel A votes.
struct ConsistencyTable {
    struct Rule {
        std::map<std::string, std::set<std::string>> require;
        std::map<std::string, std::set<std::string>> forbid;
    };
    std::map<std::string, Rule> rules;

    static ConsistencyTable defaults();
};

/// Per-class radar cue values that contradict the class.
struct CompatibilityTable {
    struct Rule {
        std::set<std::string> forbid_temporal_pattern;
        std::set<std::string> forbid_range_motion;
    };
    std::map<std::string, Rule> rules;

    static CompatibilityTable defaults();
};

/// Canonical self-consistent evidence profile and radar cues for a class (used by scripted corpora).
EvidenceProfile canonical_profile(const std::string& label);
RadarCueReport canonical_cues(const std::string& label);

void to_json(nlohmann::json& j, const EvidenceProfile& p);
void from_json(const nlohmann::json& j, EvidenceProfile& p);
void to_json(nlohmann::json& j, const RadarCueReport& r);
void from_json(const nlohmann::json& j, RadarCueReport& r);
void to_json(nlohmann::json& j, const ConsistencyTable& t);
void from_json(const nlohmann::json& j, ConsistencyTable& t);
void to_json(nlohmann::json& j, const CompatibilityTable& t);
void from_json(const nlohmann::json& j, CompatibilityTable& t);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

}  // namespace ragent
