#include "ragent/semantics.hpp"

#include <algorithm>
#include <cctype>

#include "ragent/error.hpp"

namespace ragent {

std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names))
{
    if (names_.empty()) throw Error(ErrorCode::ConfigError, "label set is empty");
    std::set<std::string> seen;
    for (const auto& n : names_)
        if (n.empty() || !seen.insert(to_lower(n)).second)
            throw Error(ErrorCode::ConfigError, "label set has an empty or duplicate name: '" + n + "'");
}

LabelSet LabelSet::defaults()
{
    return LabelSet({"Walking", "Running", "Jumping", "Kicking", "Waving", "Picking", "Squatting and Rising",
                     "Sitting Down", "Standing Up", "Falling", "Turning", "Stretching"});
}

bool LabelSet::contains(std::string_view name) const { return index_of(name).has_value(); }

std::optional<std::size_t> LabelSet::index_of(std::string_view name) const
{
    for (std::size_t k = 0; k < names_.size(); ++k)
        if (names_[k] == name) return k;
    return std::nullopt;
}

std::optional<std::string> LabelSet::canonical(std::string_view text) const
{
    const std::string needle = to_lower(trim(text));
    for (const auto& n : names_)
        if (to_lower(n) == needle) return n;
    return std::nullopt;
}

std::vector<std::string> LabelSet::mentioned_in(std::string_view text) const
{
    const std::string hay = to_lower(text);
    std::vector<std::string> found;
    for (const auto& n : names_) {
        const std::string needle = to_lower(n);
        for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
            const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(hay[pos - 1]));
            const std::size_t end = pos + needle.size();
            const bool right = end >= hay.size() || !std::isalnum(static_cast<unsigned char>(hay[end]));
            if (left && right) {
                found.push_back(n);
                break;
            }
        }
    }
    return found;
}

Vocabulary Vocabulary::defaults()
{
    Vocabulary v;
    v.fields = {
        {"displacement", {"none", "small", "large"}},
        {"cadence", {"none", "slow", "fast"}},
        {"arm_action", {"none", "raise", "swing", "wave", "push"}},
        {"torso_action", {"upright", "bend", "twist", "drop"}},
        {"leg_action", {"none", "step", "squat", "kick", "jump"}},
        {"temporal_pattern", {"bursty", "periodic", "sustained", "stationary"}},
        {"range_motion", {"stationary", "drifting", "directional"}},
        {"ambiguity", {"low", "medium", "high"}},
    };
    return v;
}

bool Vocabulary::allows(const std::string& field, const std::string& value) const
{
    const auto it = fields.find(field);
    return it != fields.end() && std::find(it->second.begin(), it->second.end(), value) != it->second.end();
}

const std::vector<std::string>& Vocabulary::values(const std::string& field) const
{
    static const std::vector<std::string> none;
    const auto it = fields.find(field);
    return it == fields.end() ? none : it->second;
}

const std::string& EvidenceProfile::field(std::string_view name) const
{
    return const_cast<EvidenceProfile*>(this)->field(name);
}

std::string& EvidenceProfile::field(std::string_view name)
{
    if (name == "displacement") return displacement;
    if (name == "cadence") return cadence;
    if (name == "arm_action") return arm_action;
    if (name == "torso_action") return torso_action;
    if (name == "leg_action") return leg_action;
    throw Error(ErrorCode::VocabError, "unknown evidence field '" + std::string(name) + "'");
}

ConsistencyTable ConsistencyTable::defaults()
{
    using S = std::set<std::string>;
    ConsistencyTable t;
    t.rules["Walking"] = {{{"displacement", S{"small", "large"}}, {"leg_action", S{"step"}}}, {}};
    t.rules["Running"] = {{{"displacement", S{"large"}}, {"cadence", S{"fast"}}, {"leg_action", S{"step"}}}, {}};
    t.rules["Jumping"] = {{{"leg_action", S{"jump"}}}, {}};
    t.rules["Kicking"] = {{{"leg_action", S{"kick"}}}, {{"displacement", S{"large"}}}};
    t.rules["Waving"] = {{{"displacement", S{"none"}}, {"arm_action", S{"wave"}}}, {}};
    t.rules["Picking"] = {{{"torso_action", S{"bend"}}}, {{"displacement", S{"large"}}}};
    t.rules["Squatting and Rising"] = {{{"leg_action", S{"squat"}}}, {{"displacement", S{"large"}}}};
    t.rules["Sitting Down"] = {{{"torso_action", S{"drop", "bend"}}}, {{"displacement", S{"large"}}, {"leg_action", S{"step", "jump", "kick"}}}};
    t.rules["Standing Up"] = {{{"torso_action", S{"upright"}}}, {{"displacement", S{"large"}}, {"leg_action", S{"step", "jump", "kick"}}}};
    t.rules["Falling"] = {{{"torso_action", S{"drop"}}}, {}};
    t.rules["Turning"] = {{{"torso_action", S{"twist"}}}, {{"displacement", S{"large"}}}};
    t.rules["Stretching"] = {{{"arm_action", S{"raise"}}}, {{"displacement", S{"large"}}}};
    return t;
}

CompatibilityTable CompatibilityTable::defaults()
{
    CompatibilityTable t;
    for (const char* c : {"Walking", "Running"}) t.rules[c].forbid_range_motion = {"stationary"};
    for (const char* c : {"Waving", "Squatting and Rising", "Stretching"}) t.rules[c].forbid_range_motion = {"directional"};
    for (const char* c : {"Jumping", "Kicking", "Falling"}) t.rules[c].forbid_temporal_pattern = {"sustained"};
    return t;
}

EvidenceProfile canonical_profile(const std::string& label)
{
    static const std::map<std::string, EvidenceProfile> table = {
        {"Walking", {"large", "slow", "swing", "upright", "step"}},
        {"Running", {"large", "fast", "swing", "upright", "step"}},
        {"Jumping", {"none", "none", "raise", "upright", "jump"}},
        {"Kicking", {"none", "none", "none", "upright", "kick"}},
        {"Waving", {"none", "fast", "wave", "upright", "none"}},
        {"Picking", {"none", "none", "none", "bend", "none"}},
        {"Squatting and Rising", {"none", "slow", "none", "bend", "squat"}},
        {"Sitting Down", {"none", "none", "none", "drop", "squat"}},
        {"Standing Up", {"none", "none", "none", "upright", "none"}},
        {"Falling", {"small", "none", "none", "drop", "none"}},
        {"Turning", {"none", "none", "none", "twist", "step"}},
        {"Stretching", {"none", "slow", "raise", "upright", "none"}},
    };
    const auto it = table.find(label);
    if (it == table.end()) throw Error(ErrorCode::UnknownLabel, "no canonical profile for '" + label + "'");
    return it->second;
}

RadarCueReport canonical_cues(const std::string& label)
{
    static const std::map<std::string, std::pair<std::string, std::string>> table = {
        {"Walking", {"periodic", "directional"}},  {"Running", {"periodic", "directional"}},
        {"Jumping", {"bursty", "stationary"}},      {"Kicking", {"bursty", "stationary"}},
        {"Waving", {"periodic", "stationary"}},     {"Picking", {"bursty", "stationary"}},
        {"Squatting and Rising", {"periodic", "stationary"}},
        {"Sitting Down", {"bursty", "stationary"}}, {"Standing Up", {"bursty", "stationary"}},
        {"Falling", {"bursty", "drifting"}},        {"Turning", {"sustained", "stationary"}},
        {"Stretching", {"sustained", "stationary"}},
    };
    const auto it = table.find(label);
    if (it == table.end()) throw Error(ErrorCode::UnknownLabel, "no canonical cues for '" + label + "'");
    const auto& [pattern, motion] = it->second;
    return {pattern + " Doppler energy with " + motion + " range behaviour", pattern, motion};
}

void to_json(nlohmann::json& j, const EvidenceProfile& p)
{
    j = nlohmann::json{{"displacement", p.displacement}, {"cadence", p.cadence}, {"arm_action", p.arm_action},
                       {"torso_action", p.torso_action}, {"leg_action", p.leg_action}};
}

void from_json(const nlohmann::json& j, EvidenceProfile& p)
{
    for (std::string_view f : kEvidenceFields) p.field(f) = j.at(std::string(f)).get<std::string>();
}

void to_json(nlohmann::json& j, const RadarCueReport& r)
{
    j = nlohmann::json{{"description", r.description}, {"temporal_pattern", r.temporal_pattern}, {"range_motion", r.range_motion}};
}

void from_json(const nlohmann::json& j, RadarCueReport& r)
{
    r.description = j.value("description", "");
    r.temporal_pattern = j.at("temporal_pattern").get<std::string>();
    r.range_motion = j.at("range_motion").get<std::string>();
}

void to_json(nlohmann::json& j, const ConsistencyTable& t)
{
    j = nlohmann::json::object();
    for (const auto& [label, rule] : t.rules) j[label] = {{"require", rule.require}, {"forbid", rule.forbid}};
}

void from_json(const nlohmann::json& j, ConsistencyTable& t)
{
    t.rules.clear();
    for (const auto& [label, rule] : j.items()) {
        ConsistencyTable::Rule r;
        if (rule.contains("require")) rule.at("require").get_to(r.require);
        if (rule.contains("forbid")) rule.at("forbid").get_to(r.forbid);
        t.rules[label] = std::move(r);
    }
}

void to_json(nlohmann::json& j, const CompatibilityTable& t)
{
    j = nlohmann::json::object();
    for (const auto& [label, rule] : t.rules)
        j[label] = {{"forbid_temporal_pattern", rule.forbid_temporal_pattern}, {"forbid_range_motion", rule.forbid_range_motion}};
}

void from_json(const nlohmann::json& j, CompatibilityTable& t)
{
    t.rules.clear();
    for (const auto& [label, rule] : j.items()) {
        CompatibilityTable::Rule r;
        if (rule.contains("forbid_temporal_pattern")) rule.at("forbid_temporal_pattern").get_to(r.forbid_temporal_pattern);
        if (rule.contains("forbid_range_motion")) rule.at("forbid_range_motion").get_to(r.forbid_range_motion);
        t.rules[label] = std::move(r);
    }
}

}  // namespace ragent
