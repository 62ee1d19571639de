#include "ragent/council.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ragent/error.hpp"
#include "ragent/render.hpp"

using nlohmann::json;

namespace ragent {

namespace {

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string join(const std::vector<std::string>& items)
{
    std::string out = "{";
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
    return out + "}";
}

}  // namespace

double RetrievalPrior::operator()(const std::string& label) const
{
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return support[i];
    return 0.0;
}

const std::string& RetrievalPrior::leading() const
{
    if (labels.empty()) throw Error(ErrorCode::EmptyNeighbors, "empty retrieval prior");
    return labels[static_cast<std::size_t>(std::max_element(support.begin(), support.end()) - support.begin())];
}

RetrievalPrior historian(const NeighborSet& neighbors, const LabelSet& labels, double epsilon)
{
    if (neighbors.empty()) throw Error(ErrorCode::EmptyNeighbors, "historian needs at least one neighbor");
    RetrievalPrior p;
    p.labels = labels.names();
    p.support.assign(labels.size(), 0.0);
    double total = 0.0;
    for (const auto& n : neighbors) {
        const auto idx = labels.index_of(n.label);
        if (!idx) throw Error(ErrorCode::UnknownLabel, "neighbor " + n.entry_id + " has label '" + n.label + "'");
        const double w = 1.0 / (n.distance + epsilon);
        p.support[*idx] += w;
        total += w;
    }
    for (double& s : p.support) s /= total;
    return p;
}

// ---------------------------------------------------------------------------------------------

RuleTable RuleTable::defaults()
{
    RuleTable t;
    t.rules.push_back({"locomotion_min_displacement", {"Walking", "Running"}, "total_displacement_m", "abs_ge", 0.5, {}});
    t.rules.push_back({"stationary_max_drift",
                       {"Waving", "Squatting and Rising", "Stretching", "Picking", "Turning"},
                       "range_drift_std_m", "le", 0.3, {}});
    t.rules.push_back({"impulsive_max_duration", {"Jumping", "Kicking", "Falling"}, "duration_s", "le", 1.5, {}});
    t.rules.push_back({"impulsive_min_spread", {"Jumping", "Kicking", "Falling"}, "spectral_spread_mean", "ge", 0.0, 60.0});
    return t;
}

RuleTable RuleTable::resolved(std::span<const PhysicsFeatureVector> kb_features) const
{
    RuleTable out = *this;
    for (auto& r : out.rules) {
        if (!r.kb_percentile || kb_features.empty()) continue;
        const auto idx = feature_index(r.feature);
        if (!idx) continue;  // reported by validate()
        std::vector<double> v;
        for (const auto& f : kb_features) v.push_back(f.values[*idx]);
        std::sort(v.begin(), v.end());
        const double pos = std::clamp(*r.kb_percentile, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        r.threshold = v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
        r.kb_percentile.reset();
    }
    return out;
}

void RuleTable::validate(const LabelSet& labels) const
{
    for (const auto& r : rules) {
        if (!feature_index(r.feature)) throw Error(ErrorCode::BadRuleTable, "rule " + r.id + ": unknown feature '" + r.feature + "'");
        if (r.op != "ge" && r.op != "le" && r.op != "abs_ge" && r.op != "abs_le")
            throw Error(ErrorCode::BadRuleTable, "rule " + r.id + ": unknown operator '" + r.op + "'");
        if (r.kb_percentile) throw Error(ErrorCode::BadRuleTable, "rule " + r.id + ": percentile threshold not resolved");
        if (!std::isfinite(r.threshold)) throw Error(ErrorCode::BadRuleTable, "rule " + r.id + ": threshold is not finite");
        for (const auto& l : r.labels)
            if (!labels.contains(l)) throw Error(ErrorCode::BadRuleTable, "rule " + r.id + ": unknown label '" + l + "'");
    }
}

void to_json(json& j, const RuleTable& t)
{
    j = json::array();
    for (const auto& r : t.rules) {
        json jr = {{"id", r.id}, {"labels", r.labels}, {"feature", r.feature}, {"op", r.op}};
        if (r.kb_percentile)
            jr["threshold"] = "kb_percentile:" + fmt(*r.kb_percentile);
        else
            jr["threshold"] = r.threshold;
        j.push_back(jr);
    }
}

void from_json(const json& j, RuleTable& t)
{
    t.rules.clear();
    for (const auto& jr : j) {
        PhysicsRule r;
        r.id = jr.at("id").get<std::string>();
        r.labels = jr.at("labels").get<std::vector<std::string>>();
        r.feature = jr.at("feature").get<std::string>();
        r.op = jr.at("op").get<std::string>();
        const auto& th = jr.at("threshold");
        if (th.is_string()) {
            const std::string s = th.get<std::string>();
            constexpr std::string_view prefix = "kb_percentile:";
            if (s.rfind(prefix, 0) != 0) throw Error(ErrorCode::BadRuleTable, "rule " + r.id + ": bad threshold '" + s + "'");
            try {
                r.kb_percentile = std::stod(s.substr(prefix.size()));
            } catch (const std::exception&) {
                throw Error(ErrorCode::BadRuleTable, "rule " + r.id + ": bad percentile '" + s + "'");
            }
        } else {
            r.threshold = th.get<double>();
        }
        t.rules.push_back(std::move(r));
    }
}

bool PhysicistReport::is_feasible(const std::string& label) const
{
    return std::find(feasible.begin(), feasible.end(), label) != feasible.end();
}

PhysicistReport physicist(const PhysicsFeatureVector& x, const RuleTable& rules, const LabelSet& labels)
{
    rules.validate(labels);
    PhysicistReport rep;
    std::vector<bool> veto(labels.size(), false);
    for (const auto& r : rules.rules) {
        const double v = x.values[*feature_index(r.feature)];
        bool ok = false;
        if (r.op == "ge") ok = v >= r.threshold;
        if (r.op == "le") ok = v <= r.threshold;
        if (r.op == "abs_ge") ok = std::abs(v) >= r.threshold;
        if (r.op == "abs_le") ok = std::abs(v) <= r.threshold;
        if (ok) continue;
        for (const auto& l : r.labels) {
            veto[*labels.index_of(l)] = true;
            rep.fired_rules.push_back({r.id, l, r.threshold, v});
        }
    }
    for (std::size_t i = 0; i < labels.size(); ++i) (veto[i] ? rep.vetoed : rep.feasible).push_back(labels.names()[i]);
    if (rep.feasible.empty()) {
        // fired_rules keeps the record of what vetoed everything
        rep.fallback = true;
        rep.feasible = labels.names();
        rep.vetoed.clear();
    }
    return rep;
}

// ---------------------------------------------------------------------------------------------

ObserverReport observe(const std::string& query_id, const Matrix& dtm, const Matrix& rtm, OracleBackend& oracle,
                       const std::string& instructions, const std::string& protocol_version, const LabelSet& labels,
                       const Vocabulary& vocab)
{
    std::string prompt = instructions;
    prompt += "\n\nThe first image is a Doppler-time map (time left to right, positive radial velocity up), the second a "
              "range-time map. Return one fenced JSON object with keys \"hypotheses\" (up to three activity names from "
              "the allowed set, most likely first) and \"ambiguity\" (low|medium|high).";
    std::vector<Attachment> att{{"dtm.png", "image/png", render_png(dtm)}, {"rtm.png", "image/png", render_png(rtm)}};
    auto req = make_request(OracleRole::Observer, "observer/" + protocol_version + "/" + query_id, prompt, labels,
                            std::move(att));
    req.fallback_id = "observer/" + query_id;
    return parse_observer(oracle.query(req), labels, vocab);
}

ObserverReport degraded_observer()
{
    ObserverReport r;
    r.ambiguity = "high";
    r.degraded = true;
    return r;
}

JudgeResult judge(const RetrievalPrior& prior, const PhysicistReport& physics, const ObserverReport& observer,
                  double pi_floor)
{
    JudgeResult res;
    const auto& feasible = physics.feasible;
    if (physics.fallback)
        res.trace.push_back("step1: every label vetoed, fallback to full label set " + join(feasible));
    else
        res.trace.push_back("step1: feasible=" + join(feasible) + " vetoed=" + join(physics.vetoed));

    // feasible labels are already in label-set order, so the first maximum wins ties
    std::string best;
    double best_pi = -1.0;
    for (const auto& c : feasible)
        if (prior(c) > best_pi) {
            best_pi = prior(c);
            best = c;
        }

    std::optional<std::string> agreed;
    const bool stable = observer.ambiguity == "low" || observer.ambiguity == "medium";
    for (const auto& h : observer.hypotheses)
        if (physics.is_feasible(h)) {
            if (stable) agreed = h;
            res.trace.push_back("step2: observer hypothesis " + h + " is feasible, ambiguity=" + observer.ambiguity +
                                (stable ? ", agreed" : ", not stable"));
            break;
        }
    if (res.trace.size() == 1)
        res.trace.push_back("step2: no feasible observer hypothesis, ambiguity=" + observer.ambiguity);

    if (agreed) {
        const double need = pi_floor * best_pi;
        if (prior(*agreed) >= need) {
            res.trace.push_back("step3: accept " + *agreed + ", support " + fmt(prior(*agreed)) + " >= " + fmt(pi_floor) +
                                " x " + fmt(best_pi));
            res.label = *agreed;
            return res;
        }
        res.trace.push_back("step3: reject " + *agreed + ", support " + fmt(prior(*agreed)) + " < " + fmt(pi_floor) +
                            " x " + fmt(best_pi));
    } else {
        res.trace.push_back("step3: skipped, no agreed hypothesis");
    }
    res.trace.push_back("step4: back-off to strongest feasible support " + best + " (" + fmt(best_pi) + ")");
    res.label = best;
    return res;
}

double confidence(const RetrievalPrior& prior, const std::string& label, const PhysicistReport& physics,
                  const ObserverReport& observer, const ConfidenceWeights& w)
{
    const double p = prior(label);
    double rival = 0.0;
    for (std::size_t i = 0; i < prior.labels.size(); ++i)
        if (prior.labels[i] != label) rival = std::max(rival, prior.support[i]);
    const double margin = std::clamp(p - rival, 0.0, 1.0);
    double agreement = 0.0;
    if (!physics.fallback && physics.is_feasible(label))
        agreement = !observer.hypotheses.empty() && observer.hypotheses.front() == label ? 1.0 : 0.5;
    return std::clamp(w.strength * p + w.margin * margin + w.agreement * agreement, 0.0, 1.0);
}

json verdict_json(const Verdict& v)
{
    json pi = json::object();
    for (std::size_t i = 0; i < v.prior.labels.size(); ++i) pi[v.prior.labels[i]] = v.prior.support[i];
    json neighbors = json::array();
    for (const auto& n : v.neighbors) neighbors.push_back({{"entry_id", n.entry_id}, {"distance", n.distance}, {"label", n.label}});
    json fired = json::array();
    for (const auto& f : v.physics.fired_rules)
        fired.push_back({{"rule", f.rule_id}, {"label", f.label}, {"threshold", f.threshold}, {"value", f.value}});
    json j = {{"query_id", v.query_id},
              {"label", v.label},
              {"confidence", v.confidence ? json(*v.confidence) : json(nullptr)},
              {"pi", pi},
              {"neighbors", neighbors},
              {"feasible", v.physics.feasible},
              {"vetoed", v.physics.vetoed},
              {"fired_rules", fired},
              {"fallback", v.physics.fallback},
              {"observer", {{"hypotheses", v.observer.hypotheses}, {"ambiguity", v.observer.ambiguity}, {"degraded", v.observer.degraded}}},
              {"trace", v.trace}};
    return j;
}

}  // namespace ragent
