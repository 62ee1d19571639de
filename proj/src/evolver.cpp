#include "ragent/evolver.hpp"

#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "ragent/error.hpp"

using nlohmann::json;

namespace ragent {

std::vector<TraceRecord> EvolutionTrace::successes() const
{
    std::vector<TraceRecord> out;
    for (const auto& r : records)
        if (r.correct) out.push_back(r);
    return out;
}

std::vector<TraceRecord> EvolutionTrace::failures() const
{
    std::vector<TraceRecord> out;
    for (const auto& r : records)
        if (!r.correct) out.push_back(r);
    return out;
}

ScoreResult score_protocol(const Protocol& protocol, const std::vector<DevSample>& dev, const InferenceEngine& engine,
                           OracleBackend* observer)
{
    if (dev.empty()) throw Error(ErrorCode::EmptyDevSplit, "dev split has no samples");
    ScoreResult res;
    std::size_t correct = 0;
    for (const auto& s : dev) {
        TraceRecord t;
        t.query_id = s.query.id;
        t.reference = s.reference;
        try {
            const Verdict v = engine.infer(s.query, protocol, observer);
            t.predicted = v.label;
            t.reports = verdict_json(v);
        } catch (const Error& e) {
            t.reports = {{"error", e.what()}};
        }
        t.correct = !t.predicted.empty() && t.predicted == t.reference;
        correct += t.correct;
        res.trace.records.push_back(std::move(t));
    }
    res.score = static_cast<double>(correct) / static_cast<double>(dev.size());
    return res;
}

std::vector<TraceRecord> sample_traces(const std::vector<TraceRecord>& records, std::size_t n, std::uint64_t seed)
{
    if (records.size() <= n) return records;
    std::vector<std::size_t> idx(records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    // partial Fisher-Yates; plain modulo keeps the draw identical across standard libraries
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng() % (idx.size() - i)]);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    std::vector<TraceRecord> out;
    for (std::size_t i : idx) out.push_back(records[i]);
    return out;
}

namespace {

std::string trace_lines(const std::vector<TraceRecord>& records)
{
    std::string out;
    for (const auto& r : records) {
        json j = {{"query_id", r.query_id}, {"predicted", r.predicted}, {"reference", r.reference}};
        if (r.reports.contains("trace")) j["trace"] = r.reports["trace"];
        if (r.reports.contains("observer")) j["observer"] = r.reports["observer"];
        if (r.reports.contains("vetoed")) j["vetoed"] = r.reports["vetoed"];
        if (r.reports.contains("error")) j["error"] = r.reports["error"];
        out += j.dump() + "\n";
    }
    return out.empty() ? "(none)\n" : out;
}

std::string version_id(int n)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "v%04d", n);
    return buf;
}

}  // namespace

Protocol revise_protocol(const Protocol& current, const std::vector<TraceRecord>& failures,
                         const std::vector<TraceRecord>& successes, OracleBackend& reviser, int iteration,
                         const std::string& next_version, const LabelSet& labels)
{
    std::ostringstream prompt;
    prompt << "You maintain the protocol text of a four-role radar activity council. Rewrite the sections so the "
              "failure cases are resolved while the patterns behind the successes are preserved. Thresholds, classes "
              "and retrieval settings are fixed; change wording only. The observer section must not name any class.\n\n"
           << "Current protocol:\n" << encode_protocol(current) << "\nFailure traces:\n" << trace_lines(failures)
           << "\nSuccess traces:\n" << trace_lines(successes)
           << "\nReturn one fenced JSON object with string keys historian, physicist, observer and judge.";

    json obj;
    try {
        auto req = make_request(OracleRole::JudgeReviser, "revise/" + std::to_string(iteration), prompt.str(), labels);
        req.fallback_id = "revise";
        obj = extract_object(reviser.query(req));
    } catch (const Error&) {
        return current;
    }

    Protocol child = current;
    child.version = next_version;
    child.parent = current.version;
    child.iteration = iteration;
    auto take = [&](const char* key, std::string& dst, bool blind) {
        if (!obj.contains(key) || !obj[key].is_string()) return;
        std::string text = trim(obj[key].get<std::string>());
        if (text.empty()) return;
        if (blind && !labels.mentioned_in(text).empty()) return;
        dst = std::move(text);
    };
    take("historian", child.historian, false);
    take("physicist", child.physicist, false);
    take("observer", child.observer, true);
    take("judge", child.judge, false);
    return child;
}

json step_json(const EvolutionStep& s)
{
    return {{"iteration", s.iteration}, {"version", s.version},       {"score", s.score},
            {"best_version", s.best_version}, {"s_best", s.s_best}, {"candidate", s.candidate},
            {"candidate_score", s.candidate_score}, {"rollback", s.rollback}, {"seed", s.seed}};
}

EvolveResult evolve(const Protocol& p0, const EvolveConfig& cfg, const ScoreFn& score, const ReviseFn& revise)
{
    if (cfg.iterations < 1) throw Error(ErrorCode::ConfigError, "evolution needs T >= 1");
    if (!(cfg.delta >= 0.0)) throw Error(ErrorCode::ConfigError, "delta must be non-negative");

    std::map<std::string, ScoreResult> cache;
    auto scored = [&](const Protocol& p) -> const ScoreResult& {
        auto it = cache.find(p.version);
        if (it == cache.end()) it = cache.emplace(p.version, score(p)).first;
        return it->second;
    };

    EvolveResult res;
    res.versions.push_back(p0);
    Protocol current = p0;
    Protocol best = p0;
    double s_best = -std::numeric_limits<double>::infinity();
    int counter = 0;
    if (p0.version.size() == 5 && p0.version[0] == 'v') counter = std::atoi(p0.version.c_str() + 1);

    for (int t = 1; t <= cfg.iterations; ++t) {
        EvolutionStep step;
        step.iteration = t;
        step.version = current.version;
        const ScoreResult s_t = scored(current);  // copy: the cache may grow below
        step.score = s_t.score;
        if (s_t.score > s_best) {
            s_best = s_t.score;
            best = current;
        }

        step.seed = cfg.seed + static_cast<std::uint64_t>(t);
        const auto failures = sample_traces(s_t.trace.failures(), cfg.max_failures, step.seed);
        const auto successes = sample_traces(s_t.trace.successes(), cfg.max_successes, step.seed ^ 0x9e3779b97f4a7c15ULL);
        Protocol candidate = revise(current, failures, successes, t, version_id(counter + 1));
        if (candidate.version != current.version) {
            ++counter;
            res.versions.push_back(candidate);
        }
        step.candidate = candidate.version;
        step.candidate_score = scored(candidate).score;
        step.rollback = step.candidate_score < s_best - cfg.delta;
        current = step.rollback ? best : candidate;

        step.best_version = best.version;
        step.s_best = s_best;
        res.log.push_back(step);
    }
    res.best = best;
    res.s_best = s_best;
    return res;
}

EvolveResult evolve(const std::vector<DevSample>& dev, const Protocol& p0, const EvolveConfig& cfg,
                    const InferenceEngine& engine, OracleBackend* observer, OracleBackend& reviser)
{
    if (dev.empty()) throw Error(ErrorCode::EmptyDevSplit, "dev split has no samples");
    const LabelSet& labels = engine.labels();
    return evolve(
        p0, cfg, [&](const Protocol& p) { return score_protocol(p, dev, engine, observer); },
        [&](const Protocol& cur, const auto& fail, const auto& succ, int t, const std::string& next) {
            return revise_protocol(cur, fail, succ, reviser, t, next, labels);
        });
}

}  // namespace ragent
