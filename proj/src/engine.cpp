#include "ragent/engine.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ragent/error.hpp"

namespace ragent {

Protocol Protocol::defaults()
{
    Protocol p;
    p.historian =
        "Retrieve the nearest accepted precedents in the selected physics subspace, weight each by inverse distance "
        "and report the normalized support of every class.";
    p.physicist =
        "Check every class against its kinematic feasibility rules: locomotion needs directional displacement, "
        "stationary repetitive motion keeps range drift small, impulsive actions are short bursts with wide spectral "
        "spread. Veto every class whose rule fails.";
    p.observer =
        "Inspect only the query maps. Describe the dominant Doppler pattern (bursty, periodic or sustained), the spread "
        "of limb micro-Doppler around the torso line and the range behaviour, then rank candidate activities.";
    p.judge =
        "Remove vetoed classes first. Accept the leading feasible semantic hypothesis when its ambiguity is low or "
        "medium and its retrieval support is comparable to the strongest feasible class; otherwise back off to the "
        "strongest retrieval-supported feasible class.";
    return p;
}

namespace {
constexpr const char* kSections[] = {"historian", "physicist", "observer", "judge"};

std::string& section(Protocol& p, std::string_view name)
{
    if (name == "historian") return p.historian;
    if (name == "physicist") return p.physicist;
    if (name == "observer") return p.observer;
    return p.judge;
}
}  // namespace

std::string encode_protocol(const Protocol& p)
{
    std::ostringstream os;
    os << "# version: " << p.version << "\n# parent: " << p.parent << "\n# iteration: " << p.iteration << '\n';
    Protocol copy = p;
    for (const char* s : kSections) os << '[' << s << "]\n" << section(copy, s) << '\n';
    return os.str();
}

Protocol decode_protocol(const std::string& text)
{
    Protocol p;
    p.historian = p.physicist = p.observer = p.judge = "";
    std::istringstream is(text);
    std::string line;
    std::string* current = nullptr;
    bool seen[4] = {};
    while (std::getline(is, line)) {
        if (!current && line.rfind("# ", 0) == 0) {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            const std::string key = trim(line.substr(2, colon - 2)), value = trim(line.substr(colon + 1));
            if (key == "version") p.version = value;
            if (key == "parent") p.parent = value;
            if (key == "iteration") p.iteration = std::atoi(value.c_str());
            continue;
        }
        bool header = false;
        for (int s = 0; s < 4; ++s)
            if (line == std::string("[") + kSections[s] + "]") {
                current = &section(p, kSections[s]);
                seen[s] = header = true;
            }
        if (header || !current) continue;
        if (!current->empty()) *current += '\n';
        *current += line;
    }
    for (int s = 0; s < 4; ++s) {
        std::string& body = section(p, kSections[s]);
        body = trim(body);
        if (!seen[s] || body.empty())
            throw Error(ErrorCode::FormatError, std::string("protocol section [") + kSections[s] + "] is missing or empty");
    }
    return p;
}

// ---------------------------------------------------------------------------------------------

InferenceEngine::InferenceEngine(const KnowledgeBase& kb, CouncilConfig cfg, Vocabulary vocab)
    : kb_(kb), cfg_(std::move(cfg)), vocab_(std::move(vocab))
{
    if (cfg_.top_m == 0) throw Error(ErrorCode::ConfigError, "top-m must be at least 1");
    index_ = kb_.index();
    if (index_.empty()) throw Error(ErrorCode::EmptyKB, "knowledge base has no accepted entries");

    const bool ranked = std::any_of(kb_.subspace.f_scores.begin(), kb_.subspace.f_scores.end(), [](double f) { return f > 0.0; });
    if (cfg_.top_k == kb_.subspace.k() || !ranked) {
        if (cfg_.top_k < 1 || cfg_.top_k > kFeatureDim) throw Error(ErrorCode::BadK, "K must be within [1, 25]");
        subspace_ = kb_.subspace;
    } else {
        subspace_ = select_subspace(kb_.subspace.f_scores, cfg_.top_k, kb_.subspace.epsilon);
    }

    std::vector<PhysicsFeatureVector> accepted;
    for (const auto& e : kb_.entries)
        if (e.retrievable()) accepted.push_back(e.features);
    rules_ = cfg_.rules.resolved(accepted);
    rules_.validate(kb_.labels);
}

Verdict InferenceEngine::infer(const Query& q, const Protocol& protocol, OracleBackend* observer) const
{
    Verdict v;
    v.query_id = q.id;
    Matrix dtm = q.dtm, rtm = q.rtm;
    dtm.round_to_float();
    rtm.round_to_float();
    const PhysicsFeatureVector x = extract_features(dtm, rtm, q.meta, cfg_.features);

    v.neighbors = knn(kb_.standardizer.standardize(x.values), index_, subspace_, cfg_.top_m);
    v.prior = historian(v.neighbors, kb_.labels, cfg_.historian_epsilon);
    v.physics = physicist(x, rules_, kb_.labels);
    v.observer = degraded_observer();
    if (observer) {
        try {
            v.observer = observe(q.id, dtm, rtm, *observer, protocol.observer, protocol.version, kb_.labels, vocab_);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::BlindProtocolViolation) throw;
        }
    }
    JudgeResult j = judge(v.prior, v.physics, v.observer, cfg_.pi_floor);
    v.label = j.label;
    v.trace = std::move(j.trace);
    if (cfg_.compute_confidence) v.confidence = confidence(v.prior, v.label, v.physics, v.observer, cfg_.weights);
    return v;
}

// ---------------------------------------------------------------------------------------------

EvalMetrics compute_metrics(const std::vector<std::string>& reference, const std::vector<std::string>& predicted,
                            const LabelSet& labels)
{
    if (reference.size() != predicted.size()) throw Error(ErrorCode::ConfigError, "reference/prediction length mismatch");
    EvalMetrics m;
    m.labels = labels.names();
    const std::size_t c = labels.size();
    m.confusion.assign(c, std::vector<std::size_t>(c, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const auto r = labels.index_of(reference[i]);
        const auto p = labels.index_of(predicted[i]);
        if (!r || !p) throw Error(ErrorCode::UnknownLabel, "label outside the label set in evaluation");
        ++m.confusion[*r][*p];
        correct += *r == *p;
    }
    m.accuracy = reference.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(reference.size());

    double sum = 0.0;
    std::size_t counted = 0;
    m.f1.assign(c, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < c; ++k) {
        std::size_t tp = m.confusion[k][k], support = 0, predicted_k = 0;
        for (std::size_t j = 0; j < c; ++j) {
            support += m.confusion[k][j];
            predicted_k += m.confusion[j][k];
        }
        if (support == 0 && predicted_k == 0) continue;
        const double denom = static_cast<double>(support + predicted_k);
        m.f1[k] = denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
        sum += m.f1[k];
        ++counted;
    }
    m.macro_f1 = counted ? sum / static_cast<double>(counted) : 0.0;
    return m;
}

std::string EvalMetrics::to_text() const
{
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << "accuracy=" << accuracy << "\nmacro_f1=" << macro_f1 << '\n';
    for (std::size_t k = 0; k < labels.size(); ++k)
        if (!std::isnan(f1[k])) os << "f1." << labels[k] << '=' << f1[k] << '\n';
    os << "confusion.labels=";
    for (std::size_t k = 0; k < labels.size(); ++k) os << (k ? "," : "") << labels[k];
    os << '\n';
    for (std::size_t k = 0; k < labels.size(); ++k) {
        os << "confusion." << labels[k] << '=';
        for (std::size_t j = 0; j < labels.size(); ++j) os << (j ? "," : "") << confusion[k][j];
        os << '\n';
    }
    return os.str();
}

}  // namespace ragent
