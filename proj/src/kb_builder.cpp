#include "ragent/kb.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "ragent/error.hpp"
#include "ragent/render.hpp"

namespace ragent {

const char* to_string(AcceptStatus s) noexcept
{
    switch (s) {
    case AcceptStatus::StrongAccept: return "strong_accept";
    case AcceptStatus::Accept: return "accept";
    case AcceptStatus::Reject: return "reject";
    }
    return "reject";
}

AcceptStatus status_from_string(const std::string& s)
{
    if (s == "strong_accept") return AcceptStatus::StrongAccept;
    if (s == "accept") return AcceptStatus::Accept;
    if (s == "reject") return AcceptStatus::Reject;
    throw Error(ErrorCode::FormatError, "unknown entry status '" + s + "'");
}

std::size_t KnowledgeBase::accepted_count() const
{
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.retrievable(); }));
}

std::vector<IndexedEntry> KnowledgeBase::index() const
{
    std::vector<IndexedEntry> out;
    for (const auto& e : entries)
        if (e.retrievable()) out.push_back({e.entry_id, e.pseudo_label, standardizer.standardize(e.features.values)});
    return out;
}

void fit_retrieval(KnowledgeBase& kb, std::size_t k)
{
    std::vector<PhysicsFeatureVector> feats;
    std::vector<std::string> labels;
    for (const auto& e : kb.entries)
        if (e.retrievable()) {
            feats.push_back(e.features);
            labels.push_back(e.pseudo_label);
        }
    if (feats.size() < 2) {
        FeatureArray ones;
        ones.fill(1.0);
        kb.standardizer = FeatureStandardizer(FeatureArray{}, ones);
        kb.subspace = full_subspace();
        return;
    }
    kb.standardizer = fit_standardizer(feats);
    std::vector<FeatureArray> z;
    z.reserve(feats.size());
    for (const auto& f : feats) z.push_back(kb.standardizer.standardize(f.values));
    const bool single_class = std::all_of(labels.begin(), labels.end(), [&](const auto& l) { return l == labels.front(); });
    if (single_class) {
        kb.subspace = full_subspace();
        return;
    }
    kb.subspace = select_subspace(anova_scores(z, labels), k);
}

// ---------------------------------------------------------------------------------------------

bool label_profile_consistent(const std::string& label, const EvidenceProfile& profile, const LabelSet& labels,
                              const ConsistencyTable& table)
{
    if (!labels.contains(label)) throw Error(ErrorCode::UnknownLabel, "'" + label + "' is not in the label set");
    const auto it = table.rules.find(label);
    if (it == table.rules.end()) return true;
    for (const auto& [field, allowed] : it->second.require)
        if (!allowed.count(profile.field(field))) return false;
    for (const auto& [field, banned] : it->second.forbid)
        if (banned.count(profile.field(field))) return false;
    return true;
}

namespace {

std::string annotator_prompt(const std::string& clip_ref, const Vocabulary& vocab)
{
    std::ostringstream os;
    os << "Watch video clip " << clip_ref
       << " and name the single activity performed, choosing exactly one label from the allowed set. "
          "Return one fenced JSON object with keys \"label\" and \"evidence\"; evidence has the keys";
    for (std::string_view f : kEvidenceFields) {
        os << ' ' << f << " (";
        const auto& vals = vocab.values(std::string(f));
        for (std::size_t i = 0; i < vals.size(); ++i) os << (i ? "|" : "") << vals[i];
        os << ')';
    }
    os << ". Describe only what is visible.";
    return os.str();
}

std::string radar_prompt(const Vocabulary& vocab)
{
    std::ostringstream os;
    os << "The first image is a Doppler-time map (time left to right, positive radial velocity up), the second a "
          "range-time map. Describe only the observable motion characteristics. Return one fenced JSON object with "
          "keys \"description\" (free text), \"temporal_pattern\" (";
    const auto& tp = vocab.values("temporal_pattern");
    for (std::size_t i = 0; i < tp.size(); ++i) os << (i ? "|" : "") << tp[i];
    os << ") and \"range_motion\" (";
    const auto& rm = vocab.values("range_motion");
    for (std::size_t i = 0; i < rm.size(); ++i) os << (i ? "|" : "") << rm[i];
    os << ").";
    return os.str();
}

std::string iso_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

ChannelAResult channel_a_vote(const std::string& clip_ref, OracleBackend& oracle, const LabelSet& labels,
                              const Vocabulary& vocab, const ConsistencyTable& table, const ChannelAConfig& cfg)
{
    if (cfg.n_max < 3) throw Error(ErrorCode::ConfigError, "n_max must be at least 3");
    const std::string prompt = annotator_prompt(clip_ref, vocab);

    ChannelAResult res;
    std::vector<int> counts(labels.size(), 0);
    std::map<std::string, EvidenceProfile> first_profile;
    for (int k = 0; k < cfg.n_max; ++k) {
        ++res.votes_cast;
        auto req = make_request(OracleRole::AnnotatorVideo, "annotate/" + clip_ref + "/video/" + std::to_string(k), prompt,
                                labels, {}, 0.7);
        try {
            StructuredVote vote = parse_vote(oracle.query(req), labels, vocab);
            if (label_profile_consistent(vote.label, vote.evidence, labels, table)) {
                ++counts[*labels.index_of(vote.label)];
                first_profile.emplace(vote.label, vote.evidence);
                res.valid_labels.push_back(vote.label);
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::AuthError) throw;
        }

        // leader cannot be overtaken by the remaining queries
        std::vector<int> sorted = counts;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        const int remaining = cfg.n_max - (k + 1);
        if (sorted[0] > 0 && sorted[0] - (sorted.size() > 1 ? sorted[1] : 0) > remaining) break;
    }

    res.valid_votes = static_cast<int>(res.valid_labels.size());
    if (res.valid_votes == 0) throw Error(ErrorCode::NoValidVotes, "no valid vote for clip " + clip_ref);
    const auto lead = std::max_element(counts.begin(), counts.end());  // first maximum -> label-set order
    res.label = labels.names()[static_cast<std::size_t>(lead - counts.begin())];
    res.s_ann = static_cast<double>(*lead) / res.valid_votes;
    res.evidence = first_profile.at(res.label);
    return res;
}

RadarCueReport channel_b_describe(const std::string& segment_id, const Matrix& dtm, const Matrix& rtm,
                                  OracleBackend& oracle, const LabelSet& labels, const Vocabulary& vocab)
{
    std::vector<Attachment> att{{"dtm.png", "image/png", render_png(dtm)}, {"rtm.png", "image/png", render_png(rtm)}};
    auto req = make_request(OracleRole::AnnotatorRadar, "annotate/" + segment_id + "/radar", radar_prompt(vocab), labels,
                            std::move(att));
    return parse_radar_cues(oracle.query(req), vocab);
}

bool compatibility_check(const std::string& label, const RadarCueReport& cues, const CompatibilityTable& table)
{
    const auto it = table.rules.find(label);
    if (it == table.rules.end()) return true;
    return !it->second.forbid_temporal_pattern.count(cues.temporal_pattern) &&
           !it->second.forbid_range_motion.count(cues.range_motion);
}

AcceptStatus accept_entry(double s_ann, bool cue_check, const AcceptConfig& cfg)
{
    if (s_ann < cfg.theta_accept || !cue_check) return AcceptStatus::Reject;
    return s_ann >= cfg.theta_strong ? AcceptStatus::StrongAccept : AcceptStatus::Accept;
}

std::string BuildSummary::to_text() const
{
    std::ostringstream os;
    os << "segments=" << segments << "\nstrong_accept=" << strong_accept << "\naccept=" << accept
       << "\nreject=" << reject << "\nfailed=" << failed << '\n';
    for (std::size_t i = 0; i < errors.size(); ++i) os << "error." << i << '=' << errors[i] << '\n';
    return os.str();
}

BuildResult build_kb(const std::vector<CorpusSegment>& corpus, OracleBackend& oracle, const BuildConfig& cfg)
{
    std::vector<std::optional<KnowledgeBaseEntry>> slots(corpus.size());
    std::vector<std::string> failures(corpus.size());
    std::atomic<std::size_t> next{0};
    std::mutex fatal_mutex;
    std::exception_ptr fatal;

    auto work = [&] {
        for (std::size_t i = next++; i < corpus.size(); i = next++) {
            const CorpusSegment& seg = corpus[i];
            try {
                KnowledgeBaseEntry e;
                e.entry_id = seg.segment_id;
                e.dtm = seg.dtm;
                e.rtm = seg.rtm;
                // features come from the stored precision so a reloaded KB reproduces them exactly
                e.dtm.round_to_float();
                e.rtm.round_to_float();
                e.features = extract_features(e.dtm, e.rtm, seg.meta, cfg.features);
                e.domain = seg.domain;

                const ChannelAResult a = channel_a_vote(seg.clip_id.empty() ? seg.segment_id : seg.clip_id, oracle,
                                                        cfg.labels, cfg.vocab, cfg.consistency, cfg.channel_a);
                e.pseudo_label = a.label;
                e.s_ann = a.s_ann;
                e.valid_votes = a.valid_votes;
                e.votes_cast = a.votes_cast;
                e.evidence = a.evidence;

                e.cues = channel_b_describe(seg.segment_id, e.dtm, e.rtm, oracle, cfg.labels, cfg.vocab);
                e.radar_description = e.cues.description;
                e.status = accept_entry(e.s_ann, compatibility_check(e.pseudo_label, e.cues, cfg.compatibility), cfg.accept);
                slots[i] = std::move(e);
            } catch (const Error& err) {
                if (err.code() == ErrorCode::AuthError) {
                    std::lock_guard lock(fatal_mutex);
                    if (!fatal) fatal = std::current_exception();
                    next = corpus.size();
                    return;
                }
                failures[i] = seg.segment_id + ": " + err.what();
            }
        }
    };

    const std::size_t jobs = std::clamp<std::size_t>(cfg.jobs, 1, std::max<std::size_t>(1, corpus.size()));
    if (jobs == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    BuildResult out;
    out.kb.labels = cfg.labels;
    out.kb.created = iso_now();
    out.summary.segments = corpus.size();
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!slots[i]) {
            ++out.summary.failed;
            out.summary.errors.push_back(failures[i]);
            continue;
        }
        switch (slots[i]->status) {
        case AcceptStatus::StrongAccept: ++out.summary.strong_accept; break;
        case AcceptStatus::Accept: ++out.summary.accept; break;
        case AcceptStatus::Reject: ++out.summary.reject; break;
        }
        out.kb.entries.push_back(std::move(*slots[i]));
    }
    fit_retrieval(out.kb, cfg.top_k);
    return out;
}

}  // namespace ragent
