#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ragent/features.hpp"
#include "ragent/matrix.hpp"
#include "ragent/oracle.hpp"
#include "ragent/retrieval.hpp"
#include "ragent/semantics.hpp"

namespace ragent {

enum class AcceptStatus { StrongAccept, Accept, Reject };

const char* to_string(AcceptStatus s) noexcept;
AcceptStatus status_from_string(const std::string& s);

struct DomainMeta {
    std::string environment;
    std::string subject;
    std::string date;
    friend bool operator==(const DomainMeta&, const DomainMeta&) = default;
};

struct KnowledgeBaseEntry {
    std::string entry_id;
    Matrix dtm;
    Matrix rtm;
    PhysicsFeatureVector features;
    std::string pseudo_label;
    double s_ann = 0.0;
    int valid_votes = 0;
    int votes_cast = 0;
    EvidenceProfile evidence;
    std::string radar_description;
    RadarCueReport cues;
    AcceptStatus status = AcceptStatus::Reject;
    DomainMeta domain;

    bool retrievable() const noexcept { return status != AcceptStatus::Reject; }
    friend bool operator==(const KnowledgeBaseEntry&, const KnowledgeBaseEntry&) = default;
};

/// Entries plus the retrieval statistics fitted on the accepted ones.
struct KnowledgeBase {
    LabelSet labels = LabelSet::defaults();
    FeatureStandardizer standardizer{FeatureArray{}, [] { FeatureArray a; a.fill(1.0); return a; }()};
    SubspaceSelection subspace = full_subspace();
    std::string created;  ///< ISO-8601 UTC, informational
    std::vector<KnowledgeBaseEntry> entries;

    std::size_t accepted_count() const;
    /// Accepted entries in standardized coordinates, in storage order.
    std::vector<IndexedEntry> index() const;
};

/// Fits the standardizer and the ANOVA ranking on accepted entries and keeps the top-k dimensions.
/// Fewer than two accepted entries keep an identity standardizer; a single class keeps every dimension.
void fit_retrieval(KnowledgeBase& kb, std::size_t k);

// ---------------------------------------------------------------------------------------------
// Annotation

struct ChannelAConfig {
    int n_max = 5;
};

struct ChannelAResult {
    std::string label;
    double s_ann = 0.0;
    EvidenceProfile evidence;       ///< first valid vote for the winner
    int votes_cast = 0;             ///< queries issued
    int valid_votes = 0;
    std::vector<std::string> valid_labels;  ///< in query order
};

/// Table lookup; a label without a rule is consistent with any profile. Throws UnknownLabel.
bool label_profile_consistent(const std::string& label, const EvidenceProfile& profile, const LabelSet& labels,
                              const ConsistencyTable& table = ConsistencyTable::defaults());

/// Repeated video annotation with early stopping once the leader cannot be overtaken.
/// Throws NoValidVotes, or AuthError from the backend.
ChannelAResult channel_a_vote(const std::string& clip_ref, OracleBackend& oracle, const LabelSet& labels,
                              const Vocabulary& vocab, const ConsistencyTable& table, const ChannelAConfig& cfg = {});

/// Label-blind description of the rendered maps.
RadarCueReport channel_b_describe(const std::string& segment_id, const Matrix& dtm, const Matrix& rtm,
                                  OracleBackend& oracle, const LabelSet& labels, const Vocabulary& vocab);

bool compatibility_check(const std::string& label, const RadarCueReport& cues,
                         const CompatibilityTable& table = CompatibilityTable::defaults());

struct AcceptConfig {
    double theta_accept = 0.6;
    double theta_strong = 0.8;
};

AcceptStatus accept_entry(double s_ann, bool cue_check, const AcceptConfig& cfg = {});

/// One synchronized activity segment ready for annotation.
struct CorpusSegment {
    std::string segment_id;
    std::string clip_id;
    Matrix dtm;
    Matrix rtm;
    FeatureMeta meta;
    DomainMeta domain;
};

struct BuildConfig {
    ChannelAConfig channel_a;
    AcceptConfig accept;
    FeatureConfig features;
    std::size_t top_k = 15;
    std::size_t jobs = 1;
    LabelSet labels = LabelSet::defaults();
    Vocabulary vocab = Vocabulary::defaults();
    ConsistencyTable consistency = ConsistencyTable::defaults();
    CompatibilityTable compatibility = CompatibilityTable::defaults();
};

struct BuildSummary {
    std::size_t segments = 0;
    std::size_t strong_accept = 0;
    std::size_t accept = 0;
    std::size_t reject = 0;
    std::size_t failed = 0;  ///< segments dropped by an error (see errors)
    std::vector<std::string> errors;

    /// key=value text report.
    std::string to_text() const;
};

struct BuildResult {
    KnowledgeBase kb;
    BuildSummary summary;
};

/// Channel A -> Channel B -> compatibility -> acceptance for every segment. Per-segment failures are
/// recorded and skipped; AuthError aborts the build.
BuildResult build_kb(const std::vector<CorpusSegment>& corpus, OracleBackend& oracle, const BuildConfig& cfg = {});

}  // namespace ragent
