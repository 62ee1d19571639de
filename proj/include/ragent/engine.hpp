#pragma once

#include <string>
#include <vector>

#include "ragent/council.hpp"
#include "ragent/kb.hpp"

namespace ragent {

/// Council protocol text. Only the text evolves; thresholds, labels and subspace never do.
struct Protocol {
    std::string version = "v0000";
    std::string parent;  ///< empty for the seed protocol
    int iteration = 0;
    std::string historian;
    std::string physicist;
    std::string observer;
    std::string judge;

    static Protocol defaults();
    friend bool operator==(const Protocol&, const Protocol&) = default;
};

/// Sectioned UTF-8 text: "# key: value" header lines, then "[section]" blocks.
std::string encode_protocol(const Protocol& p);
Protocol decode_protocol(const std::string& text);

struct CouncilConfig {
    std::size_t top_m = 5;
    std::size_t top_k = 15;
    double pi_floor = 0.25;
    double historian_epsilon = kHistorianEpsilon;
    ConfidenceWeights weights;
    FeatureConfig features;
    RuleTable rules = RuleTable::defaults();
    bool compute_confidence = true;
};

struct Query {
    std::string id;
    Matrix dtm;
    Matrix rtm;
    FeatureMeta meta;
};

/// Read-only council over one KB snapshot; infer() may be called concurrently.
class InferenceEngine {
public:
    /// Throws EmptyKB when the KB has no accepted entry, ConfigError/BadK/BadRuleTable on bad settings.
    InferenceEngine(const KnowledgeBase& kb, CouncilConfig cfg, Vocabulary vocab = Vocabulary::defaults());

    /// observer == nullptr runs the council without an Observer (degraded report).
    Verdict infer(const Query& q, const Protocol& protocol, OracleBackend* observer) const;

    const SubspaceSelection& subspace() const noexcept { return subspace_; }
    const RuleTable& rules() const noexcept { return rules_; }
    const LabelSet& labels() const noexcept { return kb_.labels; }
    const CouncilConfig& config() const noexcept { return cfg_; }

private:
    const KnowledgeBase& kb_;
    CouncilConfig cfg_;
    Vocabulary vocab_;
    std::vector<IndexedEntry> index_;
    SubspaceSelection subspace_;
    RuleTable rules_;
};

struct EvalMetrics {
    std::vector<std::string> labels;
    std::vector<std::vector<std::size_t>> confusion;  ///< [reference][predicted], label-set order
    std::vector<double> f1;                           ///< per class; NaN for excluded classes
    double accuracy = 0.0;
    double macro_f1 = 0.0;

    std::string to_text() const;
};

/// Accuracy and macro-F1; classes with neither instances nor predictions are left out of the mean.
EvalMetrics compute_metrics(const std::vector<std::string>& reference, const std::vector<std::string>& predicted,
                            const LabelSet& labels);

}  // namespace ragent
