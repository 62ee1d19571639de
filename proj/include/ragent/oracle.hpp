#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ragent/semantics.hpp"

namespace ragent {

enum class OracleRole { AnnotatorVideo, AnnotatorRadar, Observer, JudgeReviser };

const char* to_string(OracleRole role) noexcept;
OracleRole role_from_string(const std::string& s);

struct Attachment {
    std::string name;
    std::string mime = "image/png";
    std::vector<std::uint8_t> bytes;
};

struct OracleRequest {
    OracleRole role = OracleRole::Observer;
    std::string request_id;
    /// Secondary lookup key for scripted backends (e.g. a protocol-independent id).
    std::string fallback_id;
    std::string prompt;
    /// Closed answer set shown to roles that must answer with labels; never a per-query candidate.
    std::vector<std::string> answer_labels;
    std::vector<Attachment> attachments;
    double temperature = 0.0;
};

/// Builds a request and enforces the blind protocol: observer and radar-annotator prompts may not
/// mention any label of the set. Throws BlindProtocolViolation.
OracleRequest make_request(OracleRole role, std::string request_id, std::string prompt, const LabelSet& labels,
                           std::vector<Attachment> attachments = {}, double temperature = 0.0);

class OracleBackend {
public:
    virtual ~OracleBackend() = default;
    /// Model text for the request. Throws Error with Timeout, TransportError, RateLimited or AuthError.
    virtual std::string query(const OracleRequest& request) = 0;
};

/// One line of a transcript file. Exactly one of request_id / role selects the record.
struct ScriptRecord {
    std::string request_id;
    std::string role;      ///< role-wide default when request_id is empty
    std::string response;
    std::string error;     ///< "timeout" | "transport" | "rate_limited" to script a failure
};

std::string encode_script(const std::vector<ScriptRecord>& records);
std::vector<ScriptRecord> decode_script(const std::string& jsonl);

/// Deterministic backend answering from a transcript keyed by request id.
class ScriptedBackend : public OracleBackend {
public:
    explicit ScriptedBackend(std::vector<ScriptRecord> records);
    static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

    std::string query(const OracleRequest& request) override;

    /// (request_id, response-or-error) in call order.
    std::vector<std::pair<std::string, std::string>> transcript() const;

private:
    const ScriptRecord* lookup(const OracleRequest& request) const;

    std::map<std::string, ScriptRecord> by_id_;
    std::map<std::string, ScriptRecord> by_role_;
    mutable std::mutex mutex_;
    std::vector<std::pair<std::string, std::string>> transcript_;
};

struct HttpOracleConfig {
    std::string endpoint;  ///< e.g. http://host:port/v1/chat/completions
    std::string model;
    std::string api_key;
    double timeout_s = 60.0;
    int retries = 3;
    int max_in_flight = 4;
    int backoff_ms = 500;  ///< first retry delay; doubles per attempt
};

/// Chat-completions request body for a request.
nlohmann::json build_chat_payload(const OracleRequest& request, const std::string& model);
/// Text of the first choice of a chat-completions response body.
std::string extract_chat_text(const std::string& body);

class HttpBackend : public OracleBackend {
public:
    explicit HttpBackend(HttpOracleConfig cfg);

    std::string query(const OracleRequest& request) override;

    /// Total HTTP attempts made (including retries).
    int attempts() const noexcept { return attempts_.load(); }

private:
    HttpOracleConfig cfg_;
    std::string base_;
    std::string path_;
    std::counting_semaphore<1024> slots_;
    std::atomic<int> attempts_{0};
};

// Strict parsers over model text: the first fenced block (or first balanced object) must be a JSON
// object whose fields come from the closed vocabularies.
nlohmann::json extract_object(const std::string& text);
StructuredVote parse_vote(const std::string& text, const LabelSet& labels, const Vocabulary& vocab);
RadarCueReport parse_radar_cues(const std::string& text, const Vocabulary& vocab);
ObserverReport parse_observer(const std::string& text, const LabelSet& labels, const Vocabulary& vocab);

/// Renders an object as the fenced block the parsers accept.
std::string fenced(const nlohmann::json& object);

}  // namespace ragent
