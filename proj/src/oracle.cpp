#include "ragent/oracle.hpp"

#include "httplib.h"

#include <algorithm>
#include <sstream>
#include <thread>

#include "ragent/error.hpp"

namespace ragent {

const char* to_string(OracleRole role) noexcept
{
    switch (role) {
    case OracleRole::AnnotatorVideo: return "annotator_video";
    case OracleRole::AnnotatorRadar: return "annotator_radar";
    case OracleRole::Observer: return "observer";
    case OracleRole::JudgeReviser: return "judge_reviser";
    }
    return "unknown";
}

OracleRole role_from_string(const std::string& s)
{
    for (OracleRole r : {OracleRole::AnnotatorVideo, OracleRole::AnnotatorRadar, OracleRole::Observer, OracleRole::JudgeReviser})
        if (s == to_string(r)) return r;
    throw Error(ErrorCode::ConfigError, "unknown oracle role '" + s + "'");
}

OracleRequest make_request(OracleRole role, std::string request_id, std::string prompt, const LabelSet& labels,
                           std::vector<Attachment> attachments, double temperature)
{
    if (role == OracleRole::Observer || role == OracleRole::AnnotatorRadar) {
        const auto leaked = labels.mentioned_in(prompt);
        if (!leaked.empty())
            throw Error(ErrorCode::BlindProtocolViolation,
                        std::string(to_string(role)) + " prompt mentions label '" + leaked.front() + "'");
    }
    OracleRequest r;
    r.role = role;
    r.request_id = std::move(request_id);
    r.prompt = std::move(prompt);
    r.attachments = std::move(attachments);
    r.temperature = temperature;
    if (role != OracleRole::AnnotatorRadar) r.answer_labels = labels.names();
    return r;
}

// ---------------------------------------------------------------------------------------------
// Scripted backend

std::string encode_script(const std::vector<ScriptRecord>& records)
{
    std::string out;
    for (const auto& r : records) {
        nlohmann::json j;
        if (!r.request_id.empty()) j["request_id"] = r.request_id;
        if (!r.role.empty()) j["role"] = r.role;
        if (!r.error.empty())
            j["error"] = r.error;
        else
            j["response"] = r.response;
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<ScriptRecord> decode_script(const std::string& jsonl)
{
    std::vector<ScriptRecord> records;
    std::istringstream is(jsonl);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ScriptRecord r;
            r.request_id = j.value("request_id", "");
            r.role = j.value("role", "");
            r.response = j.value("response", "");
            r.error = j.value("error", "");
            if (r.request_id.empty() && r.role.empty()) throw Error(ErrorCode::FormatError, "record has neither request_id nor role");
            records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::FormatError, "transcript line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptRecord> records)
{
    for (auto& r : records) {
        if (!r.request_id.empty())
            by_id_[r.request_id] = r;
        else
            by_role_[r.role] = r;
    }
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open transcript " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), {});
    return std::make_shared<ScriptedBackend>(decode_script(text));
}

const ScriptRecord* ScriptedBackend::lookup(const OracleRequest& request) const
{
    if (auto it = by_id_.find(request.request_id); it != by_id_.end()) return &it->second;
    if (!request.fallback_id.empty())
        if (auto it = by_id_.find(request.fallback_id); it != by_id_.end()) return &it->second;
    if (auto it = by_role_.find(to_string(request.role)); it != by_role_.end()) return &it->second;
    return nullptr;
}

std::string ScriptedBackend::query(const OracleRequest& request)
{
    const ScriptRecord* rec = lookup(request);
    std::string outcome = rec == nullptr ? "error:missing" : rec->error.empty() ? rec->response : "error:" + rec->error;
    {
        std::lock_guard lock(mutex_);
        transcript_.emplace_back(request.request_id, outcome);
    }
    if (rec == nullptr) throw Error(ErrorCode::TransportError, "no scripted response for '" + request.request_id + "'");
    if (rec->error == "timeout") throw Error(ErrorCode::Timeout, "scripted timeout for '" + request.request_id + "'");
    if (rec->error == "rate_limited") throw Error(ErrorCode::RateLimited, "scripted rate limit for '" + request.request_id + "'");
    if (!rec->error.empty()) throw Error(ErrorCode::TransportError, "scripted failure for '" + request.request_id + "'");
    return rec->response;
}

std::vector<std::pair<std::string, std::string>> ScriptedBackend::transcript() const
{
    std::lock_guard lock(mutex_);
    return transcript_;
}

// ---------------------------------------------------------------------------------------------
// HTTP backend

nlohmann::json build_chat_payload(const OracleRequest& request, const std::string& model)
{
    std::string system = "You are the " + std::string(to_string(request.role)) +
                         " of a radar activity-recognition pipeline. Answer with exactly one fenced JSON object.";
    if (!request.answer_labels.empty()) {
        system += " Allowed activity labels:";
        for (const auto& l : request.answer_labels) system += " \"" + l + "\"";
        system += ".";
    }
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", request.prompt}});
    for (const auto& a : request.attachments) {
        const std::string raw(a.bytes.begin(), a.bytes.end());
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", "data:" + a.mime + ";base64," + httplib::detail::base64_encode(raw)}}}});
    }
    return {{"model", model},
            {"temperature", request.temperature},
            {"messages", nlohmann::json::array({{{"role", "system"}, {"content", system}},
                                                {{"role", "user"}, {"content", content}}})}};
}

std::string extract_chat_text(const std::string& body)
{
    try {
        const auto j = nlohmann::json::parse(body);
        const auto& msg = j.at("choices").at(0).at("message").at("content");
        if (msg.is_string()) return msg.get<std::string>();
        std::string text;
        for (const auto& part : msg)
            if (part.value("type", "") == "text") text += part.value("text", "");
        return text;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed chat response: ") + e.what());
    }
}

HttpBackend::HttpBackend(HttpOracleConfig cfg) : cfg_(std::move(cfg)), slots_(std::max(1, cfg_.max_in_flight))
{
    const auto scheme = cfg_.endpoint.find("://");
    if (scheme == std::string::npos) throw Error(ErrorCode::ConfigError, "endpoint must be an http(s) URL: " + cfg_.endpoint);
    const auto slash = cfg_.endpoint.find('/', scheme + 3);
    base_ = cfg_.endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : cfg_.endpoint.substr(slash);
}

std::string HttpBackend::query(const OracleRequest& request)
{
    struct Slot {
        std::counting_semaphore<1024>& s;
        explicit Slot(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
        ~Slot() { s.release(); }
    } slot(slots_);

    const std::string body = build_chat_payload(request, cfg_.model).dump();
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    const auto secs = static_cast<time_t>(cfg_.timeout_s);
    const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);

    ErrorCode last = ErrorCode::TransportError;
    std::string detail;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(cfg_.backoff_ms) << (attempt - 1)));
        ++attempts_;
        httplib::Client client(base_);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        const auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            const auto err = res.error();
            last = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ? ErrorCode::Timeout
                                                                                          : ErrorCode::TransportError;
            detail = httplib::to_string(err);
            continue;
        }
        if (res->status == 200) return extract_chat_text(res->body);
        detail = "HTTP " + std::to_string(res->status);
        if (res->status == 401 || res->status == 403) throw Error(ErrorCode::AuthError, detail + " from " + cfg_.endpoint);
        if (res->status == 429) {
            last = ErrorCode::RateLimited;
            continue;
        }
        if (res->status >= 500) {
            last = ErrorCode::TransportError;
            continue;
        }
        throw Error(ErrorCode::TransportError, detail + " from " + cfg_.endpoint);
    }
    throw Error(last, detail + " after " + std::to_string(cfg_.retries + 1) + " attempts to " + cfg_.endpoint);
}

// ---------------------------------------------------------------------------------------------
// Structured output parsing

namespace {

std::string candidate_block(const std::string& text)
{
    const auto open = text.find("```");
    if (open != std::string::npos) {
        const auto line_end = text.find('\n', open);
        if (line_end == std::string::npos) throw Error(ErrorCode::ParseError, "unterminated fenced block");
        const auto close = text.find("```", line_end);
        if (close == std::string::npos) throw Error(ErrorCode::ParseError, "unterminated fenced block");
        return text.substr(line_end + 1, close - line_end - 1);
    }
    const auto start = text.find('{');
    if (start == std::string::npos) throw Error(ErrorCode::ParseError, "no object in response");
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t k = start; k < text.size(); ++k) {
        const char c = text[k];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        if (c == '{') ++depth;
        if (c == '}' && --depth == 0) return text.substr(start, k - start + 1);
    }
    throw Error(ErrorCode::ParseError, "unbalanced object in response");
}

nlohmann::json parse_object(const std::string& text, std::vector<std::string>* duplicate_keys)
{
    const std::string block = candidate_block(text);
    std::map<std::string, int> seen;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(block, [&](int depth, nlohmann::json::parse_event_t ev, nlohmann::json& parsed) {
            if (depth == 1 && ev == nlohmann::json::parse_event_t::key && parsed.is_string())
                ++seen[parsed.get<std::string>()];
            return true;
        });
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed object: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "response block is not an object");
    if (duplicate_keys)
        for (const auto& [k, n] : seen)
            if (n > 1) duplicate_keys->push_back(k);
    return j;
}

std::string vocab_field(const nlohmann::json& obj, const std::string& field, const Vocabulary& vocab)
{
    if (!obj.contains(field)) throw Error(ErrorCode::ParseError, "missing field '" + field + "'");
    if (!obj.at(field).is_string()) throw Error(ErrorCode::ParseError, "field '" + field + "' is not a string");
    const std::string v = to_lower(trim(obj.at(field).get<std::string>()));
    if (!vocab.allows(field, v)) throw Error(ErrorCode::VocabError, "field '" + field + "' has value '" + v + "' outside its vocabulary");
    return v;
}

std::string resolve_label(const std::string& raw, const LabelSet& labels)
{
    if (auto c = labels.canonical(raw)) return *c;
    if (labels.mentioned_in(raw).size() > 1) throw Error(ErrorCode::MultiLabelError, "label '" + raw + "' names several classes");
    throw Error(ErrorCode::VocabError, "label '" + raw + "' is outside the label set");
}

}  // namespace

nlohmann::json extract_object(const std::string& text) { return parse_object(text, nullptr); }

StructuredVote parse_vote(const std::string& text, const LabelSet& labels, const Vocabulary& vocab)
{
    std::vector<std::string> dups;
    const auto obj = parse_object(text, &dups);
    if (std::find(dups.begin(), dups.end(), "label") != dups.end())
        throw Error(ErrorCode::MultiLabelError, "response carries more than one label field");
    if (!obj.contains("label")) throw Error(ErrorCode::ParseError, "missing field 'label'");

    StructuredVote vote;
    const auto& lab = obj.at("label");
    if (lab.is_array()) {
        if (lab.size() > 1) throw Error(ErrorCode::MultiLabelError, "response lists " + std::to_string(lab.size()) + " labels");
        if (lab.empty() || !lab[0].is_string()) throw Error(ErrorCode::ParseError, "label list is empty or not text");
        vote.label = resolve_label(lab[0].get<std::string>(), labels);
    } else if (lab.is_string()) {
        vote.label = resolve_label(lab.get<std::string>(), labels);
    } else {
        throw Error(ErrorCode::ParseError, "label is not a string");
    }

    const auto& ev = obj.contains("evidence") && obj.at("evidence").is_object() ? obj.at("evidence") : obj;
    for (std::string_view f : kEvidenceFields) vote.evidence.field(f) = vocab_field(ev, std::string(f), vocab);
    return vote;
}

RadarCueReport parse_radar_cues(const std::string& text, const Vocabulary& vocab)
{
    const auto obj = parse_object(text, nullptr);
    RadarCueReport r;
    if (obj.contains("description")) {
        if (!obj.at("description").is_string()) throw Error(ErrorCode::ParseError, "description is not a string");
        r.description = obj.at("description").get<std::string>();
    }
    r.temporal_pattern = vocab_field(obj, "temporal_pattern", vocab);
    r.range_motion = vocab_field(obj, "range_motion", vocab);
    return r;
}

ObserverReport parse_observer(const std::string& text, const LabelSet& labels, const Vocabulary& vocab)
{
    const auto obj = parse_object(text, nullptr);
    if (!obj.contains("hypotheses") || !obj.at("hypotheses").is_array())
        throw Error(ErrorCode::ParseError, "missing hypotheses list");
    ObserverReport r;
    for (const auto& h : obj.at("hypotheses")) {
        if (!h.is_string()) throw Error(ErrorCode::ParseError, "hypothesis is not a string");
        const std::string label = resolve_label(h.get<std::string>(), labels);
        if (std::find(r.hypotheses.begin(), r.hypotheses.end(), label) == r.hypotheses.end()) r.hypotheses.push_back(label);
    }
    if (r.hypotheses.size() > 3) r.hypotheses.resize(3);
    r.ambiguity = vocab_field(obj, "ambiguity", vocab);
    return r;
}

std::string fenced(const nlohmann::json& object) { return "```json\n" + object.dump() + "\n```"; }

}  // namespace ragent
