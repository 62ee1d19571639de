#include "ragent/kb_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <sstream>

#include "ragent/error.hpp"
#include "ragent/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ragent {

KbLock::KbLock(const fs::path& dir) : path_(dir / ".lock")
{
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST) throw Error(ErrorCode::LockError, "another writer holds " + path_.string());
        throw Error(ErrorCode::IoError, "cannot create " + path_.string() + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

KbLock::~KbLock()
{
    std::error_code ec;
    fs::remove(path_, ec);
}

namespace {

void check_entry_id(const std::string& id)
{
    const bool ok = !id.empty() && id != "." && id != ".." && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    });
    if (!ok) throw Error(ErrorCode::FormatError, "entry id '" + id + "' is not usable as a file name");
}

json entry_json(const KnowledgeBaseEntry& e)
{
    return {{"entry_id", e.entry_id},
            {"pseudo_label", e.pseudo_label},
            {"s_ann", e.s_ann},
            {"valid_votes", e.valid_votes},
            {"votes_cast", e.votes_cast},
            {"status", to_string(e.status)},
            {"evidence", e.evidence},
            {"radar_description", e.radar_description},
            {"cues", e.cues},
            {"domain", {{"environment", e.domain.environment}, {"subject", e.domain.subject}, {"date", e.domain.date}}},
            {"features", e.features.values},
            {"dtm", e.entry_id + ".dtm.rgm"},
            {"rtm", e.entry_id + ".rtm.rgm"}};
}

}  // namespace

json manifest_json(const KnowledgeBase& kb)
{
    std::vector<std::string> names(feature_names().begin(), feature_names().end());
    return {{"format_version", kKbFormatVersion},
            {"label_set", kb.labels.names()},
            {"feature_schema", {{"version", std::string(kFeatureSchemaVersion)}, {"names", names}}},
            {"standardizer", {{"mean", kb.standardizer.mean()}, {"std", kb.standardizer.stddev()}}},
            {"subspace",
             {{"f_scores", kb.subspace.f_scores},
              {"selected", kb.subspace.selected},
              {"k", kb.subspace.k()},
              {"epsilon", kb.subspace.epsilon}}},
            {"entry_count", kb.entries.size()}};
}

void save_kb(const KnowledgeBase& kb, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    KbLock lock(dir);

    std::string lines;
    for (const auto& e : kb.entries) {
        check_entry_id(e.entry_id);
        io::write_matrix(dir / (e.entry_id + ".dtm.rgm"), e.dtm);
        io::write_matrix(dir / (e.entry_id + ".rtm.rgm"), e.rtm);
        lines += entry_json(e).dump() + "\n";
    }
    io::write_text(dir / "entries.jsonl", lines);
    json manifest = manifest_json(kb);
    manifest["created"] = kb.created;
    io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

KnowledgeBase load_kb(const fs::path& dir)
{
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw Error(ErrorCode::IoError, "no manifest.json in " + dir.string());

    KnowledgeBase kb;
    try {
        const json m = json::parse(io::read_text(manifest_path));
        const int version = m.at("format_version").get<int>();
        if (version != kKbFormatVersion)
            throw Error(ErrorCode::VersionError, "KB format version " + std::to_string(version) + ", expected " +
                                                     std::to_string(kKbFormatVersion));
        const std::string schema = m.at("feature_schema").at("version").get<std::string>();
        if (schema != kFeatureSchemaVersion)
            throw Error(ErrorCode::VersionError,
                        "feature schema '" + schema + "', expected '" + std::string(kFeatureSchemaVersion) + "'");
        const auto names = m.at("feature_schema").at("names").get<std::vector<std::string>>();
        if (!std::equal(names.begin(), names.end(), feature_names().begin(), feature_names().end()))
            throw Error(ErrorCode::VersionError, "feature names differ from schema " + std::string(kFeatureSchemaVersion));

        kb.labels = LabelSet(m.at("label_set").get<std::vector<std::string>>());
        kb.standardizer = FeatureStandardizer(m.at("standardizer").at("mean").get<FeatureArray>(),
                                              m.at("standardizer").at("std").get<FeatureArray>());
        const auto& sub = m.at("subspace");
        kb.subspace.f_scores = sub.at("f_scores").get<FeatureArray>();
        kb.subspace.selected = sub.at("selected").get<std::vector<std::size_t>>();
        kb.subspace.epsilon = sub.at("epsilon").get<double>();
        if (kb.subspace.selected.empty() || kb.subspace.selected.size() != sub.at("k").get<std::size_t>() ||
            std::any_of(kb.subspace.selected.begin(), kb.subspace.selected.end(), [](std::size_t j) { return j >= kFeatureDim; }))
            throw Error(ErrorCode::FormatError, "subspace selection is invalid for the schema");
        kb.created = m.value("created", "");
        const std::size_t count = m.at("entry_count").get<std::size_t>();

        std::istringstream lines(io::read_text(dir / "entries.jsonl"));
        std::string line;
        while (std::getline(lines, line)) {
            if (line.empty()) continue;
            const json r = json::parse(line);
            KnowledgeBaseEntry e;
            e.entry_id = r.at("entry_id").get<std::string>();
            check_entry_id(e.entry_id);
            e.pseudo_label = r.at("pseudo_label").get<std::string>();
            e.s_ann = r.at("s_ann").get<double>();
            e.valid_votes = r.value("valid_votes", 0);
            e.votes_cast = r.value("votes_cast", 0);
            e.status = status_from_string(r.at("status").get<std::string>());
            e.evidence = r.at("evidence").get<EvidenceProfile>();
            e.radar_description = r.value("radar_description", "");
            e.cues = r.at("cues").get<RadarCueReport>();
            const auto& d = r.at("domain");
            e.domain = {d.value("environment", ""), d.value("subject", ""), d.value("date", "")};
            e.features.values = r.at("features").get<FeatureArray>();
            e.dtm = io::read_matrix(dir / r.at("dtm").get<std::string>());
            e.rtm = io::read_matrix(dir / r.at("rtm").get<std::string>());
            kb.entries.push_back(std::move(e));
        }
        if (kb.entries.size() != count)
            throw Error(ErrorCode::FormatError, "manifest lists " + std::to_string(count) + " entries, found " +
                                                    std::to_string(kb.entries.size()));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("malformed KB metadata: ") + e.what());
    }
    return kb;
}

}  // namespace ragent
