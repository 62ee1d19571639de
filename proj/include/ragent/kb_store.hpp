#pragma once

#include <filesystem>
#include <string>

#include "ragent/kb.hpp"

namespace ragent {

inline constexpr int kKbFormatVersion = 1;

/// Exclusive writer lock on a KB directory (".lock" created with O_EXCL). Throws LockError when held.
class KbLock {
public:
    explicit KbLock(const std::filesystem::path& dir);
    ~KbLock();
    KbLock(const KbLock&) = delete;
    KbLock& operator=(const KbLock&) = delete;

private:
    std::filesystem::path path_;
};

/// Writes manifest.json, entries.jsonl and <id>.dtm.rgm / <id>.rtm.rgm. Throws IoError, LockError.
void save_kb(const KnowledgeBase& kb, const std::filesystem::path& dir);

/// Throws IoError, FormatError (bad layout or matrix header) or VersionError (format/schema mismatch).
KnowledgeBase load_kb(const std::filesystem::path& dir);

/// Manifest without the timestamp, for semantic comparison of two stores.
nlohmann::json manifest_json(const KnowledgeBase& kb);

}  // namespace ragent
