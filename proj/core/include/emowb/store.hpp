#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "emowb/types.hpp"

namespace emowb {

/// Payload slots per session. `stream` and `report` are keyed by stream id;
/// the others are singletons.
enum class BlobKind { stream, report, index, events, packets, annotations, export_file };

std::string_view to_string(BlobKind kind);
BlobKind blob_kind_from_string(std::string_view text);

struct SessionFilter {
    std::optional<std::string> participant_id;
    std::optional<std::string> scene_id;
};

/// Directory-per-session store:
///
///   <root>/<participant>/<scene>/<session>/
///       meta.json  index.json  events.json  packets.json  annotations.json
///       export.jsonl  revisions.json  streams/<stream_id>.tsv  streams/<stream_id>.report.json
///
/// Writes go through a temp file + rename, so readers never see a torn blob.
/// Writes to one session are serialized; different sessions write in parallel.
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path root, std::vector<std::string> scenes = {});

    SessionStore(const SessionStore&) = delete;
    SessionStore& operator=(const SessionStore&) = delete;

    const std::filesystem::path& root() const { return root_; }
    const std::vector<std::string>& scenes() const { return scenes_; }

    /// Idempotent for identical payloads; a different payload under an
    /// existing id is a conflict.
    std::string put_session(const SessionMeta& meta);
    SessionMeta get_session(std::string_view session_id) const;
    bool has_session(std::string_view session_id) const;

    /// Sorted by (participant_id, scene_id, session_id).
    std::vector<SessionMeta> list_sessions(const SessionFilter& filter = {}) const;

    /// Last writer wins. The per-blob revision only moves when bytes change.
    void put_blob(BlobKind kind, std::string_view session_id, std::string_view payload,
                  std::string_view name = {});
    std::string get_blob(BlobKind kind, std::string_view session_id, std::string_view name = {}) const;
    bool has_blob(BlobKind kind, std::string_view session_id, std::string_view name = {}) const;
    std::uint64_t revision(BlobKind kind, std::string_view session_id, std::string_view name = {}) const;

    void put_stream(std::string_view session_id, const SignalStream& stream);
    SignalStream get_stream(std::string_view session_id, std::string_view stream_id) const;

    std::filesystem::path session_dir(std::string_view session_id) const;
    std::filesystem::path blob_path(BlobKind kind, std::string_view session_id,
                                    std::string_view name = {}) const;

    /// Holds the session's writer lock for a read-modify-write sequence.
    /// Re-entrant, so put_blob may be called while it is held.
    std::unique_lock<std::recursive_mutex> lock_session(std::string_view session_id) const;

    /// Re-scan the directory tree (picks up sessions written by other processes).
    void reload();

private:
    std::recursive_mutex& session_mutex(std::string_view session_id) const;
    const SessionMeta& meta_locked(std::string_view session_id) const;

    std::filesystem::path root_;
    std::vector<std::string> scenes_;

    mutable std::shared_mutex catalog_mutex_;
    std::map<std::string, SessionMeta, std::less<>> catalog_;

    mutable std::mutex locks_mutex_;
    mutable std::map<std::string, std::unique_ptr<std::recursive_mutex>, std::less<>> session_locks_;
};

/// Columnar text codec for streams: header `t_ms<TAB>ch...`, one row per sample.
std::string write_stream_tsv(const SignalStream& stream);
SignalStream read_stream_tsv(std::string_view text, const StreamEntry& entry);

/// Writes bytes atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace emowb
