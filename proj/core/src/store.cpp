#include "emowb/store.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "emowb/digest.hpp"
#include "emowb/error.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;

namespace emowb {

std::string_view to_string(BlobKind kind) {
    switch (kind) {
        case BlobKind::stream: return "stream";
        case BlobKind::report: return "report";
        case BlobKind::index: return "index";
        case BlobKind::events: return "events";
        case BlobKind::packets: return "packets";
        case BlobKind::annotations: return "annotations";
        case BlobKind::export_file: return "export";
    }
    return "stream";
}

BlobKind blob_kind_from_string(std::string_view text) {
    for (auto kind : {BlobKind::stream, BlobKind::report, BlobKind::index, BlobKind::events,
                      BlobKind::packets, BlobKind::annotations, BlobKind::export_file}) {
        if (to_string(kind) == text) return kind;
    }
    fail(ErrorCode::invalid_input, "unknown blob kind '" + std::string(text) + "'");
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    static std::atomic<unsigned> counter{0};
    fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
           std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::invalid_input, "cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorCode::invalid_input, "short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::not_found, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SessionStore::SessionStore(fs::path root, std::vector<std::string> scenes)
    : root_(std::move(root)), scenes_(std::move(scenes)) {
    fs::create_directories(root_);
    reload();
}

void SessionStore::reload() {
    std::map<std::string, SessionMeta, std::less<>> found;
    for (const auto& participant : fs::directory_iterator(root_)) {
        if (!participant.is_directory()) continue;
        for (const auto& scene : fs::directory_iterator(participant.path())) {
            if (!scene.is_directory()) continue;
            for (const auto& session : fs::directory_iterator(scene.path())) {
                auto meta_path = session.path() / "meta.json";
                if (!fs::exists(meta_path)) continue;
                auto meta = nlohmann::json::parse(read_file(meta_path)).get<SessionMeta>();
                found.emplace(meta.session_id, std::move(meta));
            }
        }
    }
    std::unique_lock lock(catalog_mutex_);
    catalog_ = std::move(found);
}

std::recursive_mutex& SessionStore::session_mutex(std::string_view session_id) const {
    std::lock_guard lock(locks_mutex_);
    auto it = session_locks_.find(session_id);
    if (it == session_locks_.end()) {
        it = session_locks_.emplace(std::string(session_id), std::make_unique<std::recursive_mutex>()).first;
    }
    return *it->second;
}

std::unique_lock<std::recursive_mutex> SessionStore::lock_session(std::string_view session_id) const {
    return std::unique_lock(session_mutex(session_id));
}

const SessionMeta& SessionStore::meta_locked(std::string_view session_id) const {
    auto it = catalog_.find(session_id);
    if (it == catalog_.end()) fail(ErrorCode::not_found, "unknown session '" + std::string(session_id) + "'");
    return it->second;
}

std::string SessionStore::put_session(const SessionMeta& meta) {
    validate(meta, scenes_);
    auto write_lock = lock_session(meta.session_id);
    {
        std::shared_lock lock(catalog_mutex_);
        auto it = catalog_.find(meta.session_id);
        if (it != catalog_.end()) {
            if (it->second == meta) return meta.session_id;
            fail(ErrorCode::conflict, "session '" + meta.session_id + "' already exists with a different payload");
        }
    }
    auto dir = root_ / meta.participant_id / meta.scene_id / meta.session_id;
    write_file_atomic(dir / "meta.json", dump_pretty(nlohmann::json(meta)));
    std::unique_lock lock(catalog_mutex_);
    catalog_.emplace(meta.session_id, meta);
    return meta.session_id;
}

SessionMeta SessionStore::get_session(std::string_view session_id) const {
    std::shared_lock lock(catalog_mutex_);
    return meta_locked(session_id);
}

bool SessionStore::has_session(std::string_view session_id) const {
    std::shared_lock lock(catalog_mutex_);
    return catalog_.find(session_id) != catalog_.end();
}

std::vector<SessionMeta> SessionStore::list_sessions(const SessionFilter& filter) const {
    std::vector<SessionMeta> out;
    {
        std::shared_lock lock(catalog_mutex_);
        for (const auto& [id, meta] : catalog_) {
            if (filter.participant_id && meta.participant_id != *filter.participant_id) continue;
            if (filter.scene_id && meta.scene_id != *filter.scene_id) continue;
            out.push_back(meta);
        }
    }
    std::sort(out.begin(), out.end(), [](const SessionMeta& a, const SessionMeta& b) {
        return std::tie(a.participant_id, a.scene_id, a.session_id) <
               std::tie(b.participant_id, b.scene_id, b.session_id);
    });
    return out;
}

fs::path SessionStore::session_dir(std::string_view session_id) const {
    std::shared_lock lock(catalog_mutex_);
    const auto& meta = meta_locked(session_id);
    return root_ / meta.participant_id / meta.scene_id / meta.session_id;
}

fs::path SessionStore::blob_path(BlobKind kind, std::string_view session_id, std::string_view name) const {
    auto dir = session_dir(session_id);
    auto require_name = [&] {
        if (name.empty()) fail(ErrorCode::invalid_input, std::string(to_string(kind)) + " blob needs a stream id");
        if (name.find('/') != std::string_view::npos || name == ".." || name == ".") {
            fail(ErrorCode::invalid_input, "invalid blob name '" + std::string(name) + "'");
        }
    };
    switch (kind) {
        case BlobKind::stream: require_name(); return dir / "streams" / (std::string(name) + ".tsv");
        case BlobKind::report: require_name(); return dir / "streams" / (std::string(name) + ".report.json");
        case BlobKind::index: return dir / "index.json";
        case BlobKind::events: return dir / "events.json";
        case BlobKind::packets: return dir / "packets.json";
        case BlobKind::annotations: return dir / "annotations.json";
        case BlobKind::export_file: return dir / "export.jsonl";
    }
    fail(ErrorCode::invalid_input, "unknown blob kind");
}

namespace {

std::string revision_key(BlobKind kind, std::string_view name) {
    std::string key(to_string(kind));
    if (!name.empty()) key += ":" + std::string(name);
    return key;
}

}  // namespace

void SessionStore::put_blob(BlobKind kind, std::string_view session_id, std::string_view payload,
                            std::string_view name) {
    auto lock = lock_session(session_id);
    auto path = blob_path(kind, session_id, name);
    if (fs::exists(path) && read_file(path) == payload) return;

    auto rev_path = session_dir(session_id) / "revisions.json";
    nlohmann::json revisions = fs::exists(rev_path) ? nlohmann::json::parse(read_file(rev_path))
                                                    : nlohmann::json::object();
    auto key = revision_key(kind, name);
    revisions[key] = revisions.value(key, std::uint64_t{0}) + 1;

    write_file_atomic(path, payload);
    write_file_atomic(rev_path, dump_pretty(revisions));
}

std::string SessionStore::get_blob(BlobKind kind, std::string_view session_id, std::string_view name) const {
    auto path = blob_path(kind, session_id, name);
    if (!fs::exists(path)) {
        fail(ErrorCode::not_found, std::string(to_string(kind)) + " blob not found for session '" +
                                       std::string(session_id) + "'");
    }
    return read_file(path);
}

bool SessionStore::has_blob(BlobKind kind, std::string_view session_id, std::string_view name) const {
    return fs::exists(blob_path(kind, session_id, name));
}

std::uint64_t SessionStore::revision(BlobKind kind, std::string_view session_id, std::string_view name) const {
    auto rev_path = session_dir(session_id) / "revisions.json";
    if (!fs::exists(rev_path)) return 0;
    auto revisions = nlohmann::json::parse(read_file(rev_path));
    return revisions.value(revision_key(kind, name), std::uint64_t{0});
}

void SessionStore::put_stream(std::string_view session_id, const SignalStream& stream) {
    auto meta = get_session(session_id);
    if (!meta.find_stream(stream.stream_id)) {
        fail(ErrorCode::invalid_input,
             "stream '" + stream.stream_id + "' is not in the manifest of session '" + std::string(session_id) + "'");
    }
    put_blob(BlobKind::stream, session_id, write_stream_tsv(stream), stream.stream_id);
}

SignalStream SessionStore::get_stream(std::string_view session_id, std::string_view stream_id) const {
    auto meta = get_session(session_id);
    const auto* entry = meta.find_stream(stream_id);
    if (!entry) {
        fail(ErrorCode::not_found, "unknown stream '" + std::string(stream_id) + "'");
    }
    return read_stream_tsv(get_blob(BlobKind::stream, session_id, stream_id), *entry);
}

std::string write_stream_tsv(const SignalStream& stream) {
    std::string out = "t_ms";
    for (const auto& name : stream.channel_names) out += "\t" + name;
    out += "\n";
    for (std::size_t r = 0; r < stream.size(); ++r) {
        out += std::to_string(stream.timestamps_ms[r]);
        for (std::size_t c = 0; c < stream.channels(); ++c) {
            out += "\t";
            out += format_double(stream.at(r, c));
        }
        out += "\n";
    }
    return out;
}

SignalStream read_stream_tsv(std::string_view text, const StreamEntry& entry) {
    auto rows = detail::lines(text);
    if (rows.empty()) fail(ErrorCode::invalid_input, "stream tsv is empty");
    auto header = detail::split(rows[0], '\t');
    if (header.empty() || detail::trim(header[0]) != "t_ms") {
        fail(ErrorCode::invalid_input, "stream tsv header must start with t_ms");
    }
    SignalStream s;
    s.stream_id = entry.stream_id;
    s.modality = entry.modality;
    s.rate_hz = entry.declared_rate_hz;
    for (std::size_t i = 1; i < header.size(); ++i) s.channel_names.emplace_back(detail::trim(header[i]));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        auto cells = detail::split(rows[r], '\t');
        if (cells.size() != header.size()) fail(ErrorCode::invalid_input, "stream tsv row has wrong column count");
        auto t = detail::parse_millis(cells[0]);
        if (!t) fail(ErrorCode::invalid_input, "stream tsv has a bad timestamp");
        s.timestamps_ms.push_back(*t);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (detail::is_nan_token(cells[c])) {
                s.values.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            auto v = detail::parse_finite(cells[c]);
            if (!v) fail(ErrorCode::invalid_input, "stream tsv has a bad value");
            s.values.push_back(*v);
        }
    }
    validate(s);
    return s;
}

}  // namespace emowb
