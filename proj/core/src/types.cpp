#include "emowb/types.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <set>

#include "emowb/error.hpp"

namespace emowb {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::conflict: return "conflict";
        case ErrorCode::invalid_input: return "invalid_input";
        case ErrorCode::illegal_transition: return "illegal_transition";
        case ErrorCode::provider_failure: return "provider_failure";
    }
    return "invalid_input";
}

std::string_view to_string(ModalityKind kind) {
    switch (kind) {
        case ModalityKind::au: return "au";
        case ModalityKind::skeleton: return "skeleton";
        case ModalityKind::bvp: return "bvp";
        case ModalityKind::hr: return "hr";
        case ModalityKind::eda: return "eda";
        case ModalityKind::imu: return "imu";
    }
    return "au";
}

ModalityKind modality_from_string(std::string_view text) {
    for (auto kind : {ModalityKind::au, ModalityKind::skeleton, ModalityKind::bvp,
                      ModalityKind::hr, ModalityKind::eda, ModalityKind::imu}) {
        if (to_string(kind) == text) return kind;
    }
    fail(ErrorCode::invalid_input, "unknown modality kind '" + std::string(text) + "'");
}

bool is_physio(ModalityKind kind) {
    return kind == ModalityKind::bvp || kind == ModalityKind::hr || kind == ModalityKind::eda ||
           kind == ModalityKind::imu;
}

std::string_view to_string(VideoKind kind) {
    switch (kind) {
        case VideoKind::face_avatar: return "face_avatar";
        case VideoKind::first_person: return "first_person";
        case VideoKind::rendered_signal: return "rendered_signal";
    }
    return "face_avatar";
}

VideoKind video_kind_from_string(std::string_view text) {
    for (auto kind : {VideoKind::face_avatar, VideoKind::first_person, VideoKind::rendered_signal}) {
        if (to_string(kind) == text) return kind;
    }
    fail(ErrorCode::invalid_input, "unknown video kind '" + std::string(text) + "'");
}

const StreamEntry* SessionMeta::find_stream(std::string_view id) const {
    auto it = std::find_if(streams.begin(), streams.end(),
                           [&](const StreamEntry& e) { return e.stream_id == id; });
    return it == streams.end() ? nullptr : &*it;
}

const VideoTrackRef* SessionMeta::find_video(std::string_view id) const {
    auto it = std::find_if(videos.begin(), videos.end(),
                           [&](const VideoTrackRef& v) { return v.video_id == id; });
    return it == videos.end() ? nullptr : &*it;
}

namespace {

void require_identifier(const std::string& value, const char* what) {
    if (value.empty()) fail(ErrorCode::invalid_input, std::string(what) + " must not be empty");
    for (char c : value) {
        bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
        if (!ok || value == "." || value == "..") {
            fail(ErrorCode::invalid_input,
                 std::string(what) + " '" + value + "' may only contain [A-Za-z0-9_.-]");
        }
    }
}

}  // namespace

void validate(const SessionMeta& meta, std::span<const std::string> scenes) {
    require_identifier(meta.session_id, "session_id");
    require_identifier(meta.participant_id, "participant_id");
    require_identifier(meta.scene_id, "scene_id");
    if (!scenes.empty() && std::find(scenes.begin(), scenes.end(), meta.scene_id) == scenes.end()) {
        fail(ErrorCode::invalid_input, "scene_id '" + meta.scene_id + "' is not a configured scene");
    }
    std::set<std::string> ids;
    for (const auto& s : meta.streams) {
        require_identifier(s.stream_id, "stream_id");
        if (!(s.declared_rate_hz > 0.0) || !std::isfinite(s.declared_rate_hz)) {
            fail(ErrorCode::invalid_input, "stream '" + s.stream_id + "' declared_rate_hz must be > 0");
        }
        if (!ids.insert(s.stream_id).second) {
            fail(ErrorCode::invalid_input, "duplicate stream/video id '" + s.stream_id + "'");
        }
    }
    for (const auto& v : meta.videos) {
        require_identifier(v.video_id, "video_id");
        if (!(v.fps > 0.0) || !std::isfinite(v.fps)) {
            fail(ErrorCode::invalid_input, "video '" + v.video_id + "' fps must be > 0");
        }
        if (v.frame_count < 0) {
            fail(ErrorCode::invalid_input, "video '" + v.video_id + "' frame_count must be >= 0");
        }
        if (v.kind == VideoKind::rendered_signal) {
            if (!v.source_stream_id || !meta.find_stream(*v.source_stream_id)) {
                fail(ErrorCode::invalid_input,
                     "rendered_signal video '" + v.video_id + "' must name a source stream in the session");
            }
        }
        if (!ids.insert(v.video_id).second) {
            fail(ErrorCode::invalid_input, "duplicate stream/video id '" + v.video_id + "'");
        }
    }
}

std::vector<double> SignalStream::column(std::size_t col) const {
    std::vector<double> out(size());
    for (std::size_t r = 0; r < size(); ++r) out[r] = at(r, col);
    return out;
}

std::size_t SignalStream::channel_index(std::string_view name) const {
    for (std::size_t i = 0; i < channel_names.size(); ++i) {
        if (channel_names[i] == name) return i;
    }
    fail(ErrorCode::not_found,
         "stream '" + stream_id + "' has no channel '" + std::string(name) + "'");
}

bool SignalStream::row_has_gap(std::size_t row) const {
    for (std::size_t c = 0; c < channels(); ++c) {
        if (std::isnan(at(row, c))) return true;
    }
    return false;
}

bool SignalStream::operator==(const SignalStream& other) const {
    if (stream_id != other.stream_id || modality != other.modality ||
        channel_names != other.channel_names || timestamps_ms != other.timestamps_ms ||
        values.size() != other.values.size() || rate_hz != other.rate_hz) {
        return false;
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        // NaN gap cells compare equal to each other
        if (std::isnan(values[i]) ? !std::isnan(other.values[i]) : values[i] != other.values[i]) return false;
    }
    return true;
}

void validate(const SignalStream& stream) {
    if (stream.values.size() != stream.size() * stream.channels()) {
        fail(ErrorCode::invalid_input, "stream '" + stream.stream_id + "' value matrix shape mismatch");
    }
    if (stream.channels() == 0) {
        fail(ErrorCode::invalid_input, "stream '" + stream.stream_id + "' has no channels");
    }
    for (std::size_t i = 1; i < stream.size(); ++i) {
        if (stream.timestamps_ms[i] <= stream.timestamps_ms[i - 1]) {
            fail(ErrorCode::invalid_input, "stream '" + stream.stream_id + "' timestamps are non-monotonic");
        }
    }
    for (double v : stream.values) {
        if (std::isinf(v)) {
            fail(ErrorCode::invalid_input, "stream '" + stream.stream_id + "' contains infinite values");
        }
    }
    if (!(stream.rate_hz > 0.0)) {
        fail(ErrorCode::invalid_input, "stream '" + stream.stream_id + "' rate_hz must be > 0");
    }
}

void to_json(nlohmann::json& j, const StreamEntry& e) {
    j = {{"stream_id", e.stream_id},
         {"modality_kind", to_string(e.modality)},
         {"declared_rate_hz", e.declared_rate_hz},
         {"source_path", e.source_path}};
    if (e.time_offset_ms != 0) j["time_offset_ms"] = e.time_offset_ms;
}

void from_json(const nlohmann::json& j, StreamEntry& e) {
    e.stream_id = j.at("stream_id").get<std::string>();
    e.modality = modality_from_string(j.at("modality_kind").get<std::string>());
    e.declared_rate_hz = j.at("declared_rate_hz").get<double>();
    e.source_path = j.value("source_path", std::string{});
    e.time_offset_ms = j.value("time_offset_ms", Millis{0});
}

void to_json(nlohmann::json& j, const VideoTrackRef& v) {
    j = {{"video_id", v.video_id},   {"uri", v.uri},
         {"fps", v.fps},             {"frame_count", v.frame_count},
         {"offset_ms", v.offset_ms}, {"kind", to_string(v.kind)}};
    if (v.source_stream_id) j["source_stream_id"] = *v.source_stream_id;
}

void from_json(const nlohmann::json& j, VideoTrackRef& v) {
    v.video_id = j.at("video_id").get<std::string>();
    v.uri = j.value("uri", std::string{});
    v.fps = j.at("fps").get<double>();
    v.frame_count = j.at("frame_count").get<std::int64_t>();
    v.offset_ms = j.value("offset_ms", Millis{0});
    v.kind = video_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("source_stream_id") && !j["source_stream_id"].is_null()) {
        v.source_stream_id = j["source_stream_id"].get<std::string>();
    } else {
        v.source_stream_id.reset();
    }
}

void to_json(nlohmann::json& j, const SessionMeta& m) {
    j = {{"session_id", m.session_id},
         {"participant_id", m.participant_id},
         {"scene_id", m.scene_id},
         {"recording_epoch_ms", m.recording_epoch_ms},
         {"stream_manifest", m.streams},
         {"video_manifest", m.videos}};
}

void from_json(const nlohmann::json& j, SessionMeta& m) {
    m.session_id = j.at("session_id").get<std::string>();
    m.participant_id = j.at("participant_id").get<std::string>();
    m.scene_id = j.at("scene_id").get<std::string>();
    m.recording_epoch_ms = j.value("recording_epoch_ms", Millis{0});
    m.streams = j.value("stream_manifest", std::vector<StreamEntry>{});
    m.videos = j.value("video_manifest", std::vector<VideoTrackRef>{});
}

void to_json(nlohmann::json& j, const Interval& i) {
    j = {{"start_ms", i.start_ms}, {"end_ms", i.end_ms}};
}

void from_json(const nlohmann::json& j, Interval& i) {
    i.start_ms = j.at("start_ms").get<Millis>();
    i.end_ms = j.at("end_ms").get<Millis>();
}

}  // namespace emowb
