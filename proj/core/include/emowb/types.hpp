#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace emowb {

/// Session-relative time. Everything internal is integer milliseconds
/// relative to the session's recording epoch.
using Millis = std::int64_t;

enum class ModalityKind { au, skeleton, bvp, hr, eda, imu };

std::string_view to_string(ModalityKind kind);
ModalityKind modality_from_string(std::string_view text);
bool is_physio(ModalityKind kind);

enum class VideoKind { face_avatar, first_person, rendered_signal };

std::string_view to_string(VideoKind kind);
VideoKind video_kind_from_string(std::string_view text);

struct StreamEntry {
    std::string stream_id;
    ModalityKind modality = ModalityKind::au;
    double declared_rate_hz = 0.0;
    std::string source_path;
    // Shift applied to the file's relative time column (manifest-level).
    Millis time_offset_ms = 0;

    bool operator==(const StreamEntry&) const = default;
};

struct VideoTrackRef {
    std::string video_id;
    std::string uri;
    double fps = 0.0;
    std::int64_t frame_count = 0;
    Millis offset_ms = 0;
    VideoKind kind = VideoKind::face_avatar;
    // Required for rendered_signal tracks: the stream the frames were drawn from.
    std::optional<std::string> source_stream_id;

    bool operator==(const VideoTrackRef&) const = default;
};

struct SessionMeta {
    std::string session_id;
    std::string participant_id;
    std::string scene_id;
    Millis recording_epoch_ms = 0;
    std::vector<StreamEntry> streams;
    std::vector<VideoTrackRef> videos;

    bool operator==(const SessionMeta&) const = default;

    const StreamEntry* find_stream(std::string_view id) const;
    const VideoTrackRef* find_video(std::string_view id) const;
};

/// Throws invalid_input when a SessionMeta invariant is broken. An empty
/// scene list disables the scene check.
void validate(const SessionMeta& meta, std::span<const std::string> scenes = {});

/// Timestamped multi-channel series. Values are row-major
/// (rows = samples, columns = channels); NaN marks a gap cell.
struct SignalStream {
    std::string stream_id;
    ModalityKind modality = ModalityKind::au;
    std::vector<std::string> channel_names;
    std::vector<Millis> timestamps_ms;
    std::vector<double> values;
    double rate_hz = 0.0;

    std::size_t size() const { return timestamps_ms.size(); }
    std::size_t channels() const { return channel_names.size(); }
    bool empty() const { return timestamps_ms.empty(); }

    double at(std::size_t row, std::size_t col) const { return values[row * channels() + col]; }
    double& at(std::size_t row, std::size_t col) { return values[row * channels() + col]; }

    std::vector<double> column(std::size_t col) const;
    std::size_t channel_index(std::string_view name) const;  // throws not_found
    bool row_has_gap(std::size_t row) const;

    bool operator==(const SignalStream& other) const;
};

/// Throws invalid_input when a SignalStream invariant is broken.
void validate(const SignalStream& stream);

struct Interval {
    Millis start_ms = 0;
    Millis end_ms = 0;

    bool operator==(const Interval&) const = default;
    bool overlaps(const Interval& other) const {
        return start_ms <= other.end_ms && other.start_ms <= end_ms;
    }
};

void to_json(nlohmann::json& j, const StreamEntry& e);
void from_json(const nlohmann::json& j, StreamEntry& e);
void to_json(nlohmann::json& j, const VideoTrackRef& v);
void from_json(const nlohmann::json& j, VideoTrackRef& v);
void to_json(nlohmann::json& j, const SessionMeta& m);
void from_json(const nlohmann::json& j, SessionMeta& m);
void to_json(nlohmann::json& j, const Interval& i);
void from_json(const nlohmann::json& j, Interval& i);

}  // namespace emowb
