#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emowb/types.hpp"

namespace emowb {

struct StreamIndexEntry {
    std::string stream_id;
    ModalityKind modality = ModalityKind::au;
    Millis offset_ms = 0;  // first sample time
    Millis end_ms = 0;     // last sample time
    double rate_hz = 0.0;
    std::int64_t sample_count = 0;
    // Only populated when the stream is off its exact grid
    // offset + round(i * 1000 / rate); otherwise sample times are computed.
    std::vector<Millis> timestamps_ms;

    Millis sample_time(std::int64_t i) const;
    double period_ms() const { return 1000.0 / rate_hz; }

    bool operator==(const StreamIndexEntry&) const = default;
};

struct VideoIndexEntry {
    std::string video_id;
    VideoKind kind = VideoKind::face_avatar;
    std::string uri;
    Millis offset_ms = 0;
    Millis end_ms = 0;  // ceil of the last frame's time
    double fps = 0.0;
    std::int64_t frame_count = 0;

    double frame_time(std::int64_t i) const { return static_cast<double>(offset_ms) + static_cast<double>(i) * 1000.0 / fps; }
    double period_ms() const { return 1000.0 / fps; }

    bool operator==(const VideoIndexEntry&) const = default;
};

/// Unified session time axis: every stream's samples and every video's
/// frames, keyed by id.
struct AlignmentIndex {
    std::string session_id;
    Millis t0_ms = 0;
    Millis t1_ms = 0;
    std::vector<StreamIndexEntry> streams;
    std::vector<VideoIndexEntry> videos;
    std::uint64_t index_revision = 0;

    const StreamIndexEntry* find_stream(std::string_view id) const;
    const VideoIndexEntry* find_video(std::string_view id) const;

    bool operator==(const AlignmentIndex&) const = default;
};

void to_json(nlohmann::json& j, const AlignmentIndex& index);
void from_json(const nlohmann::json& j, AlignmentIndex& index);

/// Samples/frames of one target whose time lies in [start_ms, end_ms]:
/// closed on timestamps, half-open on indices.
struct WindowRef {
    std::string target_id;
    std::int64_t start_idx = 0;
    std::int64_t end_idx = 0;
    Millis start_ms = 0;
    Millis end_ms = 0;
    bool out_of_span = false;

    bool empty() const { return start_idx == end_idx; }
    bool operator==(const WindowRef&) const = default;
};

void to_json(nlohmann::json& j, const WindowRef& ref);
void from_json(const nlohmann::json& j, WindowRef& ref);

AlignmentIndex build_alignment_index(const SessionMeta& meta, const std::vector<SignalStream>& streams);

WindowRef window_to_ref(const AlignmentIndex& index, std::string_view target_id, Millis start_ms, Millis end_ms);

/// Time (ms) of sample/frame `i` of a target; fractional for video frames.
double target_time(const AlignmentIndex& index, std::string_view target_id, std::int64_t i);
double target_period_ms(const AlignmentIndex& index, std::string_view target_id);

/// clamp(floor((t - offset) * fps / 1000), 0, frame_count - 1)
std::int64_t time_to_frame(const AlignmentIndex& index, std::string_view video_id, Millis t_ms);
bool time_outside_video(const AlignmentIndex& index, std::string_view video_id, Millis t_ms);

struct EnvelopeBucket {
    Millis t_ms = 0;  // bucket start
    double min = 0.0;
    double max = 0.0;

    bool operator==(const EnvelopeBucket&) const = default;
};

void to_json(nlohmann::json& j, const EnvelopeBucket& b);

/// Per-bucket min/max of one channel. Buckets start at the window start (or
/// the first sample) and are half-open except the last, which is closed.
/// Empty buckets and NaN samples are skipped.
std::vector<EnvelopeBucket> downsample_envelope(const SignalStream& stream, std::string_view channel,
                                                Millis bucket_ms, std::optional<Interval> window = std::nullopt);

/// Row range of `stream` covered by a window (same semantics as window_to_ref).
WindowRef stream_window(const SignalStream& stream, Millis start_ms, Millis end_ms);

}  // namespace emowb
