#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emowb/events.hpp"
#include "emowb/timeline.hpp"

namespace emowb {

enum class PacketState { candidate, verified, edited, discarded };

std::string_view to_string(PacketState state);
PacketState packet_state_from_string(std::string_view text);

struct StreamPointer {
    std::string stream_id;
    ModalityKind modality = ModalityKind::au;
    WindowRef ref;

    bool operator==(const StreamPointer&) const = default;
};

struct Keyframe {
    std::string video_id;
    VideoKind kind = VideoKind::face_avatar;
    Millis t_ms = 0;
    std::int64_t frame_index = 0;
    bool clamped = false;  // t_ms fell outside the video

    bool operator==(const Keyframe&) const = default;
};

enum class PacketActionKind { verify, edit, discard, restore };

std::string_view to_string(PacketActionKind kind);
PacketActionKind packet_action_from_string(std::string_view text);

struct PacketAction {
    PacketActionKind kind = PacketActionKind::verify;
    std::optional<Interval> new_boundary;  // edit only
    std::string note;

    static PacketAction verify() { return {PacketActionKind::verify, std::nullopt, {}}; }
    static PacketAction discard() { return {PacketActionKind::discard, std::nullopt, {}}; }
    static PacketAction restore() { return {PacketActionKind::restore, std::nullopt, {}}; }
    static PacketAction edit(Interval boundary, std::string note = {}) {
        return {PacketActionKind::edit, boundary, std::move(note)};
    }
};

struct EditLogEntry {
    Millis timestamp_ms = 0;  // wall clock of the analyst action
    PacketActionKind action = PacketActionKind::verify;
    Interval old_boundary;
    Interval new_boundary;
    std::string note;

    bool operator==(const EditLogEntry&) const = default;
};

/// Reference from a packet to the multimodal annotation drafted for it.
struct AnnotationBackref {
    std::string annotation_id;
    std::string emotion_descriptor;

    bool operator==(const AnnotationBackref&) const = default;
};

struct EventPacket {
    std::string packet_id;
    EventGroup group;
    std::vector<StreamPointer> pointers;  // one per session stream, index order
    std::vector<Keyframe> keyframes;      // one per session video, at anchor_ms
    PacketState state = PacketState::candidate;
    Interval boundary;
    Millis anchor_ms = 0;  // group anchor clamped into the boundary
    std::vector<EditLogEntry> edit_log;
    std::optional<AnnotationBackref> annotation;

    const StreamPointer* pointer_for(std::string_view stream_id) const;
    const Keyframe* keyframe_for(std::string_view video_id) const;
    bool operator==(const EventPacket&) const = default;
};

void to_json(nlohmann::json& j, const EventPacket& p);
void from_json(const nlohmann::json& j, EventPacket& p);

EventPacket build_packet(const EventGroup& group, const AlignmentIndex& index);

/// Boundary-dependent fields (anchor, pointers, keyframes) re-derived from the index.
void derive_pointers(EventPacket& packet, const AlignmentIndex& index);

bool is_legal(PacketState from, PacketActionKind action);

/// Validates the transition, applies it and appends to edit_log.
EventPacket apply_action(const EventPacket& packet, const PacketAction& action, const AlignmentIndex& index,
                         Millis now_ms);

/// Re-applies every logged action to `initial`.
EventPacket replay_edit_log(const EventPacket& initial, const std::vector<EditLogEntry>& log,
                            const AlignmentIndex& index);

std::vector<EventPacket> build_packets(const EventLayer& layer, const AlignmentIndex& index);

}  // namespace emowb
