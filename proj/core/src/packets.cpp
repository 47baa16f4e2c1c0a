#include "emowb/packets.hpp"

#include <algorithm>

#include "emowb/error.hpp"

namespace emowb {

std::string_view to_string(PacketState state) {
    switch (state) {
        case PacketState::candidate: return "candidate";
        case PacketState::verified: return "verified";
        case PacketState::edited: return "edited";
        case PacketState::discarded: return "discarded";
    }
    return "candidate";
}

PacketState packet_state_from_string(std::string_view text) {
    for (auto s : {PacketState::candidate, PacketState::verified, PacketState::edited, PacketState::discarded}) {
        if (to_string(s) == text) return s;
    }
    fail(ErrorCode::invalid_input, "unknown packet state '" + std::string(text) + "'");
}

std::string_view to_string(PacketActionKind kind) {
    switch (kind) {
        case PacketActionKind::verify: return "verify";
        case PacketActionKind::edit: return "edit";
        case PacketActionKind::discard: return "discard";
        case PacketActionKind::restore: return "restore";
    }
    return "verify";
}

PacketActionKind packet_action_from_string(std::string_view text) {
    for (auto a : {PacketActionKind::verify, PacketActionKind::edit, PacketActionKind::discard,
                   PacketActionKind::restore}) {
        if (to_string(a) == text) return a;
    }
    fail(ErrorCode::invalid_input, "unknown packet action '" + std::string(text) + "'");
}

const StreamPointer* EventPacket::pointer_for(std::string_view stream_id) const {
    auto it = std::find_if(pointers.begin(), pointers.end(), [&](const auto& p) { return p.stream_id == stream_id; });
    return it == pointers.end() ? nullptr : &*it;
}

const Keyframe* EventPacket::keyframe_for(std::string_view video_id) const {
    auto it = std::find_if(keyframes.begin(), keyframes.end(), [&](const auto& k) { return k.video_id == video_id; });
    return it == keyframes.end() ? nullptr : &*it;
}

void derive_pointers(EventPacket& packet, const AlignmentIndex& index) {
    packet.anchor_ms = std::clamp(packet.group.anchor_ms, packet.boundary.start_ms, packet.boundary.end_ms);
    packet.pointers.clear();
    for (const auto& s : index.streams) {
        packet.pointers.push_back(
            {s.stream_id, s.modality,
             window_to_ref(index, s.stream_id, packet.boundary.start_ms, packet.boundary.end_ms)});
    }
    packet.keyframes.clear();
    for (const auto& v : index.videos) {
        packet.keyframes.push_back({v.video_id, v.kind, packet.anchor_ms, time_to_frame(index, v.video_id, packet.anchor_ms),
                                    time_outside_video(index, v.video_id, packet.anchor_ms)});
    }
}

EventPacket build_packet(const EventGroup& group, const AlignmentIndex& index) {
    if (group.members.empty()) fail(ErrorCode::invalid_input, "cannot package an empty event group");
    if (group.span.start_ms > group.span.end_ms) fail(ErrorCode::invalid_input, "event group span is inverted");
    EventPacket p;
    p.packet_id = "pkt-" + (group.group_id.rfind("grp-", 0) == 0 ? group.group_id.substr(4) : group.group_id);
    p.group = group;
    p.boundary = group.span;
    p.state = PacketState::candidate;
    derive_pointers(p, index);
    return p;
}

bool is_legal(PacketState from, PacketActionKind action) {
    switch (from) {
        case PacketState::candidate:
        case PacketState::edited:
            return action != PacketActionKind::restore;
        case PacketState::discarded:
            return action == PacketActionKind::restore;
        case PacketState::verified:
            return false;
    }
    return false;
}

EventPacket apply_action(const EventPacket& packet, const PacketAction& action, const AlignmentIndex& index,
                         Millis now_ms) {
    if (!is_legal(packet.state, action.kind)) {
        fail(ErrorCode::illegal_transition, std::string("cannot ") + std::string(to_string(action.kind)) +
                                                " a packet in state " + std::string(to_string(packet.state)),
             {{"packet_id", packet.packet_id}, {"state", to_string(packet.state)}});
    }
    EventPacket next = packet;
    EditLogEntry entry{now_ms, action.kind, packet.boundary, packet.boundary, action.note};
    switch (action.kind) {
        case PacketActionKind::verify: next.state = PacketState::verified; break;
        case PacketActionKind::discard: next.state = PacketState::discarded; break;
        case PacketActionKind::restore: next.state = PacketState::candidate; break;
        case PacketActionKind::edit: {
            if (!action.new_boundary) fail(ErrorCode::invalid_input, "edit needs a new boundary");
            const auto& b = *action.new_boundary;
            if (!(b.start_ms < b.end_ms)) fail(ErrorCode::invalid_input, "edited boundary must have start < end");
            next.state = PacketState::edited;
            next.boundary = b;
            entry.new_boundary = b;
            derive_pointers(next, index);
            break;
        }
    }
    next.edit_log.push_back(std::move(entry));
    return next;
}

EventPacket replay_edit_log(const EventPacket& initial, const std::vector<EditLogEntry>& log,
                            const AlignmentIndex& index) {
    EventPacket p = initial;
    for (const auto& e : log) {
        PacketAction a{e.action, std::nullopt, e.note};
        if (e.action == PacketActionKind::edit) a.new_boundary = e.new_boundary;
        p = apply_action(p, a, index, e.timestamp_ms);
    }
    return p;
}

std::vector<EventPacket> build_packets(const EventLayer& layer, const AlignmentIndex& index) {
    for (const auto& c : layer.candidates) {
        if (!index.find_stream(c.stream_id)) {
            fail(ErrorCode::invalid_input, "event '" + c.event_id + "' references stream '" + c.stream_id +
                                               "' missing from the alignment index");
        }
    }
    std::vector<EventPacket> out;
    for (const auto& g : layer.groups) out.push_back(build_packet(g, index));
    return out;
}

void to_json(nlohmann::json& j, const EventPacket& p) {
    nlohmann::json pointers = nlohmann::json::array();
    for (const auto& ptr : p.pointers) {
        pointers.push_back({{"stream_id", ptr.stream_id}, {"modality_kind", to_string(ptr.modality)}, {"ref", ptr.ref}});
    }
    nlohmann::json keyframes = nlohmann::json::array();
    for (const auto& k : p.keyframes) {
        keyframes.push_back({{"video_id", k.video_id},
                             {"kind", to_string(k.kind)},
                             {"t_ms", k.t_ms},
                             {"frame_index", k.frame_index},
                             {"clamped", k.clamped}});
    }
    nlohmann::json log = nlohmann::json::array();
    for (const auto& e : p.edit_log) {
        log.push_back({{"timestamp_ms", e.timestamp_ms},
                       {"action", to_string(e.action)},
                       {"old_boundary", e.old_boundary},
                       {"new_boundary", e.new_boundary},
                       {"note", e.note}});
    }
    j = {{"packet_id", p.packet_id},     {"group", p.group},         {"pointers", std::move(pointers)},
         {"keyframes", std::move(keyframes)}, {"state", to_string(p.state)}, {"boundary", p.boundary},
         {"anchor_ms", p.anchor_ms},     {"edit_log", std::move(log)}};
    if (p.annotation) {
        j["annotation"] = {{"annotation_id", p.annotation->annotation_id},
                           {"emotion_descriptor", p.annotation->emotion_descriptor}};
    }
}

void from_json(const nlohmann::json& j, EventPacket& p) {
    p.packet_id = j.at("packet_id").get<std::string>();
    p.group = j.at("group").get<EventGroup>();
    p.pointers.clear();
    for (const auto& ptr : j.at("pointers")) {
        p.pointers.push_back({ptr.at("stream_id").get<std::string>(),
                              modality_from_string(ptr.at("modality_kind").get<std::string>()),
                              ptr.at("ref").get<WindowRef>()});
    }
    p.keyframes.clear();
    for (const auto& k : j.at("keyframes")) {
        p.keyframes.push_back({k.at("video_id").get<std::string>(), video_kind_from_string(k.at("kind").get<std::string>()),
                               k.at("t_ms").get<Millis>(), k.at("frame_index").get<std::int64_t>(),
                               k.at("clamped").get<bool>()});
    }
    p.state = packet_state_from_string(j.at("state").get<std::string>());
    p.boundary = j.at("boundary").get<Interval>();
    p.anchor_ms = j.at("anchor_ms").get<Millis>();
    p.edit_log.clear();
    for (const auto& e : j.at("edit_log")) {
        p.edit_log.push_back({e.at("timestamp_ms").get<Millis>(), packet_action_from_string(e.at("action").get<std::string>()),
                              e.at("old_boundary").get<Interval>(), e.at("new_boundary").get<Interval>(),
                              e.value("note", std::string{})});
    }
    if (j.contains("annotation")) {
        p.annotation = AnnotationBackref{j["annotation"].at("annotation_id").get<std::string>(),
                                         j["annotation"].at("emotion_descriptor").get<std::string>()};
    } else {
        p.annotation.reset();
    }
}

}  // namespace emowb
