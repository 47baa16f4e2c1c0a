#pragma once

#include <string>
#include <vector>

#include "emowb/annotation.hpp"
#include "emowb/events.hpp"
#include "emowb/packets.hpp"
#include "emowb/store.hpp"
#include "emowb/timeline.hpp"

namespace emowb {

/// Contents of packets.json.
struct PacketDocument {
    std::string session_id;
    std::string params_hash;
    std::vector<EventPacket> packets;

    EventPacket* find(std::string_view packet_id);
    const EventPacket* find(std::string_view packet_id) const;
    bool operator==(const PacketDocument&) const = default;
};

void to_json(nlohmann::json& j, const PacketDocument& d);
void from_json(const nlohmann::json& j, PacketDocument& d);

/// Contents of annotations.json, in packet order.
struct AnnotationDocument {
    std::string session_id;
    std::vector<AnnotationRecord> annotations;

    AnnotationRecord* find(std::string_view annotation_id);
    const AnnotationRecord* find(std::string_view annotation_id) const;
    const AnnotationRecord* find_for_packet(std::string_view packet_id) const;
    bool operator==(const AnnotationDocument&) const = default;
};

void to_json(nlohmann::json& j, const AnnotationDocument& d);
void from_json(const nlohmann::json& j, AnnotationDocument& d);

AlignmentIndex load_index(const SessionStore& store, std::string_view session_id);
EventLayer load_events(const SessionStore& store, std::string_view session_id);
PacketDocument load_packets(const SessionStore& store, std::string_view session_id);
/// Empty document when the session has no annotations yet.
AnnotationDocument load_annotations(const SessionStore& store, std::string_view session_id);

void save_events(SessionStore& store, std::string_view session_id, const EventLayer& layer);
void save_packets(SessionStore& store, std::string_view session_id, const PacketDocument& doc);
void save_annotations(SessionStore& store, std::string_view session_id, const AnnotationDocument& doc);

}  // namespace emowb
