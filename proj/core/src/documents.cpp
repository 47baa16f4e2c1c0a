#include "emowb/documents.hpp"

#include <algorithm>

#include "emowb/digest.hpp"
#include "emowb/error.hpp"

namespace emowb {

namespace {

template <class T>
T parse_blob(const SessionStore& store, BlobKind kind, std::string_view session_id) {
    const auto text = store.get_blob(kind, session_id);
    try {
        return nlohmann::json::parse(text).get<T>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_input,
             std::string(to_string(kind)) + " document of session " + std::string(session_id) + " is malformed: " + e.what());
    }
}

}  // namespace

EventPacket* PacketDocument::find(std::string_view packet_id) {
    auto it = std::find_if(packets.begin(), packets.end(), [&](const auto& p) { return p.packet_id == packet_id; });
    return it == packets.end() ? nullptr : &*it;
}

const EventPacket* PacketDocument::find(std::string_view packet_id) const {
    return const_cast<PacketDocument*>(this)->find(packet_id);
}

void to_json(nlohmann::json& j, const PacketDocument& d) {
    j = {{"session_id", d.session_id}, {"params_hash", d.params_hash}, {"packets", d.packets}};
}

void from_json(const nlohmann::json& j, PacketDocument& d) {
    d.session_id = j.at("session_id").get<std::string>();
    d.params_hash = j.at("params_hash").get<std::string>();
    d.packets = j.at("packets").get<std::vector<EventPacket>>();
}

AnnotationRecord* AnnotationDocument::find(std::string_view annotation_id) {
    auto it = std::find_if(annotations.begin(), annotations.end(),
                           [&](const auto& a) { return a.annotation_id == annotation_id; });
    return it == annotations.end() ? nullptr : &*it;
}

const AnnotationRecord* AnnotationDocument::find(std::string_view annotation_id) const {
    return const_cast<AnnotationDocument*>(this)->find(annotation_id);
}

const AnnotationRecord* AnnotationDocument::find_for_packet(std::string_view packet_id) const {
    auto it = std::find_if(annotations.begin(), annotations.end(),
                           [&](const auto& a) { return a.packet_id == packet_id; });
    return it == annotations.end() ? nullptr : &*it;
}

void to_json(nlohmann::json& j, const AnnotationDocument& d) {
    j = {{"session_id", d.session_id}, {"annotations", d.annotations}};
}

void from_json(const nlohmann::json& j, AnnotationDocument& d) {
    d.session_id = j.at("session_id").get<std::string>();
    d.annotations = j.at("annotations").get<std::vector<AnnotationRecord>>();
}

AlignmentIndex load_index(const SessionStore& store, std::string_view session_id) {
    return parse_blob<AlignmentIndex>(store, BlobKind::index, session_id);
}

EventLayer load_events(const SessionStore& store, std::string_view session_id) {
    return parse_blob<EventLayer>(store, BlobKind::events, session_id);
}

PacketDocument load_packets(const SessionStore& store, std::string_view session_id) {
    return parse_blob<PacketDocument>(store, BlobKind::packets, session_id);
}

AnnotationDocument load_annotations(const SessionStore& store, std::string_view session_id) {
    if (!store.has_blob(BlobKind::annotations, session_id)) {
        store.get_session(session_id);
        return {std::string(session_id), {}};
    }
    return parse_blob<AnnotationDocument>(store, BlobKind::annotations, session_id);
}

void save_events(SessionStore& store, std::string_view session_id, const EventLayer& layer) {
    store.put_blob(BlobKind::events, session_id, dump_pretty(layer));
}

void save_packets(SessionStore& store, std::string_view session_id, const PacketDocument& doc) {
    store.put_blob(BlobKind::packets, session_id, dump_pretty(doc));
}

void save_annotations(SessionStore& store, std::string_view session_id, const AnnotationDocument& doc) {
    store.put_blob(BlobKind::annotations, session_id, dump_pretty(doc));
}

}  // namespace emowb
