#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emowb/annotation.hpp"
#include "emowb/packets.hpp"
#include "emowb/store.hpp"

namespace emowb {

inline constexpr int kExportVersion = 1;

struct ExportOptions {
    std::vector<PacketState> packet_states{PacketState::verified, PacketState::edited};
    std::vector<AnnotationStatus> annotation_statuses{AnnotationStatus::verified, AnnotationStatus::edited};
};

struct ExportProvenance {
    std::string model_id;
    std::string params_hash;
    std::vector<std::string> template_digests;  // sorted, unique
    std::vector<std::string> prompt_hashes;     // call order
    std::vector<std::string> response_hashes;   // call order

    bool operator==(const ExportProvenance&) const = default;
};

struct ExportRecord {
    int export_version = kExportVersion;
    std::string session_id;
    std::string participant_id;
    std::string scene_id;
    std::string packet_id;
    std::string annotation_id;
    std::string packet_state;
    std::string annotation_status;
    Interval boundary;
    Millis anchor_ms = 0;
    std::vector<StreamPointer> pointers;
    std::vector<Keyframe> keyframes;
    // Current text per annotation field; null when the field is absent or failed.
    std::map<std::string, std::optional<std::string>> fields;
    std::string emotion_descriptor;
    ExportProvenance provenance;

    bool operator==(const ExportRecord&) const = default;
};

void to_json(nlohmann::json& j, const ExportRecord& r);
void from_json(const nlohmann::json& j, ExportRecord& r);

struct ExportManifest {
    int export_version = kExportVersion;
    std::string session_id;
    std::string participant_id;
    std::string scene_id;
    std::size_t record_count = 0;
    std::vector<std::string> params_hashes;
    std::vector<std::string> packet_states;
    std::vector<std::string> annotation_statuses;

    bool operator==(const ExportManifest&) const = default;
};

void to_json(nlohmann::json& j, const ExportManifest& m);
void from_json(const nlohmann::json& j, ExportManifest& m);

struct ExportFile {
    ExportManifest manifest;
    std::vector<ExportRecord> records;
};

bool is_eligible(const EventPacket& packet, const AnnotationRecord* annotation, const ExportOptions& opts);

/// Eligible records sorted by (boundary start, packet id).
ExportFile build_export(const SessionMeta& meta, const std::vector<EventPacket>& packets,
                        const std::vector<AnnotationRecord>& annotations, const std::string& params_hash,
                        const ExportOptions& opts = {});

/// JSON lines: manifest first, then one record per line.
std::string serialize_export(const ExportFile& file);
ExportFile parse_export(std::string_view text);

/// Reads packets/annotations from the store and writes export.jsonl.
std::string export_session(SessionStore& store, std::string_view session_id, const ExportOptions& opts = {});

}  // namespace emowb
