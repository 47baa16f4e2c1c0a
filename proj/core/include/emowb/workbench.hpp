#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emowb/annotation.hpp"
#include "emowb/documents.hpp"
#include "emowb/exporter.hpp"
#include "emowb/ingest.hpp"
#include "emowb/render.hpp"

namespace emowb {

// Store-backed pipeline stages. Each stage reads its inputs from the store
// and rewrites only its own outputs.

struct IngestResult {
    std::string session_id;
    std::vector<ParseReport> reports;
    AlignmentIndex index;
};

/// Parses every stream of `meta` (paths relative to `base_dir`) before
/// writing anything, then stores the session, streams, reports and index.
IngestResult ingest_session(SessionStore& store, const SessionMeta& meta, const std::filesystem::path& base_dir);

/// Session manifest: SessionMeta JSON whose stream paths are relative to the
/// manifest file.
IngestResult ingest_manifest(SessionStore& store, const std::filesystem::path& manifest_path);

/// Stored streams in manifest order.
std::vector<SignalStream> load_streams(const SessionStore& store, std::string_view session_id);

EventLayer detect_session(SessionStore& store, std::string_view session_id, const DetectorParams& params);

PacketDocument pack_session(SessionStore& store, std::string_view session_id);

EventPacket act_on_packet(SessionStore& store, std::string_view session_id, std::string_view packet_id,
                          const PacketAction& action, Millis now_ms);

struct AnnotateSettings {
    AnnotatorOptions options;
    std::size_t max_in_flight = 1;
};

/// Describe, annotate and (when a unimodal field succeeded) aggregate one
/// packet; stores the record and the packet's back-reference.
AnnotationRecord annotate_packet(SessionStore& store, std::string_view session_id, std::string_view packet_id,
                                 LlmProvider& provider, const TemplateSet& templates,
                                 const AnnotateSettings& settings = {});

/// Every packet that is not discarded, up to max_in_flight at a time.
AnnotationDocument annotate_session(SessionStore& store, std::string_view session_id, LlmProvider& provider,
                                    const TemplateSet& templates, const AnnotateSettings& settings = {});

struct AnnotationAction {
    AnnotationActionKind kind = AnnotationActionKind::verify;
    std::string field;  // edit only
    std::string text;   // edit only
};

AnnotationRecord act_on_annotation(SessionStore& store, std::string_view session_id, std::string_view annotation_id,
                                   const AnnotationAction& action, Millis now_ms, const ResponseLimits& limits = {});

/// Scripted analyst actions, a JSON array of
///   {"packet": <packet id or ordinal>, "action": "verify"|"edit"|"discard"|"restore",
///    "boundary": {"start_ms", "end_ms"}, "note": "..."}
///   {"annotation_of": <packet id or ordinal>, "action": "verify"|"edit"|"discard"|"restore",
///    "field": "...", "text": "..."}
/// Ordinals index packets.json. Returns the number of actions applied.
std::size_t apply_review(SessionStore& store, std::string_view session_id, const nlohmann::json& actions,
                         Millis now_ms, const ResponseLimits& limits = {});

/// Writes frame_00000.ppm ... into out_dir; returns the frame count.
std::size_t render_stream(const SessionStore& store, std::string_view session_id, std::string_view stream_id,
                          const RenderView& view, const std::filesystem::path& out_dir);

/// Wall clock in ms since the Unix epoch.
Millis wall_clock_ms();

}  // namespace emowb
