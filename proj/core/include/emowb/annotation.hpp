#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emowb/describe.hpp"
#include "emowb/prompt.hpp"
#include "emowb/provider.hpp"

namespace emowb {

enum class AnnotationStatus { draft, verified, edited, discarded };

std::string_view to_string(AnnotationStatus s);
AnnotationStatus annotation_status_from_string(std::string_view text);

enum class FieldStatus { ok, failed, absent };

std::string_view to_string(FieldStatus s);
FieldStatus field_status_from_string(std::string_view text);

/// face_description, motion_description, physio_description, context_description,
/// multimodal_description, emotion_descriptor.
const std::vector<std::string>& annotation_field_names();
/// The four per-modality fields, in call order.
const std::vector<std::string>& unimodal_field_names();

struct AnnotationField {
    std::string text;      // current value (analyst edits land here)
    std::string llm_text;  // value as produced by the provider
    FieldStatus status = FieldStatus::absent;
    std::vector<std::string> raw_responses;  // kept when the field failed validation
    std::string error;

    bool operator==(const AnnotationField&) const = default;
};

struct LlmCall {
    std::string purpose;
    std::string template_id;
    std::string template_digest;
    std::string prompt_hash;
    std::string response_hash;
    int attempt = 0;
    bool valid = false;
    std::string error;  // validation error when !valid

    bool operator==(const LlmCall&) const = default;
};

struct Provenance {
    std::string model_id;
    std::vector<LlmCall> calls;

    bool operator==(const Provenance&) const = default;
};

struct AnalystEdit {
    std::string field;  // annotation field, or "status"
    std::string old_text;
    std::string new_text;
    Millis timestamp_ms = 0;

    bool operator==(const AnalystEdit&) const = default;
};

struct AnnotationRecord {
    std::string annotation_id;
    std::string packet_id;
    std::string session_id;
    std::map<std::string, AnnotationField> fields;  // every name in annotation_field_names()
    nlohmann::json descriptors = nlohmann::json::array();
    AnnotationStatus status = AnnotationStatus::draft;
    std::vector<AnalystEdit> analyst_edits;
    Provenance provenance;

    const AnnotationField& field(std::string_view name) const;
    bool aggregated() const;
    bool operator==(const AnnotationRecord&) const = default;
};

void to_json(nlohmann::json& j, const AnnotationRecord& r);
void from_json(const nlohmann::json& j, AnnotationRecord& r);

std::string annotation_id_for(std::string_view packet_id);

struct AnnotatorOptions {
    DescriberOptions describe;
    ResponseLimits limits;
    std::uint64_t seed = 0;
};

/// Face, motion, physio (all physiological streams merged) and context
/// descriptors, in that order. Unavailable modalities come back `absent`.
std::vector<ModalityDescriptor> describe_packet(const EventPacket& packet, const std::vector<SignalStream>& streams,
                                                const AlignmentIndex& index, const DescriberOptions& opts = {});

/// One provider call (plus at most one repair) per present modality.
AnnotationRecord annotate_event(std::string_view session_id, const EventPacket& packet,
                                const std::vector<ModalityDescriptor>& descriptors, const TemplateSet& templates,
                                LlmProvider& provider, const AnnotatorOptions& opts = {});

/// Fills multimodal_description and emotion_descriptor from the populated
/// unimodal fields.
AnnotationRecord aggregate_multimodal(const AnnotationRecord& record, const EventPacket& packet,
                                      const std::vector<ModalityDescriptor>& descriptors,
                                      const TemplateSet& templates, LlmProvider& provider,
                                      const AnnotatorOptions& opts = {});

enum class AnnotationActionKind { edit, verify, discard, restore };

std::string_view to_string(AnnotationActionKind k);
AnnotationActionKind annotation_action_from_string(std::string_view text);

bool is_legal(AnnotationStatus from, AnnotationActionKind action);

AnnotationRecord apply_annotation_edit(const AnnotationRecord& record, std::string_view field, std::string new_text,
                                       Millis now_ms, const ResponseLimits& limits = {});
AnnotationRecord verify_annotation(const AnnotationRecord& record, Millis now_ms);
AnnotationRecord discard_annotation(const AnnotationRecord& record, Millis now_ms);
AnnotationRecord restore_annotation(const AnnotationRecord& record, Millis now_ms);

/// Re-applies `edits` to the pristine draft.
AnnotationRecord replay_analyst_edits(const AnnotationRecord& pristine, const std::vector<AnalystEdit>& edits,
                                      const ResponseLimits& limits = {});

}  // namespace emowb
