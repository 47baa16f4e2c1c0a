#include "emowb/annotation.hpp"

#include <algorithm>

#include "emowb/digest.hpp"
#include "emowb/error.hpp"

namespace emowb {

namespace {

constexpr std::array kStatuses{AnnotationStatus::draft, AnnotationStatus::verified, AnnotationStatus::edited,
                               AnnotationStatus::discarded};

TemplateModality template_for(DescriptorModality m) {
    switch (m) {
        case DescriptorModality::face: return TemplateModality::face;
        case DescriptorModality::motion: return TemplateModality::motion;
        case DescriptorModality::physio: return TemplateModality::physio;
        case DescriptorModality::context: return TemplateModality::context;
    }
    return TemplateModality::face;
}

ModalityDescriptor absent_descriptor(DescriptorModality m, std::string why) {
    ModalityDescriptor d;
    d.modality = m;
    d.absent = true;
    d.summary = std::move(why);
    return d;
}

std::string repair_prompt(const std::string& prompt, const std::string& reply, const std::string& error) {
    return prompt + "\n\nYour previous reply was rejected: " + error + "\nPrevious reply:\n" + reply +
           "\nReply again with exactly the requested lines and nothing else.\n";
}

/// One field group: first call plus at most one repair.
void run_field(AnnotationRecord& record, TemplateModality purpose, const PromptVariables& vars,
               std::vector<Attachment> attachments, const TemplateSet& templates, LlmProvider& provider,
               const AnnotatorOptions& opts) {
    const auto& tmpl = templates.get(purpose);
    const auto& names = response_fields(purpose);
    const auto prompt = render_prompt(tmpl, vars);
    std::vector<std::string> rejected;
    std::string error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        CompletionRequest req{std::string(to_string(purpose)),
                              record.packet_id,
                              attempt == 0 ? prompt.text : repair_prompt(prompt.text, rejected.back(), error),
                              names,
                              attachments,
                              opts.seed,
                              attempt};
        const auto reply = provider.complete(req);
        const auto check = validate_response(reply, names, opts.limits);
        record.provenance.calls.push_back({req.purpose, tmpl.template_id, tmpl.digest, sha256_hex(req.prompt),
                                           sha256_hex(reply), attempt, check.ok, check.error});
        if (check.ok) {
            for (const auto& name : names) {
                auto& f = record.fields[name];
                f.text = f.llm_text = check.fields.at(name);
                f.status = FieldStatus::ok;
                f.raw_responses = rejected;
                f.error.clear();
            }
            return;
        }
        rejected.push_back(reply);
        error = check.error;
    }
    for (const auto& name : names) {
        auto& f = record.fields[name];
        f.text.clear();
        f.llm_text.clear();
        f.status = FieldStatus::failed;
        f.raw_responses = rejected;
        f.error = error;
    }
}

void require_not_discarded(const AnnotationRecord& r) {
    if (r.status == AnnotationStatus::discarded) {
        fail(ErrorCode::illegal_transition, "annotation " + r.annotation_id + " is discarded",
             {{"annotation_id", r.annotation_id}, {"status", "discarded"}});
    }
}

AnnotationRecord transition(const AnnotationRecord& record, AnnotationActionKind action, AnnotationStatus to,
                            Millis now_ms) {
    if (!is_legal(record.status, action)) {
        fail(ErrorCode::illegal_transition,
             "cannot " + std::string(to_string(action)) + " an annotation in status " + std::string(to_string(record.status)),
             {{"annotation_id", record.annotation_id}, {"status", to_string(record.status)}});
    }
    AnnotationRecord next = record;
    next.analyst_edits.push_back({"status", std::string(to_string(record.status)), std::string(to_string(to)), now_ms});
    next.status = to;
    return next;
}

}  // namespace

std::string_view to_string(AnnotationStatus s) {
    switch (s) {
        case AnnotationStatus::draft: return "draft";
        case AnnotationStatus::verified: return "verified";
        case AnnotationStatus::edited: return "edited";
        case AnnotationStatus::discarded: return "discarded";
    }
    return "draft";
}

AnnotationStatus annotation_status_from_string(std::string_view text) {
    for (auto s : kStatuses) {
        if (to_string(s) == text) return s;
    }
    fail(ErrorCode::invalid_input, "unknown annotation status '" + std::string(text) + "'");
}

std::string_view to_string(FieldStatus s) {
    switch (s) {
        case FieldStatus::ok: return "ok";
        case FieldStatus::failed: return "failed";
        case FieldStatus::absent: return "absent";
    }
    return "absent";
}

FieldStatus field_status_from_string(std::string_view text) {
    for (auto s : {FieldStatus::ok, FieldStatus::failed, FieldStatus::absent}) {
        if (to_string(s) == text) return s;
    }
    fail(ErrorCode::invalid_input, "unknown field status '" + std::string(text) + "'");
}

std::string_view to_string(AnnotationActionKind k) {
    switch (k) {
        case AnnotationActionKind::edit: return "edit";
        case AnnotationActionKind::verify: return "verify";
        case AnnotationActionKind::discard: return "discard";
        case AnnotationActionKind::restore: return "restore";
    }
    return "edit";
}

AnnotationActionKind annotation_action_from_string(std::string_view text) {
    for (auto k : {AnnotationActionKind::edit, AnnotationActionKind::verify, AnnotationActionKind::discard,
                   AnnotationActionKind::restore}) {
        if (to_string(k) == text) return k;
    }
    fail(ErrorCode::invalid_input, "unknown annotation action '" + std::string(text) + "'");
}

const std::vector<std::string>& annotation_field_names() {
    static const std::vector<std::string> names{"face_description",       "motion_description",
                                                "physio_description",     "context_description",
                                                "multimodal_description", "emotion_descriptor"};
    return names;
}

const std::vector<std::string>& unimodal_field_names() {
    static const std::vector<std::string> names{"face_description", "motion_description", "physio_description",
                                                "context_description"};
    return names;
}

const AnnotationField& AnnotationRecord::field(std::string_view name) const {
    auto it = fields.find(std::string(name));
    if (it == fields.end()) fail(ErrorCode::not_found, "unknown annotation field '" + std::string(name) + "'");
    return it->second;
}

bool AnnotationRecord::aggregated() const {
    auto it = fields.find("multimodal_description");
    return it != fields.end() && it->second.status != FieldStatus::absent;
}

std::string annotation_id_for(std::string_view packet_id) { return short_id("ann-", packet_id); }

bool is_legal(AnnotationStatus from, AnnotationActionKind action) {
    switch (from) {
        case AnnotationStatus::draft:
        case AnnotationStatus::edited:
            return action != AnnotationActionKind::restore;
        case AnnotationStatus::discarded:
            return action == AnnotationActionKind::restore;
        case AnnotationStatus::verified:
            return false;
    }
    return false;
}

std::vector<ModalityDescriptor> describe_packet(const EventPacket& packet, const std::vector<SignalStream>& streams,
                                                const AlignmentIndex& index, const DescriberOptions& opts) {
    std::vector<ModalityDescriptor> out;
    auto first_of = [&](ModalityKind kind) -> const SignalStream* {
        for (const auto& s : streams) {
            if (s.modality == kind) return &s;
        }
        return nullptr;
    };

    if (const auto* au = first_of(ModalityKind::au)) {
        try {
            out.push_back(describe_face(packet, *au, opts));
        } catch (const Error& e) {
            out.push_back(absent_descriptor(DescriptorModality::face, e.what()));
        }
    } else {
        out.push_back(absent_descriptor(DescriptorModality::face, "no AU stream"));
    }

    if (const auto* skel = first_of(ModalityKind::skeleton)) {
        try {
            out.push_back(describe_motion(packet, *skel, opts));
        } catch (const Error& e) {
            out.push_back(absent_descriptor(DescriptorModality::motion, e.what()));
        }
    } else {
        out.push_back(absent_descriptor(DescriptorModality::motion, "no skeleton stream"));
    }

    std::vector<ModalityDescriptor> physio;
    for (const auto& s : streams) {
        if (!is_physio(s.modality)) continue;
        try {
            physio.push_back(describe_physio(packet, s, opts));
        } catch (const Error&) {
        }
    }
    out.push_back(physio.empty() ? absent_descriptor(DescriptorModality::physio, "no physiological samples in window")
                                 : merge_physio(physio));

    out.push_back(describe_context(packet, index));
    return out;
}

AnnotationRecord annotate_event(std::string_view session_id, const EventPacket& packet,
                                const std::vector<ModalityDescriptor>& descriptors, const TemplateSet& templates,
                                LlmProvider& provider, const AnnotatorOptions& opts) {
    if (packet.state == PacketState::discarded) {
        fail(ErrorCode::illegal_transition, "packet " + packet.packet_id + " is discarded",
             {{"packet_id", packet.packet_id}, {"state", "discarded"}});
    }
    AnnotationRecord record;
    record.annotation_id = annotation_id_for(packet.packet_id);
    record.packet_id = packet.packet_id;
    record.session_id = std::string(session_id);
    for (const auto& name : annotation_field_names()) record.fields[name] = {};
    record.provenance.model_id = provider.model_id();
    for (const auto& d : descriptors) record.descriptors.push_back(d);

    const auto window = event_window_text(session_id, packet);
    for (const auto& d : descriptors) {
        const auto purpose = template_for(d.modality);
        if (d.absent) {
            record.fields[response_fields(purpose).front()].error = d.summary;
            continue;
        }
        PromptVariables vars{{"event_window", window},
                             {"features", features_text(d)},
                             {"keyframe_refs", keyframe_refs_text(d.keyframes)},
                             {"prior_descriptions", ""}};
        std::vector<Attachment> attachments;
        if (d.modality == DescriptorModality::context && provider.capabilities().image_input) {
            for (const auto& k : d.keyframes) attachments.push_back({k.role, k.video_id, k.uri, k.frame_index, k.t_ms});
        }
        run_field(record, purpose, vars, std::move(attachments), templates, provider, opts);
    }
    return record;
}

AnnotationRecord aggregate_multimodal(const AnnotationRecord& record, const EventPacket& packet,
                                      const std::vector<ModalityDescriptor>& descriptors,
                                      const TemplateSet& templates, LlmProvider& provider,
                                      const AnnotatorOptions& opts) {
    require_not_discarded(record);
    std::string prior;
    for (const auto& name : unimodal_field_names()) {
        const auto& f = record.field(name);
        if (f.status != FieldStatus::ok) continue;
        prior += name + ": " + f.text + "\n";
    }
    if (prior.empty()) {
        fail(ErrorCode::invalid_input, "annotation " + record.annotation_id + " has no populated unimodal field");
    }
    prior.pop_back();

    std::string features;
    std::vector<KeyframeRef> keyframes;
    for (const auto& d : descriptors) {
        if (d.absent) continue;
        if (!features.empty()) features += "\n";
        features += "[" + std::string(to_string(d.modality)) + "]\n" + features_text(d);
        keyframes.insert(keyframes.end(), d.keyframes.begin(), d.keyframes.end());
    }
    PromptVariables vars{{"event_window", event_window_text(record.session_id, packet)},
                         {"features", features},
                         {"keyframe_refs", keyframe_refs_text(keyframes)},
                         {"prior_descriptions", prior}};
    AnnotationRecord next = record;
    if (next.provenance.model_id.empty()) next.provenance.model_id = provider.model_id();
    run_field(next, TemplateModality::aggregate, vars, {}, templates, provider, opts);
    return next;
}

AnnotationRecord apply_annotation_edit(const AnnotationRecord& record, std::string_view field, std::string new_text,
                                       Millis now_ms, const ResponseLimits& limits) {
    const auto& names = annotation_field_names();
    if (std::find(names.begin(), names.end(), field) == names.end()) {
        fail(ErrorCode::invalid_input, "field '" + std::string(field) + "' is not editable");
    }
    if (!is_legal(record.status, AnnotationActionKind::edit)) {
        fail(ErrorCode::illegal_transition,
             "cannot edit an annotation in status " + std::string(to_string(record.status)),
             {{"annotation_id", record.annotation_id}, {"status", to_string(record.status)}});
    }
    if (new_text.empty()) fail(ErrorCode::invalid_input, "edited text must not be empty");
    const auto limit = field == "emotion_descriptor" ? limits.max_descriptor_chars : limits.max_field_chars;
    if (new_text.size() > limit) {
        fail(ErrorCode::invalid_input, "edited text exceeds " + std::to_string(limit) + " characters");
    }
    if (field == "emotion_descriptor") {
        if (auto bad = check_emotion_labels(new_text, limits.emotion_vocabulary)) fail(ErrorCode::invalid_input, *bad);
    }
    AnnotationRecord next = record;
    auto& f = next.fields[std::string(field)];
    next.analyst_edits.push_back({std::string(field), f.text, new_text, now_ms});
    f.text = std::move(new_text);
    f.status = FieldStatus::ok;
    next.status = AnnotationStatus::edited;
    return next;
}

AnnotationRecord verify_annotation(const AnnotationRecord& record, Millis now_ms) {
    return transition(record, AnnotationActionKind::verify, AnnotationStatus::verified, now_ms);
}

AnnotationRecord discard_annotation(const AnnotationRecord& record, Millis now_ms) {
    return transition(record, AnnotationActionKind::discard, AnnotationStatus::discarded, now_ms);
}

AnnotationRecord restore_annotation(const AnnotationRecord& record, Millis now_ms) {
    return transition(record, AnnotationActionKind::restore, AnnotationStatus::draft, now_ms);
}

AnnotationRecord replay_analyst_edits(const AnnotationRecord& pristine, const std::vector<AnalystEdit>& edits,
                                      const ResponseLimits& limits) {
    AnnotationRecord r = pristine;
    for (const auto& e : edits) {
        if (e.field != "status") {
            r = apply_annotation_edit(r, e.field, e.new_text, e.timestamp_ms, limits);
        } else if (e.new_text == "verified") {
            r = verify_annotation(r, e.timestamp_ms);
        } else if (e.new_text == "discarded") {
            r = discard_annotation(r, e.timestamp_ms);
        } else if (e.new_text == "draft") {
            r = restore_annotation(r, e.timestamp_ms);
        } else {
            fail(ErrorCode::invalid_input, "cannot replay status change to '" + e.new_text + "'");
        }
    }
    return r;
}

void to_json(nlohmann::json& j, const AnnotationRecord& r) {
    nlohmann::json fields = nlohmann::json::object();
    for (const auto& [name, f] : r.fields) {
        fields[name] = {{"text", f.text},   {"llm_text", f.llm_text}, {"status", to_string(f.status)},
                        {"raw_responses", f.raw_responses}, {"error", f.error}};
    }
    nlohmann::json calls = nlohmann::json::array();
    for (const auto& c : r.provenance.calls) {
        calls.push_back({{"purpose", c.purpose},
                         {"template_id", c.template_id},
                         {"template_digest", c.template_digest},
                         {"prompt_hash", c.prompt_hash},
                         {"response_hash", c.response_hash},
                         {"attempt", c.attempt},
                         {"valid", c.valid},
                         {"error", c.error}});
    }
    nlohmann::json edits = nlohmann::json::array();
    for (const auto& e : r.analyst_edits) {
        edits.push_back({{"field", e.field}, {"old", e.old_text}, {"new", e.new_text}, {"timestamp_ms", e.timestamp_ms}});
    }
    j = {{"annotation_id", r.annotation_id},
         {"packet_id", r.packet_id},
         {"session_id", r.session_id},
         {"status", to_string(r.status)},
         {"fields", std::move(fields)},
         {"descriptors", r.descriptors},
         {"analyst_edits", std::move(edits)},
         {"provenance", {{"model_id", r.provenance.model_id}, {"calls", std::move(calls)}}}};
}

void from_json(const nlohmann::json& j, AnnotationRecord& r) {
    r.annotation_id = j.at("annotation_id").get<std::string>();
    r.packet_id = j.at("packet_id").get<std::string>();
    r.session_id = j.at("session_id").get<std::string>();
    r.status = annotation_status_from_string(j.at("status").get<std::string>());
    r.fields.clear();
    for (const auto& [name, f] : j.at("fields").items()) {
        r.fields[name] = {f.at("text").get<std::string>(), f.at("llm_text").get<std::string>(),
                          field_status_from_string(f.at("status").get<std::string>()),
                          f.at("raw_responses").get<std::vector<std::string>>(), f.at("error").get<std::string>()};
    }
    r.descriptors = j.at("descriptors");
    r.analyst_edits.clear();
    for (const auto& e : j.at("analyst_edits")) {
        r.analyst_edits.push_back({e.at("field").get<std::string>(), e.at("old").get<std::string>(),
                                   e.at("new").get<std::string>(), e.at("timestamp_ms").get<Millis>()});
    }
    const auto& p = j.at("provenance");
    r.provenance.model_id = p.at("model_id").get<std::string>();
    r.provenance.calls.clear();
    for (const auto& c : p.at("calls")) {
        r.provenance.calls.push_back({c.at("purpose").get<std::string>(), c.at("template_id").get<std::string>(),
                                      c.at("template_digest").get<std::string>(), c.at("prompt_hash").get<std::string>(),
                                      c.at("response_hash").get<std::string>(), c.at("attempt").get<int>(),
                                      c.at("valid").get<bool>(), c.at("error").get<std::string>()});
    }
}

}  // namespace emowb
