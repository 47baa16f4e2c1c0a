#include "emowb/exporter.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "emowb/digest.hpp"
#include "emowb/documents.hpp"
#include "emowb/error.hpp"
#include "text_util.hpp"

namespace emowb {

void to_json(nlohmann::json& j, const ExportRecord& r) {
    nlohmann::json pointers = nlohmann::json::array();
    for (const auto& p : r.pointers) {
        pointers.push_back({{"stream_id", p.stream_id}, {"modality_kind", to_string(p.modality)}, {"ref", p.ref}});
    }
    nlohmann::json keyframes = nlohmann::json::array();
    for (const auto& k : r.keyframes) {
        keyframes.push_back({{"video_id", k.video_id},
                             {"kind", to_string(k.kind)},
                             {"t_ms", k.t_ms},
                             {"frame_index", k.frame_index},
                             {"clamped", k.clamped}});
    }
    nlohmann::json fields = nlohmann::json::object();
    for (const auto& [name, text] : r.fields) fields[name] = text ? nlohmann::json(*text) : nlohmann::json(nullptr);
    j = {{"export_version", r.export_version},
         {"session_id", r.session_id},
         {"participant_id", r.participant_id},
         {"scene_id", r.scene_id},
         {"packet_id", r.packet_id},
         {"annotation_id", r.annotation_id},
         {"packet_state", r.packet_state},
         {"annotation_status", r.annotation_status},
         {"boundary", r.boundary},
         {"anchor_ms", r.anchor_ms},
         {"pointers", std::move(pointers)},
         {"keyframes", std::move(keyframes)},
         {"fields", std::move(fields)},
         {"emotion_descriptor", r.emotion_descriptor},
         {"provenance",
          {{"model_id", r.provenance.model_id},
           {"params_hash", r.provenance.params_hash},
           {"template_digests", r.provenance.template_digests},
           {"prompt_hashes", r.provenance.prompt_hashes},
           {"response_hashes", r.provenance.response_hashes}}}};
}

void from_json(const nlohmann::json& j, ExportRecord& r) {
    r.export_version = j.at("export_version").get<int>();
    r.session_id = j.at("session_id").get<std::string>();
    r.participant_id = j.at("participant_id").get<std::string>();
    r.scene_id = j.at("scene_id").get<std::string>();
    r.packet_id = j.at("packet_id").get<std::string>();
    r.annotation_id = j.at("annotation_id").get<std::string>();
    r.packet_state = j.at("packet_state").get<std::string>();
    r.annotation_status = j.at("annotation_status").get<std::string>();
    r.boundary = j.at("boundary").get<Interval>();
    r.anchor_ms = j.at("anchor_ms").get<Millis>();
    r.pointers.clear();
    for (const auto& p : j.at("pointers")) {
        r.pointers.push_back({p.at("stream_id").get<std::string>(),
                              modality_from_string(p.at("modality_kind").get<std::string>()),
                              p.at("ref").get<WindowRef>()});
    }
    r.keyframes.clear();
    for (const auto& k : j.at("keyframes")) {
        r.keyframes.push_back({k.at("video_id").get<std::string>(), video_kind_from_string(k.at("kind").get<std::string>()),
                               k.at("t_ms").get<Millis>(), k.at("frame_index").get<std::int64_t>(),
                               k.at("clamped").get<bool>()});
    }
    r.fields.clear();
    for (const auto& [name, v] : j.at("fields").items()) {
        r.fields[name] = v.is_null() ? std::nullopt : std::optional<std::string>(v.get<std::string>());
    }
    r.emotion_descriptor = j.at("emotion_descriptor").get<std::string>();
    const auto& p = j.at("provenance");
    r.provenance = {p.at("model_id").get<std::string>(), p.at("params_hash").get<std::string>(),
                    p.at("template_digests").get<std::vector<std::string>>(),
                    p.at("prompt_hashes").get<std::vector<std::string>>(),
                    p.at("response_hashes").get<std::vector<std::string>>()};
}

void to_json(nlohmann::json& j, const ExportManifest& m) {
    j = {{"kind", "manifest"},
         {"export_version", m.export_version},
         {"session_id", m.session_id},
         {"participant_id", m.participant_id},
         {"scene_id", m.scene_id},
         {"record_count", m.record_count},
         {"params_hashes", m.params_hashes},
         {"packet_states", m.packet_states},
         {"annotation_statuses", m.annotation_statuses}};
}

void from_json(const nlohmann::json& j, ExportManifest& m) {
    if (j.value("kind", std::string{}) != "manifest") fail(ErrorCode::invalid_input, "export file does not start with a manifest");
    m.export_version = j.at("export_version").get<int>();
    m.session_id = j.at("session_id").get<std::string>();
    m.participant_id = j.at("participant_id").get<std::string>();
    m.scene_id = j.at("scene_id").get<std::string>();
    m.record_count = j.at("record_count").get<std::size_t>();
    m.params_hashes = j.at("params_hashes").get<std::vector<std::string>>();
    m.packet_states = j.at("packet_states").get<std::vector<std::string>>();
    m.annotation_statuses = j.at("annotation_statuses").get<std::vector<std::string>>();
}

bool is_eligible(const EventPacket& packet, const AnnotationRecord* annotation, const ExportOptions& opts) {
    if (!annotation) return false;
    return std::find(opts.packet_states.begin(), opts.packet_states.end(), packet.state) != opts.packet_states.end() &&
           std::find(opts.annotation_statuses.begin(), opts.annotation_statuses.end(), annotation->status) !=
               opts.annotation_statuses.end();
}

ExportFile build_export(const SessionMeta& meta, const std::vector<EventPacket>& packets,
                        const std::vector<AnnotationRecord>& annotations, const std::string& params_hash,
                        const ExportOptions& opts) {
    ExportFile file;
    file.manifest.session_id = meta.session_id;
    file.manifest.participant_id = meta.participant_id;
    file.manifest.scene_id = meta.scene_id;
    for (auto s : opts.packet_states) file.manifest.packet_states.emplace_back(to_string(s));
    for (auto s : opts.annotation_statuses) file.manifest.annotation_statuses.emplace_back(to_string(s));
    std::sort(file.manifest.packet_states.begin(), file.manifest.packet_states.end());
    std::sort(file.manifest.annotation_statuses.begin(), file.manifest.annotation_statuses.end());

    std::set<std::string> hashes;
    if (!params_hash.empty()) hashes.insert(params_hash);
    for (const auto& packet : packets) {
        const AnnotationRecord* ann = nullptr;
        for (const auto& a : annotations) {
            if (a.packet_id == packet.packet_id) ann = &a;
        }
        if (!is_eligible(packet, ann, opts)) continue;
        ExportRecord r;
        r.session_id = meta.session_id;
        r.participant_id = meta.participant_id;
        r.scene_id = meta.scene_id;
        r.packet_id = packet.packet_id;
        r.annotation_id = ann->annotation_id;
        r.packet_state = std::string(to_string(packet.state));
        r.annotation_status = std::string(to_string(ann->status));
        r.boundary = packet.boundary;
        r.anchor_ms = packet.anchor_ms;
        r.pointers = packet.pointers;
        r.keyframes = packet.keyframes;
        for (const auto& [name, f] : ann->fields) {
            r.fields[name] = f.status == FieldStatus::ok ? std::optional<std::string>(f.text) : std::nullopt;
        }
        r.emotion_descriptor = ann->field("emotion_descriptor").text;
        r.provenance.model_id = ann->provenance.model_id;
        r.provenance.params_hash = params_hash;
        std::set<std::string> digests;
        for (const auto& c : ann->provenance.calls) {
            digests.insert(c.template_digest);
            r.provenance.prompt_hashes.push_back(c.prompt_hash);
            r.provenance.response_hashes.push_back(c.response_hash);
        }
        r.provenance.template_digests.assign(digests.begin(), digests.end());
        file.records.push_back(std::move(r));
    }
    std::sort(file.records.begin(), file.records.end(), [](const ExportRecord& a, const ExportRecord& b) {
        return std::tie(a.boundary.start_ms, a.packet_id) < std::tie(b.boundary.start_ms, b.packet_id);
    });
    file.manifest.record_count = file.records.size();
    file.manifest.params_hashes.assign(hashes.begin(), hashes.end());
    return file;
}

std::string serialize_export(const ExportFile& file) {
    std::string out = nlohmann::json(file.manifest).dump() + "\n";
    for (const auto& r : file.records) out += nlohmann::json(r).dump() + "\n";
    return out;
}

ExportFile parse_export(std::string_view text) {
    const auto ls = detail::lines(text);
    if (ls.empty()) fail(ErrorCode::invalid_input, "export file is empty");
    ExportFile file;
    try {
        file.manifest = nlohmann::json::parse(ls.front()).get<ExportManifest>();
        for (std::size_t i = 1; i < ls.size(); ++i) {
            file.records.push_back(nlohmann::json::parse(ls[i]).get<ExportRecord>());
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_input, std::string("malformed export line: ") + e.what());
    }
    if (file.manifest.record_count != file.records.size()) {
        fail(ErrorCode::invalid_input, "export manifest count " + std::to_string(file.manifest.record_count) +
                                           " disagrees with " + std::to_string(file.records.size()) + " records");
    }
    return file;
}

std::string export_session(SessionStore& store, std::string_view session_id, const ExportOptions& opts) {
    const auto meta = store.get_session(session_id);
    std::vector<EventPacket> packets;
    std::string params_hash;
    if (store.has_blob(BlobKind::packets, session_id)) {
        auto doc = load_packets(store, session_id);
        packets = std::move(doc.packets);
        params_hash = std::move(doc.params_hash);
    }
    const auto annotations = load_annotations(store, session_id);
    const auto text = serialize_export(build_export(meta, packets, annotations.annotations, params_hash, opts));
    store.put_blob(BlobKind::export_file, session_id, text);
    return text;
}

}  // namespace emowb
