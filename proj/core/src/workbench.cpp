#include "emowb/workbench.hpp"

#include <chrono>
#include <cstdio>
#include <future>

#include "emowb/digest.hpp"
#include "emowb/error.hpp"

namespace emowb {

namespace {

nlohmann::json parse_json_file(const std::filesystem::path& path) {
    const auto text = read_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::invalid_input, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

/// Packet id from a review entry: an id string or an ordinal into packets.json.
std::string resolve_packet(const PacketDocument& doc, const nlohmann::json& ref) {
    if (ref.is_number_integer()) {
        const auto i = ref.get<std::int64_t>();
        if (i < 0 || static_cast<std::size_t>(i) >= doc.packets.size()) {
            fail(ErrorCode::not_found, "packet ordinal " + std::to_string(i) + " out of range");
        }
        return doc.packets[static_cast<std::size_t>(i)].packet_id;
    }
    if (ref.is_string()) return ref.get<std::string>();
    fail(ErrorCode::invalid_input, "packet reference must be an id or an ordinal");
}

void set_backref(SessionStore& store, std::string_view session_id, const AnnotationRecord& record) {
    auto doc = load_packets(store, session_id);
    auto* packet = doc.find(record.packet_id);
    if (!packet) return;
    packet->annotation = AnnotationBackref{record.annotation_id, record.field("emotion_descriptor").text};
    save_packets(store, session_id, doc);
}

void upsert(AnnotationDocument& doc, const PacketDocument& packets, AnnotationRecord record) {
    if (auto* existing = doc.find(record.annotation_id)) {
        *existing = std::move(record);
    } else {
        doc.annotations.push_back(std::move(record));
    }
    auto order = [&](const AnnotationRecord& a) {
        for (std::size_t i = 0; i < packets.packets.size(); ++i) {
            if (packets.packets[i].packet_id == a.packet_id) return i;
        }
        return packets.packets.size();
    };
    std::stable_sort(doc.annotations.begin(), doc.annotations.end(),
                     [&](const auto& a, const auto& b) { return order(a) < order(b); });
}

AnnotationRecord annotate_one(const std::string& session_id, const EventPacket& packet,
                              const std::vector<SignalStream>& streams, const AlignmentIndex& index,
                              LlmProvider& provider, const TemplateSet& templates, const AnnotatorOptions& opts) {
    const auto descriptors = describe_packet(packet, streams, index, opts.describe);
    auto record = annotate_event(session_id, packet, descriptors, templates, provider, opts);
    for (const auto& name : unimodal_field_names()) {
        if (record.field(name).status == FieldStatus::ok) {
            return aggregate_multimodal(record, packet, descriptors, templates, provider, opts);
        }
    }
    return record;
}

}  // namespace

Millis wall_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

IngestResult ingest_session(SessionStore& store, const SessionMeta& meta, const std::filesystem::path& base_dir) {
    validate(meta, store.scenes());
    IngestResult result;
    result.session_id = meta.session_id;
    std::vector<SignalStream> streams;
    for (const auto& entry : meta.streams) {
        std::filesystem::path path{entry.source_path};
        if (path.is_relative()) path = base_dir / path;
        std::string text;
        try {
            text = read_file(path);
        } catch (const Error& e) {
            fail(e.code(), "stream '" + entry.stream_id + "': " + e.what(), e.detail());
        }
        auto [stream, report] = parse_stream_file(text, entry, meta.recording_epoch_ms);
        streams.push_back(std::move(stream));
        result.reports.push_back(std::move(report));
    }
    result.index = build_alignment_index(meta, streams);

    auto lock = store.lock_session(meta.session_id);
    store.put_session(meta);
    for (std::size_t i = 0; i < streams.size(); ++i) {
        store.put_stream(meta.session_id, streams[i]);
        store.put_blob(BlobKind::report, meta.session_id, dump_pretty(result.reports[i]), streams[i].stream_id);
    }
    result.index.index_revision = store.revision(BlobKind::index, meta.session_id);
    if (store.has_blob(BlobKind::index, meta.session_id)) {
        auto stored = load_index(store, meta.session_id);
        if (stored == result.index) return result;
    }
    result.index.index_revision += 1;
    store.put_blob(BlobKind::index, meta.session_id, dump_pretty(result.index));
    return result;
}

IngestResult ingest_manifest(SessionStore& store, const std::filesystem::path& manifest_path) {
    SessionMeta meta;
    try {
        meta = parse_json_file(manifest_path).get<SessionMeta>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_input, "manifest '" + manifest_path.string() + "': " + e.what());
    }
    return ingest_session(store, meta, manifest_path.parent_path());
}

std::vector<SignalStream> load_streams(const SessionStore& store, std::string_view session_id) {
    const auto meta = store.get_session(session_id);
    std::vector<SignalStream> out;
    for (const auto& entry : meta.streams) out.push_back(store.get_stream(session_id, entry.stream_id));
    return out;
}

EventLayer detect_session(SessionStore& store, std::string_view session_id, const DetectorParams& params) {
    validate(params);
    const auto streams = load_streams(store, session_id);
    auto layer = detect_session_events(streams, params);
    auto lock = store.lock_session(session_id);
    save_events(store, session_id, layer);
    return layer;
}

PacketDocument pack_session(SessionStore& store, std::string_view session_id) {
    const auto layer = load_events(store, session_id);
    const auto index = load_index(store, session_id);
    PacketDocument doc{std::string(session_id), layer.params_hash, build_packets(layer, index)};
    auto lock = store.lock_session(session_id);
    save_packets(store, session_id, doc);
    return doc;
}

EventPacket act_on_packet(SessionStore& store, std::string_view session_id, std::string_view packet_id,
                          const PacketAction& action, Millis now_ms) {
    auto lock = store.lock_session(session_id);
    const auto index = load_index(store, session_id);
    auto doc = load_packets(store, session_id);
    auto* packet = doc.find(packet_id);
    if (!packet) fail(ErrorCode::not_found, "unknown packet '" + std::string(packet_id) + "'");
    *packet = apply_action(*packet, action, index, now_ms);
    save_packets(store, session_id, doc);
    return *packet;
}

AnnotationRecord annotate_packet(SessionStore& store, std::string_view session_id, std::string_view packet_id,
                                 LlmProvider& provider, const TemplateSet& templates,
                                 const AnnotateSettings& settings) {
    const auto index = load_index(store, session_id);
    const auto streams = load_streams(store, session_id);
    auto packets = load_packets(store, session_id);
    const auto* packet = packets.find(packet_id);
    if (!packet) fail(ErrorCode::not_found, "unknown packet '" + std::string(packet_id) + "'");
    auto record = annotate_one(std::string(session_id), *packet, streams, index, provider, templates, settings.options);

    auto lock = store.lock_session(session_id);
    packets = load_packets(store, session_id);
    auto doc = load_annotations(store, session_id);
    upsert(doc, packets, record);
    save_annotations(store, session_id, doc);
    set_backref(store, session_id, record);
    return record;
}

AnnotationDocument annotate_session(SessionStore& store, std::string_view session_id, LlmProvider& provider,
                                    const TemplateSet& templates, const AnnotateSettings& settings) {
    const std::string sid(session_id);
    const auto index = load_index(store, session_id);
    const auto streams = load_streams(store, session_id);
    const auto packets = load_packets(store, session_id);

    std::vector<const EventPacket*> todo;
    for (const auto& p : packets.packets) {
        if (p.state != PacketState::discarded) todo.push_back(&p);
    }
    std::vector<AnnotationRecord> records(todo.size());
    const std::size_t width = std::max<std::size_t>(1, settings.max_in_flight);
    for (std::size_t begin = 0; begin < todo.size(); begin += width) {
        const std::size_t end = std::min(todo.size(), begin + width);
        std::vector<std::future<AnnotationRecord>> batch;
        for (std::size_t i = begin; i < end; ++i) {
            batch.push_back(std::async(width == 1 ? std::launch::deferred : std::launch::async, [&, i] {
                return annotate_one(sid, *todo[i], streams, index, provider, templates, settings.options);
            }));
        }
        for (std::size_t i = begin; i < end; ++i) records[i] = batch[i - begin].get();
    }

    auto lock = store.lock_session(session_id);
    auto doc = load_annotations(store, session_id);
    auto current = load_packets(store, session_id);
    for (auto& r : records) {
        if (auto* p = current.find(r.packet_id)) {
            p->annotation = AnnotationBackref{r.annotation_id, r.field("emotion_descriptor").text};
        }
        upsert(doc, current, std::move(r));
    }
    save_annotations(store, session_id, doc);
    save_packets(store, session_id, current);
    return doc;
}

AnnotationRecord act_on_annotation(SessionStore& store, std::string_view session_id, std::string_view annotation_id,
                                   const AnnotationAction& action, Millis now_ms, const ResponseLimits& limits) {
    auto lock = store.lock_session(session_id);
    auto doc = load_annotations(store, session_id);
    auto* record = doc.find(annotation_id);
    if (!record) fail(ErrorCode::not_found, "unknown annotation '" + std::string(annotation_id) + "'");
    switch (action.kind) {
        case AnnotationActionKind::edit:
            *record = apply_annotation_edit(*record, action.field, action.text, now_ms, limits);
            break;
        case AnnotationActionKind::verify: *record = verify_annotation(*record, now_ms); break;
        case AnnotationActionKind::discard: *record = discard_annotation(*record, now_ms); break;
        case AnnotationActionKind::restore: *record = restore_annotation(*record, now_ms); break;
    }
    save_annotations(store, session_id, doc);
    if (action.kind == AnnotationActionKind::edit && action.field == "emotion_descriptor") {
        set_backref(store, session_id, *record);
    }
    return *record;
}

std::size_t apply_review(SessionStore& store, std::string_view session_id, const nlohmann::json& actions,
                         Millis now_ms, const ResponseLimits& limits) {
    if (!actions.is_array()) fail(ErrorCode::invalid_input, "review actions must be a JSON array");
    auto lock = store.lock_session(session_id);
    std::size_t applied = 0;
    for (const auto& a : actions) {
        const auto packets = load_packets(store, session_id);
        const auto verb = a.value("action", std::string{});
        if (a.contains("packet")) {
            PacketAction action{packet_action_from_string(verb), std::nullopt, a.value("note", std::string{})};
            if (action.kind == PacketActionKind::edit) {
                if (!a.contains("boundary")) fail(ErrorCode::invalid_input, "edit action needs a boundary");
                action.new_boundary = a.at("boundary").get<Interval>();
            }
            act_on_packet(store, session_id, resolve_packet(packets, a.at("packet")), action, now_ms);
        } else if (a.contains("annotation_of")) {
            const auto pid = resolve_packet(packets, a.at("annotation_of"));
            const auto doc = load_annotations(store, session_id);
            const auto* record = doc.find_for_packet(pid);
            if (!record) fail(ErrorCode::not_found, "packet '" + pid + "' has no annotation");
            AnnotationAction action{annotation_action_from_string(verb), a.value("field", std::string{}),
                                    a.value("text", std::string{})};
            act_on_annotation(store, session_id, record->annotation_id, action, now_ms, limits);
        } else {
            fail(ErrorCode::invalid_input, "review action needs 'packet' or 'annotation_of'");
        }
        ++applied;
    }
    return applied;
}

std::size_t render_stream(const SessionStore& store, std::string_view session_id, std::string_view stream_id,
                          const RenderView& view, const std::filesystem::path& out_dir) {
    const auto stream = store.get_stream(session_id, stream_id);
    const auto frames = render_signal_frames(stream, view);
    std::filesystem::create_directories(out_dir);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05zu.ppm", i);
        write_file_atomic(out_dir / name, frames[i].to_ppm());
    }
    return frames.size();
}

}  // namespace emowb
