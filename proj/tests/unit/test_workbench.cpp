#include <algorithm>

#include "doctest.h"
#include "emowb/digest.hpp"
#include "emowb/error.hpp"
#include "pipeline.hpp"

using namespace emowb;

namespace {

std::optional<ErrorCode> code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

}  // namespace

TEST_CASE("fixture pipeline recovers every planted event and exports the reviewed packets") {
    SessionStore store(synth::scratch_dir("wb-pipeline"));
    const auto sid = synth::run_fixture_pipeline(store);
    const auto expected = synth::fixture_expectations();

    const auto layer = load_events(store, sid);
    const auto packets = load_packets(store, sid);
    REQUIRE(packets.packets.size() == expected["planted_events"].size());
    for (const auto& planted : expected["planted_events"]) {
        const Millis t = planted["t_ms"].get<Millis>();
        const auto method = planted["method"].get<std::string>();
        const bool found = std::any_of(layer.candidates.begin(), layer.candidates.end(), [&](const CandidateEvent& e) {
            return e.stream_id == planted["stream_id"] && to_string(e.method) == method && e.window.start_ms <= t &&
                   t <= e.window.end_ms;
        });
        CAPTURE(planted.dump());
        CHECK(found);
    }

    for (auto state : {"verified", "edited", "discarded"}) {
        for (const auto& ordinal : expected["review"][state]) {
            CHECK(to_string(packets.packets[ordinal.get<std::size_t>()].state) == state);
        }
    }
    const auto annotations = load_annotations(store, sid);
    CHECK(annotations.annotations.size() == 3);
    for (const auto& p : packets.packets) {
        REQUIRE(p.annotation.has_value());
        CHECK(annotations.find(p.annotation->annotation_id) != nullptr);
    }

    const auto file = parse_export(store.get_blob(BlobKind::export_file, sid));
    CHECK(file.records.size() == expected["eligible_after_review"].get<std::size_t>());
    CHECK(file.manifest.params_hashes == std::vector<std::string>{layer.params_hash});
    CHECK(file.records[1].fields.at("motion_description") ==
          std::optional<std::string>("Right hand lifts to shoulder height and returns; torso stays still."));
}

TEST_CASE("fixture transcript: the physio field is repaired on the second call") {
    SessionStore store(synth::scratch_dir("wb-physio"));
    const auto sid = synth::run_fixture_pipeline(store, false);
    for (const auto& r : load_annotations(store, sid).annotations) {
        const auto& physio = r.field("physio_description");
        if (physio.status != FieldStatus::ok) continue;
        int calls = 0;
        for (const auto& c : r.provenance.calls) calls += c.purpose == "physio";
        CHECK(calls == 2);
        CHECK(physio.raw_responses == std::vector<std::string>{"The skin conductance goes up."});
    }
}

TEST_CASE("ingest is idempotent and the index revision only moves on change") {
    const auto root = synth::scratch_dir("wb-ingest");
    SessionStore store(root, {"lobby", "height", "horror"});
    const auto manifest = synth::fixture_dir() / "manifest.json";
    const auto first = ingest_manifest(store, manifest);
    CHECK(first.index.index_revision == 1);
    const auto again = ingest_manifest(store, manifest);
    CHECK(again.index.index_revision == 1);
    CHECK(store.revision(BlobKind::index, first.session_id) == 1);
    CHECK(load_index(store, first.session_id) == first.index);
    CHECK(load_streams(store, first.session_id).size() == 3);
    CHECK(first.reports.size() == 3);

    SessionStore picky(synth::scratch_dir("wb-scenes"), {"height"});
    CHECK(code_of([&] { ingest_manifest(picky, manifest); }) == ErrorCode::invalid_input);
    CHECK_FALSE(picky.has_session("P01-lobby-01"));

    auto meta = store.get_session(first.session_id);
    meta.streams[0].source_path = "missing.csv";
    meta.session_id = "other";
    CHECK(code_of([&] { ingest_session(store, meta, synth::fixture_dir()); }) == ErrorCode::not_found);
    CHECK_FALSE(store.has_session("other"));
}

TEST_CASE("packet and annotation actions through the store; review errors") {
    SessionStore store(synth::scratch_dir("wb-actions"));
    const auto sid = synth::run_fixture_pipeline(store, false);
    const auto packets = load_packets(store, sid);
    const auto pid = packets.packets[0].packet_id;

    auto p = act_on_packet(store, sid, pid, PacketAction::discard(), 5);
    CHECK(p.state == PacketState::discarded);
    CHECK(load_packets(store, sid).find(pid)->state == PacketState::discarded);
    CHECK(code_of([&] { act_on_packet(store, sid, pid, PacketAction::verify(), 6); }) == ErrorCode::illegal_transition);
    CHECK(code_of([&] { act_on_packet(store, sid, "pkt-none", PacketAction::verify(), 6); }) == ErrorCode::not_found);

    const auto aid = packets.packets[0].annotation->annotation_id;
    auto r = act_on_annotation(store, sid, aid, {AnnotationActionKind::edit, "emotion_descriptor", "surprise"}, 7);
    CHECK(r.status == AnnotationStatus::edited);
    CHECK(load_packets(store, sid).find(pid)->annotation->emotion_descriptor == "surprise");
    CHECK(code_of([&] { act_on_annotation(store, sid, "ann-none", {}, 8); }) == ErrorCode::not_found);

    CHECK(code_of([&] { apply_review(store, sid, nlohmann::json::object(), 9); }) == ErrorCode::invalid_input);
    CHECK(code_of([&] { apply_review(store, sid, nlohmann::json::array({{{"action", "verify"}}}), 9); }) ==
          ErrorCode::invalid_input);
    CHECK(code_of([&] { apply_review(store, sid, nlohmann::json::array({{{"packet", 9}, {"action", "verify"}}}), 9); }) ==
          ErrorCode::not_found);
    CHECK(code_of([&] { apply_review(store, sid, nlohmann::json::array({{{"packet", 1}, {"action", "edit"}}}), 9); }) ==
          ErrorCode::invalid_input);
    CHECK(apply_review(store, sid, nlohmann::json::array({{{"packet", 1}, {"action", "verify"}}}), 9) == 1);
}

TEST_CASE("annotate_packet and parallel annotate_session agree with the sequential run") {
    SessionStore a(synth::scratch_dir("wb-seq"));
    SessionStore b(synth::scratch_dir("wb-par"));
    const auto sid = synth::run_fixture_pipeline(a, false);
    synth::run_fixture_pipeline(b, false);

    const auto cfg = load_config(synth::fixture_dir() / "workbench.conf");
    auto provider = MockProvider::from_file(cfg.mock_transcript.string());
    auto settings = synth::fixture_annotate_settings(cfg);
    settings.max_in_flight = 3;
    annotate_session(b, sid, provider, TemplateSet::defaults(), settings);
    CHECK(a.get_blob(BlobKind::annotations, sid) == b.get_blob(BlobKind::annotations, sid));

    const auto pid = load_packets(a, sid).packets[2].packet_id;
    const auto single = annotate_packet(b, sid, pid, provider, TemplateSet::defaults(), settings);
    CHECK(dump_pretty(single) == dump_pretty(*load_annotations(a, sid).find_for_packet(pid)));
    CHECK(a.get_blob(BlobKind::annotations, sid) == b.get_blob(BlobKind::annotations, sid));
    CHECK(code_of([&] { annotate_packet(b, sid, "pkt-none", provider, TemplateSet::defaults(), settings); }) ==
          ErrorCode::not_found);
}

TEST_CASE("render_stream writes one PPM per frame") {
    SessionStore store(synth::scratch_dir("wb-render"));
    const auto sid = ingest_manifest(store, synth::fixture_dir() / "manifest.json").session_id;
    RenderView view;
    view.start_ms = 40000;
    view.end_ms = 41000;
    view.fps = 5;
    const auto out = synth::scratch_dir("wb-render-out");
    CHECK(render_stream(store, sid, "wrist_eda", view, out) == 6);
    CHECK(std::filesystem::exists(out / "frame_00005.ppm"));
    CHECK(read_file(out / "frame_00000.ppm").rfind("P6\n320 120\n255\n", 0) == 0);
}
