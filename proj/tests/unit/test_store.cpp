#include <thread>

#include "doctest.h"
#include "emowb/digest.hpp"
#include "emowb/error.hpp"
#include "emowb/store.hpp"
#include "synth.hpp"

using namespace emowb;

namespace {

SessionMeta meta(std::string sid, std::string participant, std::string scene) {
    SessionMeta m;
    m.session_id = std::move(sid);
    m.participant_id = std::move(participant);
    m.scene_id = std::move(scene);
    m.recording_epoch_ms = 1'700'000'000'000;
    m.streams = {{"eda", ModalityKind::eda, 4.0, "eda.csv", 0}};
    m.videos = {{"pov", "pov.mp4", 30.0, 300, 0, VideoKind::first_person, std::nullopt}};
    return m;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an emowb::Error");
    return ErrorCode::invalid_input;
}

}  // namespace

TEST_CASE("sha256 matches published vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(short_id("ev-", "abc") == "ev-ba7816bf8f01");
}

TEST_CASE("json digest ignores key order") {
    auto a = nlohmann::json::parse(R"({"b": 1, "a": [1, 2]})");
    auto b = nlohmann::json::parse(R"({"a": [1, 2], "b": 1})");
    CHECK(json_digest(a) == json_digest(b));
    CHECK(dump_pretty(a).back() == '\n');
}

TEST_CASE("session put is idempotent and conflicts on a different payload") {
    SessionStore store(synth::scratch_dir("store-put"), {"lobby", "height"});
    const auto m = meta("s1", "P01", "lobby");
    CHECK(store.put_session(m) == "s1");
    CHECK_NOTHROW(store.put_session(m));
    auto changed = m;
    changed.recording_epoch_ms += 1;
    CHECK(code_of([&] { store.put_session(changed); }) == ErrorCode::conflict);
    CHECK(store.get_session("s1") == m);
    CHECK(code_of([&] { store.get_session("nope"); }) == ErrorCode::not_found);
}

TEST_CASE("unknown scene is rejected when scenes are configured") {
    SessionStore store(synth::scratch_dir("store-scene"), {"lobby"});
    CHECK(code_of([&] { store.put_session(meta("s1", "P01", "ocean")); }) == ErrorCode::invalid_input);
    SessionStore open(synth::scratch_dir("store-scene-open"));
    CHECK_NOTHROW(open.put_session(meta("s1", "P01", "ocean")));
}

TEST_CASE("list_sessions sorts and filters") {
    SessionStore store(synth::scratch_dir("store-list"));
    store.put_session(meta("c", "P02", "lobby"));
    store.put_session(meta("b", "P01", "horror"));
    store.put_session(meta("a", "P01", "lobby"));
    auto all = store.list_sessions();
    REQUIRE(all.size() == 3);
    CHECK(all[0].session_id == "b");
    CHECK(all[1].session_id == "a");
    CHECK(all[2].session_id == "c");
    SessionFilter f;
    f.participant_id = "P01";
    CHECK(store.list_sessions(f).size() == 2);
    f.scene_id = "lobby";
    auto one = store.list_sessions(f);
    REQUIRE(one.size() == 1);
    CHECK(one[0].session_id == "a");
}

TEST_CASE("catalog survives reopening the store") {
    auto root = synth::scratch_dir("store-reopen");
    {
        SessionStore store(root);
        store.put_session(meta("s1", "P01", "lobby"));
        store.put_blob(BlobKind::events, "s1", "{}\n");
    }
    SessionStore again(root);
    CHECK(again.has_session("s1"));
    CHECK(again.get_blob(BlobKind::events, "s1") == "{}\n");
    CHECK(again.revision(BlobKind::events, "s1") == 1);
}

TEST_CASE("blob revision moves only when bytes change") {
    SessionStore store(synth::scratch_dir("store-rev"));
    store.put_session(meta("s1", "P01", "lobby"));
    CHECK(store.revision(BlobKind::packets, "s1") == 0);
    CHECK_FALSE(store.has_blob(BlobKind::packets, "s1"));
    store.put_blob(BlobKind::packets, "s1", "one");
    store.put_blob(BlobKind::packets, "s1", "one");
    CHECK(store.revision(BlobKind::packets, "s1") == 1);
    store.put_blob(BlobKind::packets, "s1", "two");
    CHECK(store.revision(BlobKind::packets, "s1") == 2);
    CHECK(store.get_blob(BlobKind::packets, "s1") == "two");
    CHECK(code_of([&] { store.get_blob(BlobKind::annotations, "s1"); }) == ErrorCode::not_found);
    CHECK(code_of([&] { store.put_blob(BlobKind::report, "s1", "x"); }) == ErrorCode::invalid_input);
    CHECK(code_of([&] { store.put_blob(BlobKind::report, "s1", "x", "../evil"); }) == ErrorCode::invalid_input);
}

TEST_CASE("stream tsv round trip keeps values and gaps exactly") {
    synth::Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = synth::random_au(rng);
        const StreamEntry entry{s.stream_id, s.modality, s.rate_hz, "", 0};
        auto back = read_stream_tsv(write_stream_tsv(s), entry);
        CHECK(back == s);
    }
}

TEST_CASE("stream blobs round trip through the store") {
    SessionStore store(synth::scratch_dir("store-stream"));
    auto m = meta("s1", "P01", "lobby");
    store.put_session(m);
    auto s = synth::make_stream("eda", ModalityKind::eda, {"eda"}, {0, 250, 500}, {1.0, NAN, 1.5}, 4.0);
    store.put_stream("s1", s);
    CHECK(store.get_stream("s1", "eda") == s);
    CHECK(code_of([&] { store.get_stream("s1", "nope"); }) == ErrorCode::not_found);
}

TEST_CASE("concurrent writers to different sessions and one session") {
    SessionStore store(synth::scratch_dir("store-threads"));
    for (int i = 0; i < 4; ++i) store.put_session(meta("s" + std::to_string(i), "P01", "lobby"));
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            const auto sid = "s" + std::to_string(t % 4);
            for (int k = 0; k < 25; ++k) {
                auto lock = store.lock_session(sid);
                std::string current = store.has_blob(BlobKind::events, sid) ? store.get_blob(BlobKind::events, sid) : "";
                store.put_blob(BlobKind::events, sid, current + "x");
            }
        });
    }
    for (auto& th : threads) th.join();
    for (int i = 0; i < 4; ++i) {
        const auto sid = "s" + std::to_string(i);
        CHECK(store.get_blob(BlobKind::events, sid) == std::string(50, 'x'));
        CHECK(store.revision(BlobKind::events, sid) == 50);
    }
}
