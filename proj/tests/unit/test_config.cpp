#include "doctest.h"
#include "emowb/config.hpp"
#include "emowb/error.hpp"
#include "emowb/store.hpp"
#include "synth.hpp"

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

TEST_CASE("config keys, comments and relative paths") {
    const auto c = parse_config(
        "# workbench\n"
        "store_root = store\n"
        "scenes = lobby, height ,horror\n"
        "serve.host = 0.0.0.0\n"
        "serve.port = 9000   # trailing comment\n"
        "serve.workers = 4\n"
        "provider.kind = http\n"
        "provider.endpoint = https://llm.example/v1/chat/completions\n"
        "provider.model = m\n"
        "provider.image_input = true\n"
        "provider.mock_transcript = /abs/t.json\n"
        "annotate.max_in_flight = 3\n"
        "annotate.seed = 11\n"
        "templates_dir = tmpl\n"
        "emotion_vocabulary = joy, fear\n"
        "describe.au_threshold = 1.5\n"
        "describe.root_joint = pelvis\n"
        "detector.au.min_intensity = 2.5\n"
        "detector.physio.smooth_ms.eda = 750\n",
        "/base");
    CHECK(c.store_root == std::filesystem::path("/base/store"));
    CHECK(c.scenes == std::vector<std::string>{"lobby", "height", "horror"});
    CHECK(c.serve_host == "0.0.0.0");
    CHECK(c.serve_port == 9000);
    CHECK(c.serve_workers == 4);
    CHECK(c.provider_kind == "http");
    CHECK(c.http.endpoint == "https://llm.example/v1/chat/completions");
    CHECK(c.http.image_input);
    CHECK(c.mock_transcript == std::filesystem::path("/abs/t.json"));
    CHECK(c.max_in_flight == 3);
    CHECK(c.seed == 11);
    CHECK(c.templates_dir == std::filesystem::path("/base/tmpl"));
    CHECK(c.emotion_vocabulary == std::vector<std::string>{"joy", "fear"});
    CHECK(c.describe.au_threshold == 1.5);
    CHECK(c.describe.root_joint == "pelvis");
    CHECK(c.detector.au.min_intensity == 2.5);
    CHECK(c.detector.physio.smooth_ms.at(ModalityKind::eda) == 750);

    const auto defaults = parse_config("");
    CHECK(defaults.serve_port == 8080);
    CHECK(defaults.provider_kind.empty());
    CHECK(defaults.detector == DetectorParams{});
}

TEST_CASE("config errors") {
    for (const char* bad : {"colour = blue\n", "serve.port = eighty\n", "serve.port = 70000\n", "serve.workers = 0\n",
                            "provider.kind = oracle\n", "provider.image_input = maybe\n", "just a line\n",
                            "detector.au.nope = 1\n", "detector.au.min_intensity = -1\n",
                            "detector.motion.frame_window_ms = 0\n", "detector.physio = 3\n",
                            "describe.au_threshold = x\n"}) {
        CAPTURE(bad);
        CHECK(code_of([&] { parse_config(bad); }) == ErrorCode::invalid_input);
    }
    CHECK(code_of([] { load_config("/nonexistent/emowb.conf"); }).has_value());
}

TEST_CASE("load_config resolves against the file's directory (fixture config)") {
    const auto c = load_config(synth::fixture_dir() / "workbench.conf");
    CHECK(c.provider_kind == "mock");
    CHECK(c.mock_transcript == synth::fixture_dir() / "transcript.json");
    CHECK(c.seed == 7);
    CHECK(c.emotion_vocabulary.size() == 4);
}

TEST_CASE("set_detector_param by dotted path keeps other fields") {
    DetectorParams p;
    set_detector_param(p, "motion.threshold_k", "1.25");
    set_detector_param(p, "merge_gap_ms", "900");
    CHECK(p.motion.threshold_k == 1.25);
    CHECK(p.merge_gap_ms == 900);
    CHECK(p.au == AuPeakParams{});
    CHECK(code_of([&] { set_detector_param(p, "merge_gap_ms", "1.5"); }) == ErrorCode::invalid_input);
    CHECK(code_of([&] { set_detector_param(p, "motion", "1"); }) == ErrorCode::invalid_input);
    CHECK(code_of([&] { set_detector_param(p, "motion.threshold_k", "nan"); }) == ErrorCode::invalid_input);
}

TEST_CASE("params file: JSON merge patch or key = value lines") {
    const auto dir = synth::scratch_dir("params");
    write_file_atomic(dir / "p.json", R"({"au": {"min_intensity": 0.75}, "merge_gap_ms": 100})");
    const auto a = load_params_file(dir / "p.json");
    CHECK(a.au.min_intensity == 0.75);
    CHECK(a.au.min_prominence == AuPeakParams{}.min_prominence);
    CHECK(a.merge_gap_ms == 100);

    write_file_atomic(dir / "p.txt", "au.min_intensity = 0.75\nmerge_gap_ms = 100\n");
    CHECK(load_params_file(dir / "p.txt") == a);

    write_file_atomic(dir / "bad.json", R"({"au": {"min_intensity": "high"}})");
    CHECK(code_of([&] { load_params_file(dir / "bad.json"); }) == ErrorCode::invalid_input);
    write_file_atomic(dir / "neg.txt", "merge_gap_ms = -5\n");
    CHECK(code_of([&] { load_params_file(dir / "neg.txt"); }) == ErrorCode::invalid_input);
}
