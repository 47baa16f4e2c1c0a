#include <thread>

#include <httplib.h>

#include "doctest.h"
#include "emowb/error.hpp"
#include "emowb/prompt.hpp"
#include "emowb/provider.hpp"
#include "emowb/store.hpp"
#include "synth.hpp"

using namespace emowb;

namespace {

CompletionRequest request(std::string purpose, int attempt = 0, std::string prompt = "prompt") {
    CompletionRequest r;
    r.purpose = std::move(purpose);
    r.packet_id = "pkt-a";
    r.prompt = std::move(prompt);
    r.response_fields = response_fields(template_modality_from_string(r.purpose));
    r.attempt = attempt;
    r.seed = 7;
    return r;
}

std::optional<ErrorCode> code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

}  // namespace

TEST_CASE("mock: scripted replies by packet scope, purpose and attempt") {
    MockProvider mock(nlohmann::json{
        {"model_id", "m1"},
        {"responses", {{"face", {"bad", "face_description: good"}}, {"pkt-a/motion", {"motion_description: scoped"}}}}});
    CHECK(mock.model_id() == "m1");
    CHECK(mock.complete(request("face", 0)) == "bad");
    CHECK(mock.complete(request("face", 1)) == "face_description: good");
    CHECK(mock.complete(request("motion")) == "motion_description: scoped");
    auto other = request("motion");
    other.packet_id = "pkt-b";
    CHECK(validate_response(mock.complete(other), {"motion_description"}).ok);  // synthetic fallback
    // attempts past the script fall back to the synthetic reply
    CHECK(validate_response(mock.complete(request("face", 2)), {"face_description"}).ok);
}

TEST_CASE("mock: synthetic replies are valid, deterministic and prompt-sensitive") {
    MockProvider mock(nlohmann::json{{"vocabulary", {"joy", "fear"}}});
    for (const auto* purpose : {"face", "motion", "physio", "context", "aggregate"}) {
        const auto r = request(purpose);
        const auto reply = mock.complete(r);
        ResponseLimits limits;
        limits.emotion_vocabulary = {"joy", "fear"};
        CHECK(validate_response(reply, r.response_fields, limits).ok);
        CHECK(mock.complete(r) == reply);
        CHECK(MockProvider(nlohmann::json{{"vocabulary", {"joy", "fear"}}}).complete(r) == reply);
    }
    CHECK(mock.complete(request("face", 0, "a")) != mock.complete(request("face", 0, "b")));
    auto seeded = request("face");
    seeded.seed = 8;
    CHECK(mock.complete(seeded) != mock.complete(request("face")));
    CHECK(MockProvider().complete(request("aggregate")).find("emotion_descriptor: neutral") != std::string::npos);
}

TEST_CASE("mock: echo repeats the evidence lines of the prompt") {
    MockProvider echo(nlohmann::json{{"mode", "echo"}});
    const auto reply = echo.complete(request("aggregate", 0,
                                             "intro\nface_description: smiling\nmotion_description: waving\n"
                                             "multimodal_description: <placeholder>\n"));
    const auto check = validate_response(reply, response_fields(TemplateModality::aggregate));
    REQUIRE(check.ok);
    CHECK(check.fields.at("multimodal_description") == "smiling | waving");
}

TEST_CASE("mock: transport failures and bad transcripts") {
    MockProvider mock(nlohmann::json{{"transport_failures", {"physio", "pkt-a/context"}}});
    CHECK(code_of([&] { mock.complete(request("physio")); }) == ErrorCode::provider_failure);
    CHECK(code_of([&] { mock.complete(request("context")); }) == ErrorCode::provider_failure);
    CHECK_FALSE(code_of([&] { mock.complete(request("face")); }).has_value());
    CHECK(code_of([] { MockProvider(nlohmann::json::array()); }) == ErrorCode::invalid_input);
    CHECK(code_of([] { MockProvider(nlohmann::json{{"mode", "oracle"}}); }) == ErrorCode::invalid_input);

    const auto dir = synth::scratch_dir("provider");
    write_file_atomic(dir / "t.json", "{not json");
    CHECK(code_of([&] { MockProvider::from_file((dir / "t.json").string()); }) == ErrorCode::invalid_input);
    CHECK(MockProvider::from_file((synth::fixture_dir() / "transcript.json").string()).model_id() == "mock-fixture-1");
}

TEST_CASE("http provider: request body, images only when declared") {
    HttpProviderConfig cfg{"http://127.0.0.1:1/v1/chat/completions", "", "model-x", false, 1};
    HttpProvider text_only(cfg);
    auto r = request("context");
    r.attachments = {{"anchor", "pov", "media/pov.mp4", 12, 400}};
    auto body = text_only.request_body(r);
    CHECK(body["model"] == "model-x");
    CHECK(body["messages"][0]["content"] == "prompt");
    CHECK(body["seed"] == 7);
    CHECK(body["temperature"] == 0);

    cfg.image_input = true;
    auto with_images = HttpProvider(cfg).request_body(r);
    CHECK(with_images["messages"][0]["content"][1]["image_url"]["url"] == "media/pov.mp4#frame=12");

    CHECK(code_of([] { HttpProvider(HttpProviderConfig{"ftp://x", "", "m", false, 1}); }) == ErrorCode::invalid_input);
    CHECK(code_of([] { HttpProvider(HttpProviderConfig{"http://x", "", "", false, 1}); }) == ErrorCode::invalid_input);
    CHECK(code_of([&] { text_only.complete(r); }) == ErrorCode::provider_failure);
}

TEST_CASE("http provider: round trip against a local chat-completions server") {
    httplib::Server server;
    std::string seen_auth;
    nlohmann::json seen_body;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        seen_body = nlohmann::json::parse(req.body);
        nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "face_description: ok"}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    server.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("{}", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const auto base = "http://127.0.0.1:" + std::to_string(port);
    HttpProvider provider({base + "/v1/chat/completions", "secret", "model-x", false, 5});
    CHECK(provider.complete(request("face")) == "face_description: ok");
    CHECK(seen_auth == "Bearer secret");
    CHECK(seen_body["messages"][0]["content"] == "prompt");
    HttpProvider broken({base + "/broken", "", "model-x", false, 5});
    CHECK(code_of([&] { broken.complete(request("face")); }) == ErrorCode::provider_failure);

    server.stop();
    t.join();
}
