#include "emowb/provider.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "emowb/digest.hpp"
#include "emowb/error.hpp"
#include "emowb/store.hpp"
#include "text_util.hpp"

namespace emowb {

namespace {

constexpr std::size_t kEchoLimit = 4000;

std::string echo_text(std::string_view prompt) {
    static const std::regex evidence(R"(^([a-z_]+_description|summary): (.+)$)");
    std::string out;
    for (auto line : detail::split(prompt, '\n')) {
        std::string l(detail::trim(line));
        std::smatch m;
        if (!std::regex_match(l, m, evidence) || m[2].str().front() == '<') continue;
        if (!out.empty()) out += " | ";
        out += m[2].str();
    }
    if (out.empty()) {
        for (char c : prompt) out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    if (out.size() > kEchoLimit) out.resize(kEchoLimit);
    return out;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

}  // namespace

MockProvider::MockProvider() = default;

MockProvider::MockProvider(const nlohmann::json& transcript) {
    if (!transcript.is_object()) fail(ErrorCode::invalid_input, "mock transcript must be a JSON object");
    model_id_ = transcript.value("model_id", std::string("mock-synthetic"));
    const auto mode = transcript.value("mode", std::string("synthetic"));
    if (mode != "synthetic" && mode != "echo") fail(ErrorCode::invalid_input, "mock mode must be synthetic or echo");
    echo_ = mode == "echo";
    image_input_ = transcript.value("image_input", false);
    vocabulary_ = transcript.value("vocabulary", std::vector<std::string>{});
    if (transcript.contains("responses")) {
        for (const auto& [key, replies] : transcript.at("responses").items()) {
            responses_[key] = replies.get<std::vector<std::string>>();
        }
    }
    transport_failures_ = transcript.value("transport_failures", std::vector<std::string>{});
}

MockProvider MockProvider::from_file(const std::string& path) {
    const auto text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::invalid_input, "mock transcript '" + path + "' is not valid JSON: " + e.what());
    }
    return MockProvider(j);
}

std::string MockProvider::complete(const CompletionRequest& request) {
    const std::string scoped = request.packet_id + "/" + request.purpose;
    for (const auto& key : {scoped, request.purpose}) {
        if (std::find(transport_failures_.begin(), transport_failures_.end(), key) != transport_failures_.end()) {
            fail(ErrorCode::provider_failure, "mock transport failure for " + key,
                 {{"purpose", request.purpose}, {"packet_id", request.packet_id}});
        }
    }
    for (const auto& key : {scoped, request.purpose}) {
        auto it = responses_.find(key);
        if (it != responses_.end() && request.attempt >= 0 &&
            static_cast<std::size_t>(request.attempt) < it->second.size()) {
            return it->second[static_cast<std::size_t>(request.attempt)];
        }
    }

    const auto tag = sha256_hex(request.prompt + "\n" + std::to_string(request.seed)).substr(0, 8);
    std::string reply;
    for (const auto& field : request.response_fields) {
        std::string value;
        if (field == "emotion_descriptor") {
            value = vocabulary_.empty()
                        ? std::string("neutral")
                        : vocabulary_[std::stoul(tag, nullptr, 16) % vocabulary_.size()];
        } else if (echo_) {
            value = echo_text(request.prompt);
        } else {
            value = request.purpose + " observation " + tag;
        }
        reply += field + ": " + value + "\n";
    }
    return reply;
}

HttpProviderConfig HttpProviderConfig::from_env(HttpProviderConfig base) {
    base.endpoint = env_or("EMOWB_LLM_ENDPOINT", base.endpoint);
    base.api_key = env_or("EMOWB_LLM_API_KEY", base.api_key);
    base.model = env_or("EMOWB_LLM_MODEL", base.model);
    const auto image = env_or("EMOWB_LLM_IMAGE_INPUT", base.image_input ? "1" : "0");
    base.image_input = image == "1" || image == "true";
    return base;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url)) {
        fail(ErrorCode::invalid_input, "provider endpoint must be an http(s) URL, got '" + config_.endpoint + "'");
    }
    if (config_.model.empty()) fail(ErrorCode::invalid_input, "provider model id is not configured");
    base_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

nlohmann::json HttpProvider::request_body(const CompletionRequest& request) const {
    nlohmann::json content;
    if (config_.image_input && !request.attachments.empty()) {
        content = nlohmann::json::array({{{"type", "text"}, {"text", request.prompt}}});
        for (const auto& a : request.attachments) {
            content.push_back({{"type", "image_url"},
                               {"image_url", {{"url", a.uri + "#frame=" + std::to_string(a.frame_index)}}}});
        }
    } else {
        content = request.prompt;
    }
    return {{"model", config_.model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", std::move(content)}}})},
            {"temperature", 0},
            {"seed", request.seed}};
}

std::string HttpProvider::complete(const CompletionRequest& request) {
    httplib::Client client(base_);
    client.set_connection_timeout(config_.timeout_s);
    client.set_read_timeout(config_.timeout_s);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    auto res = client.Post(path_, headers, request_body(request).dump(), "application/json");
    if (!res) {
        fail(ErrorCode::provider_failure, "provider request failed: " + httplib::to_string(res.error()),
             {{"endpoint", config_.endpoint}});
    }
    if (res->status != 200) {
        fail(ErrorCode::provider_failure, "provider returned HTTP " + std::to_string(res->status),
             {{"endpoint", config_.endpoint}, {"status", res->status}});
    }
    try {
        auto body = nlohmann::json::parse(res->body);
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::provider_failure, std::string("unexpected provider response: ") + e.what());
    }
}

}  // namespace emowb
