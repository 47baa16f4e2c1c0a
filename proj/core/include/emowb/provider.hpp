#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emowb/types.hpp"

namespace emowb {

/// Keyframe handed to image-capable providers.
struct Attachment {
    std::string role;
    std::string video_id;
    std::string uri;
    std::int64_t frame_index = 0;
    Millis t_ms = 0;

    bool operator==(const Attachment&) const = default;
};

struct CompletionRequest {
    std::string purpose;  // template modality: face, motion, physio, context, aggregate
    std::string packet_id;
    std::string prompt;
    std::vector<std::string> response_fields;
    std::vector<Attachment> attachments;
    std::uint64_t seed = 0;
    int attempt = 0;  // 0 first call, 1 repair
};

struct ProviderCapabilities {
    bool text = true;
    bool image_input = false;
};

/// Text completion backend. `complete` throws Error(provider_failure) on
/// transport problems; malformed replies are returned as-is.
class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual std::string model_id() const = 0;
    virtual ProviderCapabilities capabilities() const = 0;
    virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Deterministic provider driven by a transcript:
///
///   {"model_id": "mock-1", "mode": "synthetic" | "echo", "image_input": false,
///    "vocabulary": ["joy", ...],
///    "responses": {"face": ["reply for attempt 0", "reply for attempt 1"],
///                  "<packet_id>/motion": [...]},
///    "transport_failures": ["physio", "<packet_id>/context"]}
///
/// A scripted reply is looked up by "<packet_id>/<purpose>" then "<purpose>"
/// and indexed by attempt. Without a script, `synthetic` answers every
/// requested field with a prompt-hash tag and `echo` repeats the flattened
/// prompt in description fields.
class MockProvider : public LlmProvider {
public:
    MockProvider();
    explicit MockProvider(const nlohmann::json& transcript);
    static MockProvider from_file(const std::string& path);

    std::string model_id() const override { return model_id_; }
    ProviderCapabilities capabilities() const override { return {true, image_input_}; }
    std::string complete(const CompletionRequest& request) override;

private:
    std::string model_id_ = "mock-synthetic";
    bool echo_ = false;
    bool image_input_ = false;
    std::vector<std::string> vocabulary_;
    std::map<std::string, std::vector<std::string>> responses_;
    std::vector<std::string> transport_failures_;
};

struct HttpProviderConfig {
    std::string endpoint;  // full chat-completions URL
    std::string api_key;
    std::string model;
    bool image_input = false;
    int timeout_s = 120;

    /// EMOWB_LLM_ENDPOINT, EMOWB_LLM_API_KEY, EMOWB_LLM_MODEL, EMOWB_LLM_IMAGE_INPUT
    /// override the given values.
    static HttpProviderConfig from_env(HttpProviderConfig base);
};

/// OpenAI-compatible chat-completions client.
class HttpProvider : public LlmProvider {
public:
    explicit HttpProvider(HttpProviderConfig config);

    std::string model_id() const override { return config_.model; }
    ProviderCapabilities capabilities() const override { return {true, config_.image_input}; }
    std::string complete(const CompletionRequest& request) override;

    /// Request body sent for `request`.
    nlohmann::json request_body(const CompletionRequest& request) const;

private:
    HttpProviderConfig config_;
    std::string base_;  // scheme://host[:port]
    std::string path_;
};

}  // namespace emowb
