#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emowb/describe.hpp"
#include "emowb/events.hpp"
#include "emowb/provider.hpp"

namespace emowb {

/// Workbench configuration. Text format, one `key = value` per line, `#`
/// starts a comment; relative paths resolve against the file's directory.
///
///   store_root = store
///   scenes = lobby, height, horror
///   serve.host = 127.0.0.1
///   serve.port = 8080
///   serve.workers = 2
///   provider.kind = mock            # mock | http
///   provider.mock_transcript = transcript.json
///   provider.endpoint = https://host/v1/chat/completions
///   provider.model = some-model
///   provider.image_input = false
///   annotate.max_in_flight = 2
///   annotate.seed = 0
///   templates_dir = templates
///   emotion_vocabulary = joy, fear, surprise
///   describe.au_threshold = 1.0
///   describe.root_joint = pelvis
///   detector.au.min_intensity = 1.5   # any DetectorParams field by path
struct Config {
    std::filesystem::path store_root;
    std::vector<std::string> scenes;

    std::string serve_host = "127.0.0.1";
    int serve_port = 8080;
    std::size_t serve_workers = 2;

    std::string provider_kind;  // empty: none configured
    std::filesystem::path mock_transcript;
    HttpProviderConfig http;

    std::size_t max_in_flight = 2;
    std::uint64_t seed = 0;
    std::filesystem::path templates_dir;
    std::vector<std::string> emotion_vocabulary;

    DetectorParams detector;
    DescriberOptions describe;
};

/// Parses and validates (detector params included).
Config parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

/// Sets one DetectorParams field by dotted path, e.g. "physio.smooth_ms.eda".
void set_detector_param(DetectorParams& params, std::string_view key, std::string_view value);

/// Params file: a JSON object merged over `base`, or `key = value` lines
/// using set_detector_param paths.
DetectorParams load_params_file(const std::filesystem::path& path, DetectorParams base = {});

}  // namespace emowb
