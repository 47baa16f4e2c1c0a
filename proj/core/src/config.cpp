#include "emowb/config.hpp"

#include <charconv>

#include "emowb/error.hpp"
#include "emowb/store.hpp"
#include "text_util.hpp"

namespace emowb {

namespace {

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> out;
    for (auto item : detail::split(value, ',')) {
        item = detail::trim(item);
        if (!item.empty()) out.emplace_back(item);
    }
    return out;
}

template <class Int>
Int parse_int(std::string_view key, std::string_view value) {
    Int v{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        fail(ErrorCode::invalid_input, "config key '" + std::string(key) + "' needs an integer, got '" + std::string(value) + "'");
    }
    return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail(ErrorCode::invalid_input, "config key '" + std::string(key) + "' needs true or false");
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view value) {
    std::filesystem::path p{std::string(value)};
    return p.is_relative() && !base.empty() ? base / p : p;
}

/// (key, value) pairs of a `key = value` text, in file order.
std::vector<std::pair<std::string, std::string>> key_values(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t lineno = 0;
    for (auto line : detail::lines(text)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            fail(ErrorCode::invalid_input, "line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return out;
}

}  // namespace

void set_detector_param(DetectorParams& params, std::string_view key, std::string_view value) {
    nlohmann::json j = params;
    nlohmann::json* node = &j;
    for (auto part : detail::split(key, '.')) {
        const std::string name(part);
        if (!node->is_object() || !node->contains(name)) {
            fail(ErrorCode::invalid_input, "unknown detector parameter '" + std::string(key) + "'");
        }
        node = &(*node)[name];
    }
    if (node->is_number_integer()) {
        *node = parse_int<std::int64_t>(key, value);
    } else if (node->is_number()) {
        auto v = detail::parse_finite(value);
        if (!v) fail(ErrorCode::invalid_input, "detector parameter '" + std::string(key) + "' needs a number");
        *node = *v;
    } else {
        fail(ErrorCode::invalid_input, "detector parameter '" + std::string(key) + "' is not a scalar");
    }
    params = j.get<DetectorParams>();
}

DetectorParams load_params_file(const std::filesystem::path& path, DetectorParams base) {
    const auto text = read_file(path);
    const auto body = detail::trim(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json j = base;
        try {
            j.merge_patch(nlohmann::json::parse(text));
            base = j.get<DetectorParams>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::invalid_input, "params file '" + path.string() + "': " + e.what());
        }
    } else {
        for (const auto& [key, value] : key_values(text)) set_detector_param(base, key, value);
    }
    validate(base);
    return base;
}

Config parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    Config c;
    for (const auto& [key, value] : key_values(text)) {
        if (key == "store_root") {
            c.store_root = resolve(base_dir, value);
        } else if (key == "scenes") {
            c.scenes = split_list(value);
        } else if (key == "serve.host") {
            c.serve_host = value;
        } else if (key == "serve.port") {
            c.serve_port = parse_int<int>(key, value);
            if (c.serve_port < 0 || c.serve_port > 65535) fail(ErrorCode::invalid_input, "serve.port out of range");
        } else if (key == "serve.workers") {
            c.serve_workers = parse_int<std::size_t>(key, value);
            if (c.serve_workers == 0) fail(ErrorCode::invalid_input, "serve.workers must be > 0");
        } else if (key == "provider.kind") {
            if (value != "mock" && value != "http") fail(ErrorCode::invalid_input, "provider.kind must be mock or http");
            c.provider_kind = value;
        } else if (key == "provider.mock_transcript") {
            c.mock_transcript = resolve(base_dir, value);
        } else if (key == "provider.endpoint") {
            c.http.endpoint = value;
        } else if (key == "provider.model") {
            c.http.model = value;
        } else if (key == "provider.api_key") {
            c.http.api_key = value;
        } else if (key == "provider.image_input") {
            c.http.image_input = parse_bool(key, value);
        } else if (key == "provider.timeout_s") {
            c.http.timeout_s = parse_int<int>(key, value);
        } else if (key == "annotate.max_in_flight") {
            c.max_in_flight = parse_int<std::size_t>(key, value);
            if (c.max_in_flight == 0) fail(ErrorCode::invalid_input, "annotate.max_in_flight must be > 0");
        } else if (key == "annotate.seed") {
            c.seed = parse_int<std::uint64_t>(key, value);
        } else if (key == "templates_dir") {
            c.templates_dir = resolve(base_dir, value);
        } else if (key == "emotion_vocabulary") {
            c.emotion_vocabulary = split_list(value);
        } else if (key == "describe.au_threshold") {
            auto v = detail::parse_finite(value);
            if (!v || *v < 0) fail(ErrorCode::invalid_input, "describe.au_threshold must be a number >= 0");
            c.describe.au_threshold = *v;
        } else if (key == "describe.root_joint") {
            c.describe.root_joint = value;
        } else if (key.rfind("detector.", 0) == 0) {
            set_detector_param(c.detector, std::string_view(key).substr(9), value);
        } else {
            fail(ErrorCode::invalid_input, "unknown config key '" + key + "'");
        }
    }
    validate(c.detector);
    return c;
}

Config load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.parent_path());
}

}  // namespace emowb
