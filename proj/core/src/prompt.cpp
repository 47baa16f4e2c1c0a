#include "emowb/prompt.hpp"

#include <algorithm>
#include <cstdio>

#include "emowb/digest.hpp"
#include "emowb/error.hpp"
#include "emowb/store.hpp"
#include "text_util.hpp"

namespace emowb {

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_templates();
}

namespace {

bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

/// Calls `fn(name, begin, end)` for every `{name}` token of the body.
template <class Fn>
void scan_placeholders(std::string_view body, Fn&& fn) {
    std::size_t i = 0;
    while ((i = body.find('{', i)) != std::string_view::npos) {
        std::size_t j = i + 1;
        while (j < body.size() && is_placeholder_char(body[j])) ++j;
        if (j > i + 1 && j < body.size() && body[j] == '}') {
            fn(body.substr(i + 1, j - i - 1), i, j + 1);
            i = j + 1;
        } else {
            ++i;
        }
    }
}

std::string fmt_seconds(Millis ms) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", static_cast<double>(ms) / 1000.0);
    return buf;
}

}  // namespace

std::string_view to_string(TemplateModality m) {
    switch (m) {
        case TemplateModality::face: return "face";
        case TemplateModality::motion: return "motion";
        case TemplateModality::physio: return "physio";
        case TemplateModality::context: return "context";
        case TemplateModality::aggregate: return "aggregate";
    }
    return "face";
}

TemplateModality template_modality_from_string(std::string_view text) {
    for (auto m : {TemplateModality::face, TemplateModality::motion, TemplateModality::physio,
                   TemplateModality::context, TemplateModality::aggregate}) {
        if (to_string(m) == text) return m;
    }
    fail(ErrorCode::invalid_input, "unknown template modality '" + std::string(text) + "'");
}

const std::vector<std::string>& response_fields(TemplateModality m) {
    static const std::map<TemplateModality, std::vector<std::string>> fields{
        {TemplateModality::face, {"face_description"}},
        {TemplateModality::motion, {"motion_description"}},
        {TemplateModality::physio, {"physio_description"}},
        {TemplateModality::context, {"context_description"}},
        {TemplateModality::aggregate, {"multimodal_description", "emotion_descriptor"}},
    };
    return fields.at(m);
}

const std::vector<std::string>& allowed_placeholders() {
    static const std::vector<std::string> names{"event_window", "features", "keyframe_refs", "prior_descriptions"};
    return names;
}

std::vector<std::string> PromptTemplate::placeholders() const {
    std::vector<std::string> out;
    scan_placeholders(body, [&](std::string_view name, std::size_t, std::size_t) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.emplace_back(name);
    });
    return out;
}

PromptTemplate make_template(std::string template_id, TemplateModality modality, std::string body,
                             std::string version) {
    PromptTemplate t{std::move(template_id), modality, std::move(body), std::move(version), {}};
    if (t.template_id.empty()) fail(ErrorCode::invalid_input, "template id must not be empty");
    for (const auto& name : t.placeholders()) {
        const auto& allowed = allowed_placeholders();
        if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
            fail(ErrorCode::invalid_input, "template '" + t.template_id + "' uses unknown placeholder {" + name + "}");
        }
    }
    t.digest = sha256_hex(t.body);
    return t;
}

PromptTemplate parse_template(std::string_view text) {
    std::map<std::string, std::string, std::less<>> header;
    std::size_t pos = 0;
    bool found_separator = false;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line == "---") {
            found_separator = true;
            break;
        }
        if (detail::trim(line).empty()) continue;
        auto colon = line.find(':');
        if (colon == std::string_view::npos) {
            fail(ErrorCode::invalid_input, "template header line without ':': " + std::string(line));
        }
        header[std::string(detail::trim(line.substr(0, colon)))] = std::string(detail::trim(line.substr(colon + 1)));
    }
    if (!found_separator) fail(ErrorCode::invalid_input, "template has no '---' separator");
    for (const char* key : {"id", "modality", "version"}) {
        if (!header.count(key)) fail(ErrorCode::invalid_input, std::string("template header lacks '") + key + "'");
    }
    return make_template(header["id"], template_modality_from_string(header["modality"]),
                         std::string(text.substr(pos)), header["version"]);
}

TemplateSet TemplateSet::defaults() {
    TemplateSet set;
    for (const auto& [name, text] : detail::embedded_templates()) set.put(parse_template(text));
    for (auto m : {TemplateModality::face, TemplateModality::motion, TemplateModality::physio,
                   TemplateModality::context, TemplateModality::aggregate}) {
        set.get(m);
    }
    return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        fail(ErrorCode::not_found, "template directory '" + dir.string() + "' does not exist");
    }
    TemplateSet set = defaults();
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) set.put(parse_template(read_file(f)));
    return set;
}

void TemplateSet::put(PromptTemplate t) {
    const auto m = t.modality;
    by_modality_.insert_or_assign(m, std::move(t));
}

const PromptTemplate& TemplateSet::get(TemplateModality m) const {
    auto it = by_modality_.find(m);
    if (it == by_modality_.end()) fail(ErrorCode::not_found, "no template for modality " + std::string(to_string(m)));
    return it->second;
}

RenderedPrompt render_prompt(const PromptTemplate& t, const PromptVariables& vars) {
    std::string out;
    std::size_t copied = 0;
    scan_placeholders(t.body, [&](std::string_view name, std::size_t begin, std::size_t end) {
        auto it = vars.find(name);
        if (it == vars.end()) {
            fail(ErrorCode::invalid_input, "unresolved placeholder {" + std::string(name) + "} in template '" +
                                               t.template_id + "'");
        }
        out.append(t.body, copied, begin - copied);
        out += it->second;
        copied = end;
    });
    out.append(t.body, copied, std::string::npos);
    auto hash = sha256_hex(out);
    return {std::move(out), std::move(hash)};
}

std::string event_window_text(std::string_view session_id, const EventPacket& packet) {
    return "session " + std::string(session_id) + ", packet " + packet.packet_id + ", window " +
           std::to_string(packet.boundary.start_ms) + "-" + std::to_string(packet.boundary.end_ms) + " ms (" +
           fmt_seconds(packet.boundary.end_ms - packet.boundary.start_ms) + " s), anchor " +
           std::to_string(packet.anchor_ms) + " ms";
}

std::string features_text(const ModalityDescriptor& d) {
    std::string out;
    for (const auto& f : d.features) out += f.name + ": " + feature_text(f) + "\n";
    out += "summary: " + d.summary;
    return out;
}

std::string keyframe_refs_text(const std::vector<KeyframeRef>& refs) {
    if (refs.empty()) return "none";
    std::string out;
    for (const auto& k : refs) {
        if (!out.empty()) out += "\n";
        out += k.role + ": " + k.video_id + " frame " + std::to_string(k.frame_index) + " at " +
               std::to_string(k.t_ms) + " ms (" + k.uri + ")";
        if (k.clamped) out += " [clamped]";
    }
    return out;
}

std::optional<std::string> check_emotion_labels(std::string_view text, const std::vector<std::string>& vocabulary) {
    if (vocabulary.empty()) return std::nullopt;
    for (auto label : detail::split(text, ',')) {
        label = detail::trim(label);
        if (std::find(vocabulary.begin(), vocabulary.end(), label) == vocabulary.end()) {
            return "emotion label '" + std::string(label) + "' is not in the configured vocabulary";
        }
    }
    return std::nullopt;
}

ResponseCheck validate_response(std::string_view reply, const std::vector<std::string>& expected,
                                const ResponseLimits& limits) {
    ResponseCheck check;
    auto reject = [&](std::string why) {
        check.ok = false;
        check.fields.clear();
        check.error = std::move(why);
        return check;
    };
    for (auto line : detail::split(reply, '\n')) {
        line = detail::trim(line);
        if (line.empty()) continue;
        auto colon = line.find(':');
        if (colon == std::string_view::npos) return reject("line without 'field:' prefix: " + std::string(line.substr(0, 80)));
        const std::string key(detail::trim(line.substr(0, colon)));
        const std::string value(detail::trim(line.substr(colon + 1)));
        if (std::find(expected.begin(), expected.end(), key) == expected.end()) return reject("unexpected field '" + key + "'");
        if (check.fields.count(key)) return reject("duplicate field '" + key + "'");
        if (value.empty()) return reject("field '" + key + "' is empty");
        const auto limit = key == "emotion_descriptor" ? limits.max_descriptor_chars : limits.max_field_chars;
        if (value.size() > limit) {
            return reject("field '" + key + "' exceeds " + std::to_string(limit) + " characters");
        }
        if (key == "emotion_descriptor") {
            if (auto bad = check_emotion_labels(value, limits.emotion_vocabulary)) return reject(*bad);
        }
        check.fields.emplace(key, value);
    }
    for (const auto& key : expected) {
        if (!check.fields.count(key)) return reject("missing field '" + key + "'");
    }
    check.ok = true;
    return check;
}

}  // namespace emowb
