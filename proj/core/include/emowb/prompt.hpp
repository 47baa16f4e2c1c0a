#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emowb/describe.hpp"

namespace emowb {

enum class TemplateModality { face, motion, physio, context, aggregate };

std::string_view to_string(TemplateModality m);
TemplateModality template_modality_from_string(std::string_view text);

/// Annotation fields a template asks the provider for, in reply order.
const std::vector<std::string>& response_fields(TemplateModality m);

/// The four placeholders a template body may reference.
const std::vector<std::string>& allowed_placeholders();

struct PromptTemplate {
    std::string template_id;
    TemplateModality modality = TemplateModality::face;
    std::string body;
    std::string version;
    std::string digest;  // sha256 of body

    /// Placeholder names used by the body, in first-use order.
    std::vector<std::string> placeholders() const;
};

/// Builds a template and checks its placeholders.
PromptTemplate make_template(std::string template_id, TemplateModality modality, std::string body,
                             std::string version);

/// Template file: `key: value` header lines (id, modality, version), a line
/// `---`, then the body verbatim.
PromptTemplate parse_template(std::string_view text);

/// One template per modality.
class TemplateSet {
public:
    /// Bundled templates compiled into the library.
    static TemplateSet defaults();
    /// Defaults overridden by every `*.txt` file in `dir`.
    static TemplateSet load(const std::filesystem::path& dir);

    void put(PromptTemplate t);
    const PromptTemplate& get(TemplateModality m) const;

private:
    std::map<TemplateModality, PromptTemplate> by_modality_;
};

using PromptVariables = std::map<std::string, std::string, std::less<>>;

struct RenderedPrompt {
    std::string text;
    std::string hash;  // sha256 of text
};

/// Pure `{name}` substitution; a placeholder missing from `vars` is an error.
RenderedPrompt render_prompt(const PromptTemplate& t, const PromptVariables& vars);

std::string event_window_text(std::string_view session_id, const EventPacket& packet);
/// One `name: value` line per feature in descriptor order, then `summary: ...`.
std::string features_text(const ModalityDescriptor& d);
std::string keyframe_refs_text(const std::vector<KeyframeRef>& refs);

struct ResponseLimits {
    std::size_t max_field_chars = 4000;
    std::size_t max_descriptor_chars = 200;  // emotion_descriptor
    std::vector<std::string> emotion_vocabulary;  // empty: free text
};

struct ResponseCheck {
    bool ok = false;
    std::map<std::string, std::string> fields;
    std::string error;
};

/// Reply must be exactly one `field: value` line per expected field (blank
/// lines ignored), each non-empty and within its length bound.
ResponseCheck validate_response(std::string_view reply, const std::vector<std::string>& expected,
                                const ResponseLimits& limits = {});

/// Emotion labels are comma separated; with a vocabulary every label must be in it.
std::optional<std::string> check_emotion_labels(std::string_view text, const std::vector<std::string>& vocabulary);

}  // namespace emowb
