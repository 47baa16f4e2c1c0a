#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "emowb/packets.hpp"
#include "emowb/timeline.hpp"

namespace emowb {

enum class DescriptorModality { face, motion, physio, context };

std::string_view to_string(DescriptorModality m);

struct Feature {
    std::string name;
    std::variant<double, std::string> value;

    bool operator==(const Feature&) const = default;
};

/// Serialized value: numbers with fixed 3 decimals, text as-is.
std::string feature_text(const Feature& f);

struct KeyframeRef {
    std::string role;  // start | anchor | end
    std::string video_id;
    std::string uri;
    std::int64_t frame_index = 0;
    Millis t_ms = 0;
    bool clamped = false;

    bool operator==(const KeyframeRef&) const = default;
};

/// Deterministic per-modality evidence handed to the prompt templates.
struct ModalityDescriptor {
    DescriptorModality modality = DescriptorModality::face;
    std::vector<std::string> source_ids;  // streams/videos the features came from
    std::vector<Feature> features;
    std::string summary;
    std::vector<KeyframeRef> keyframes;  // context only
    bool absent = false;                 // modality not available for this packet

    bool operator==(const ModalityDescriptor&) const = default;
};

void to_json(nlohmann::json& j, const ModalityDescriptor& d);

/// FACS name for an OpenFace AU code ("AU12" or "AU12_r"); unknown codes
/// come back unchanged.
std::string au_facs_name(std::string_view code);

struct DescriberOptions {
    double au_threshold = 1.0;
    std::string root_joint;       // empty: first joint
    double still_speed = 0.05;    // m/s; below this peak speed the window is "still"
    Millis physio_smooth_ms = 0;  // 0: detector default for the stream's kind
};

/// AUs at the sample nearest the packet anchor (ties to the earlier sample)
/// with intensity >= threshold, strongest first.
ModalityDescriptor describe_face(const EventPacket& packet, const SignalStream& au_stream,
                                 const DescriberOptions& opts = {});

/// Joint speed statistics, top-3 joints by path length and root displacement.
ModalityDescriptor describe_motion(const EventPacket& packet, const SignalStream& skeleton,
                                   const DescriberOptions& opts = {});

/// Rising/falling segments of the smoothed window (runs shorter than the
/// smoothing width folded into neighbours), local extrema and duration.
ModalityDescriptor describe_physio(const EventPacket& packet, const SignalStream& stream,
                                   const DescriberOptions& opts = {});

/// First-person keyframe references at boundary start, anchor and end.
ModalityDescriptor describe_context(const EventPacket& packet, const AlignmentIndex& index);

struct TrendSegment {
    bool rising = true;
    Millis start_ms = 0;
    Millis end_ms = 0;
    double amplitude = 0.0;

    bool operator==(const TrendSegment&) const = default;
};

struct Extremum {
    bool maximum = true;
    Millis t_ms = 0;
    double value = 0.0;

    bool operator==(const Extremum&) const = default;
};

struct TrendDecomposition {
    std::vector<TrendSegment> segments;
    std::vector<Extremum> extrema;
};

/// Monotone-run decomposition used by describe_physio, exposed for testing.
TrendDecomposition decompose_trend(const std::vector<Millis>& ts, const std::vector<double>& smoothed,
                                   Millis min_run_ms);

/// Collapse several physio descriptors into one (features prefixed by source).
ModalityDescriptor merge_physio(const std::vector<ModalityDescriptor>& parts);

}  // namespace emowb
