#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "emowb/types.hpp"

namespace emowb {

enum class DetectorMethod { au_peak, motion_energy, physio_peak, physio_trend };

std::string_view to_string(DetectorMethod method);
DetectorMethod method_from_string(std::string_view text);

struct AuPeakParams {
    double min_intensity = 1.0;
    double min_prominence = 0.5;
    Millis min_separation_ms = 1000;
    Millis half_window_ms = 1500;

    bool operator==(const AuPeakParams&) const = default;
};

struct MotionParams {
    Millis frame_window_ms = 200;
    double threshold_k = 2.0;
    Millis min_duration_ms = 300;

    bool operator==(const MotionParams&) const = default;
};

struct PhysioParams {
    // Moving-average width per modality; the rolling z-score uses 10x this.
    std::map<ModalityKind, Millis> smooth_ms{{ModalityKind::bvp, 100},
                                             {ModalityKind::hr, 100},
                                             {ModalityKind::eda, 500},
                                             {ModalityKind::imu, 100}};
    double z_threshold = 3.0;
    Millis slope_window_ms = 2000;
    double slope_delta = 0.5;  // units per second

    Millis smooth_for(ModalityKind kind) const;
    bool operator==(const PhysioParams&) const = default;
};

struct DetectorParams {
    AuPeakParams au;
    MotionParams motion;
    PhysioParams physio;
    Millis merge_gap_ms = 500;

    bool operator==(const DetectorParams&) const = default;
};

/// Throws invalid_input unless durations > 0 and thresholds >= 0.
void validate(const DetectorParams& params);
std::string params_hash(const DetectorParams& params);

void to_json(nlohmann::json& j, const DetectorParams& p);
void from_json(const nlohmann::json& j, DetectorParams& p);

struct CandidateEvent {
    std::string event_id;
    std::string stream_id;
    std::string channel;
    DetectorMethod method = DetectorMethod::au_peak;
    Millis peak_ms = 0;
    Interval window;
    double score = 0.0;
    std::string params_hash;
    // Window overlaps an ingest gap interval.
    bool low_confidence = false;

    bool operator==(const CandidateEvent&) const = default;
};

void to_json(nlohmann::json& j, const CandidateEvent& e);
void from_json(const nlohmann::json& j, CandidateEvent& e);

struct EventGroup {
    std::string group_id;
    std::vector<std::string> members;  // sorted event ids
    Interval span;
    Millis anchor_ms = 0;  // score-weighted mean of member peaks

    bool operator==(const EventGroup&) const = default;
};

void to_json(nlohmann::json& j, const EventGroup& g);
void from_json(const nlohmann::json& j, EventGroup& g);

/// Contents of events.json.
struct EventLayer {
    DetectorParams params;
    std::string params_hash;
    std::vector<CandidateEvent> candidates;
    std::vector<EventGroup> groups;

    const CandidateEvent* find_candidate(std::string_view id) const;
    const EventGroup* find_group(std::string_view id) const;
    bool operator==(const EventLayer&) const = default;
};

void to_json(nlohmann::json& j, const EventLayer& layer);
void from_json(const nlohmann::json& j, EventLayer& layer);

/// Per channel: strict local maxima (plateaus resolved to their first
/// sample, never at a segment boundary) with value >= min_intensity and
/// prominence >= min_prominence, then greedy min-separation keeping the
/// higher (earlier on ties) peak. NaN cells split a channel into
/// independent segments.
std::vector<CandidateEvent> detect_au_peaks(const SignalStream& stream, const AuPeakParams& params,
                                            std::string_view params_hash = {});

/// Single-channel "energy" stream: per step, sum over joints of squared
/// joint speed (m/s), timestamped at step midpoints, then a centered
/// sliding mean over frame_window_ms. Keeps the skeleton's stream id.
SignalStream motion_energy(const SignalStream& skeleton, Millis frame_window_ms);

/// Maximal runs with energy >= mean + k * std lasting >= min_duration_ms.
std::vector<CandidateEvent> detect_motion_events(const SignalStream& energy, const MotionParams& params,
                                                 std::string_view params_hash = {});

/// physio_peak runs of rolling z-score over the smoothed series, plus
/// physio_trend local maxima of |slope_lead - slope_trail|.
std::vector<CandidateEvent> detect_physio_events(const SignalStream& stream, std::string_view channel,
                                                 const PhysioParams& params, std::string_view params_hash = {});

/// Chain-merge candidates (sorted by window start) whose windows overlap or
/// sit within merge_gap_ms of the running group span.
std::vector<EventGroup> aggregate_events(std::vector<CandidateEvent> candidates, Millis merge_gap_ms);

/// Centered moving average: mean of finite values with |t_k - t_i| <= width/2.
/// NaN where no finite value is in range.
std::vector<double> smooth_centered(const std::vector<Millis>& ts, const std::vector<double>& values, Millis width_ms);

/// Least-squares slope (units per second); NaN when undefined.
double ols_slope(const std::vector<Millis>& ts, const std::vector<double>& values, std::size_t first, std::size_t last);

/// Run every applicable detector over a session's streams.
EventLayer detect_session_events(const std::vector<SignalStream>& streams, const DetectorParams& params);

}  // namespace emowb
