#include "emowb/events.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "emowb/digest.hpp"
#include "emowb/error.hpp"
#include "emowb/ingest.hpp"

namespace emowb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string event_id_for(const CandidateEvent& e) {
    std::string material = std::string(to_string(e.method)) + "|" + e.stream_id + "|" + e.channel + "|" +
                           std::to_string(e.peak_ms) + "|" + std::to_string(e.window.start_ms) + "|" +
                           std::to_string(e.window.end_ms) + "|" + e.params_hash;
    return short_id("ev-", material);
}

CandidateEvent make_event(const SignalStream& s, std::string_view channel, DetectorMethod method, Millis peak,
                          Interval window, double score, std::string_view hash, const std::vector<Interval>& gaps) {
    CandidateEvent e;
    e.stream_id = s.stream_id;
    e.channel = std::string(channel);
    e.method = method;
    e.peak_ms = peak;
    e.window = window;
    e.score = score;
    e.params_hash = std::string(hash);
    e.low_confidence = std::any_of(gaps.begin(), gaps.end(), [&](const Interval& g) { return g.overlaps(window); });
    e.event_id = event_id_for(e);
    return e;
}

void sort_events(std::vector<CandidateEvent>& events) {
    std::sort(events.begin(), events.end(), [](const CandidateEvent& a, const CandidateEvent& b) {
        return std::tie(a.peak_ms, a.stream_id, a.channel, a.window.start_ms, a.event_id) <
               std::tie(b.peak_ms, b.stream_id, b.channel, b.window.start_ms, b.event_id);
    });
}

/// Plateau-aware strict local maxima of v within [a, b] (inclusive, all
/// finite). Returns the first index of each qualifying plateau.
std::vector<std::size_t> local_maxima(const std::vector<double>& v, std::size_t a, std::size_t b) {
    std::vector<std::size_t> out;
    if (b < a + 2) return out;
    std::size_t i = a + 1;
    while (i < b) {
        if (v[i - 1] < v[i]) {
            std::size_t ahead = i + 1;
            while (ahead < b && v[ahead] == v[i]) ++ahead;
            if (v[ahead] < v[i]) out.push_back(i);
            i = ahead;
        } else {
            ++i;
        }
    }
    return out;
}

/// Maximal runs [first, last] of indices where v is finite.
std::vector<std::pair<std::size_t, std::size_t>> finite_segments(const std::vector<double>& v) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0;
    while (i < v.size()) {
        if (std::isnan(v[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < v.size() && !std::isnan(v[j + 1])) ++j;
        out.emplace_back(i, j);
        i = j + 1;
    }
    return out;
}

double prominence(const std::vector<double>& v, std::size_t a, std::size_t b, std::size_t peak) {
    const double h = v[peak];
    double left_min = h;
    for (std::size_t k = peak; k-- > a;) {
        if (v[k] > h) break;
        left_min = std::min(left_min, v[k]);
    }
    double right_min = h;
    for (std::size_t k = peak + 1; k <= b; ++k) {
        if (v[k] > h) break;
        right_min = std::min(right_min, v[k]);
    }
    return h - std::max(left_min, right_min);
}

/// Population mean / std over finite values of v[first..last].
std::pair<double, double> mean_std(const std::vector<double>& v, std::size_t first, std::size_t last) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = first; k <= last; ++k) {
        if (std::isnan(v[k])) continue;
        sum += v[k];
        ++n;
    }
    if (n == 0) return {kNaN, kNaN};
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t k = first; k <= last; ++k) {
        if (std::isnan(v[k])) continue;
        ss += (v[k] - mean) * (v[k] - mean);
    }
    return {mean, std::sqrt(ss / static_cast<double>(n))};
}

/// Index range [first, last] of samples with |t_k - t_i| * 2 <= width.
std::pair<std::size_t, std::size_t> centered_range(const std::vector<Millis>& ts, std::size_t i, Millis width) {
    std::size_t first = i;
    while (first > 0 && 2 * (ts[i] - ts[first - 1]) <= width) --first;
    std::size_t last = i;
    while (last + 1 < ts.size() && 2 * (ts[last + 1] - ts[i]) <= width) ++last;
    return {first, last};
}

bool all_equal_finite(const std::vector<double>& v) {
    bool seen = false;
    double first = 0.0;
    for (double x : v) {
        if (std::isnan(x)) continue;
        if (!seen) {
            first = x;
            seen = true;
        } else if (x != first) {
            return false;
        }
    }
    return true;
}

}  // namespace

std::string_view to_string(DetectorMethod method) {
    switch (method) {
        case DetectorMethod::au_peak: return "au_peak";
        case DetectorMethod::motion_energy: return "motion_energy";
        case DetectorMethod::physio_peak: return "physio_peak";
        case DetectorMethod::physio_trend: return "physio_trend";
    }
    return "au_peak";
}

DetectorMethod method_from_string(std::string_view text) {
    for (auto m : {DetectorMethod::au_peak, DetectorMethod::motion_energy, DetectorMethod::physio_peak,
                   DetectorMethod::physio_trend}) {
        if (to_string(m) == text) return m;
    }
    fail(ErrorCode::invalid_input, "unknown detector method '" + std::string(text) + "'");
}

Millis PhysioParams::smooth_for(ModalityKind kind) const {
    auto it = smooth_ms.find(kind);
    return it != smooth_ms.end() ? it->second : 100;
}

void validate(const DetectorParams& p) {
    auto positive = [](Millis v, const char* name) {
        if (v <= 0) fail(ErrorCode::invalid_input, std::string(name) + " must be > 0");
    };
    auto non_negative = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::invalid_input, std::string(name) + " must be >= 0");
    };
    non_negative(p.au.min_intensity, "au.min_intensity");
    non_negative(p.au.min_prominence, "au.min_prominence");
    positive(p.au.min_separation_ms, "au.min_separation_ms");
    positive(p.au.half_window_ms, "au.half_window_ms");
    positive(p.motion.frame_window_ms, "motion.frame_window_ms");
    non_negative(p.motion.threshold_k, "motion.threshold_k");
    positive(p.motion.min_duration_ms, "motion.min_duration_ms");
    for (const auto& [kind, ms] : p.physio.smooth_ms) positive(ms, "physio.smooth_ms");
    non_negative(p.physio.z_threshold, "physio.z_threshold");
    positive(p.physio.slope_window_ms, "physio.slope_window_ms");
    non_negative(p.physio.slope_delta, "physio.slope_delta");
    positive(p.merge_gap_ms, "merge_gap_ms");
}

std::string params_hash(const DetectorParams& params) {
    return json_digest(nlohmann::json(params));
}

void to_json(nlohmann::json& j, const DetectorParams& p) {
    nlohmann::json smooth = nlohmann::json::object();
    for (const auto& [kind, ms] : p.physio.smooth_ms) smooth[std::string(to_string(kind))] = ms;
    j = {{"au",
          {{"min_intensity", p.au.min_intensity},
           {"min_prominence", p.au.min_prominence},
           {"min_separation_ms", p.au.min_separation_ms},
           {"half_window_ms", p.au.half_window_ms}}},
         {"motion",
          {{"frame_window_ms", p.motion.frame_window_ms},
           {"threshold_k", p.motion.threshold_k},
           {"min_duration_ms", p.motion.min_duration_ms}}},
         {"physio",
          {{"smooth_ms", smooth},
           {"z_threshold", p.physio.z_threshold},
           {"slope_window_ms", p.physio.slope_window_ms},
           {"slope_delta", p.physio.slope_delta}}},
         {"merge_gap_ms", p.merge_gap_ms}};
}

void from_json(const nlohmann::json& j, DetectorParams& p) {
    const auto& au = j.at("au");
    p.au.min_intensity = au.at("min_intensity").get<double>();
    p.au.min_prominence = au.at("min_prominence").get<double>();
    p.au.min_separation_ms = au.at("min_separation_ms").get<Millis>();
    p.au.half_window_ms = au.at("half_window_ms").get<Millis>();
    const auto& motion = j.at("motion");
    p.motion.frame_window_ms = motion.at("frame_window_ms").get<Millis>();
    p.motion.threshold_k = motion.at("threshold_k").get<double>();
    p.motion.min_duration_ms = motion.at("min_duration_ms").get<Millis>();
    const auto& physio = j.at("physio");
    p.physio.smooth_ms.clear();
    for (const auto& [kind, ms] : physio.at("smooth_ms").items()) {
        p.physio.smooth_ms[modality_from_string(kind)] = ms.get<Millis>();
    }
    p.physio.z_threshold = physio.at("z_threshold").get<double>();
    p.physio.slope_window_ms = physio.at("slope_window_ms").get<Millis>();
    p.physio.slope_delta = physio.at("slope_delta").get<double>();
    p.merge_gap_ms = j.at("merge_gap_ms").get<Millis>();
}

void to_json(nlohmann::json& j, const CandidateEvent& e) {
    j = {{"event_id", e.event_id},
         {"stream_id", e.stream_id},
         {"channel", e.channel},
         {"method", to_string(e.method)},
         {"peak_ms", e.peak_ms},
         {"window", e.window},
         {"score", e.score},
         {"params_hash", e.params_hash},
         {"low_confidence", e.low_confidence}};
}

void from_json(const nlohmann::json& j, CandidateEvent& e) {
    e.event_id = j.at("event_id").get<std::string>();
    e.stream_id = j.at("stream_id").get<std::string>();
    e.channel = j.at("channel").get<std::string>();
    e.method = method_from_string(j.at("method").get<std::string>());
    e.peak_ms = j.at("peak_ms").get<Millis>();
    e.window = j.at("window").get<Interval>();
    e.score = j.at("score").get<double>();
    e.params_hash = j.at("params_hash").get<std::string>();
    e.low_confidence = j.value("low_confidence", false);
}

void to_json(nlohmann::json& j, const EventGroup& g) {
    j = {{"group_id", g.group_id}, {"members", g.members}, {"span", g.span}, {"anchor_ms", g.anchor_ms}};
}

void from_json(const nlohmann::json& j, EventGroup& g) {
    g.group_id = j.at("group_id").get<std::string>();
    g.members = j.at("members").get<std::vector<std::string>>();
    g.span = j.at("span").get<Interval>();
    g.anchor_ms = j.at("anchor_ms").get<Millis>();
}

const CandidateEvent* EventLayer::find_candidate(std::string_view id) const {
    auto it = std::find_if(candidates.begin(), candidates.end(), [&](const auto& c) { return c.event_id == id; });
    return it == candidates.end() ? nullptr : &*it;
}

const EventGroup* EventLayer::find_group(std::string_view id) const {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.group_id == id; });
    return it == groups.end() ? nullptr : &*it;
}

void to_json(nlohmann::json& j, const EventLayer& layer) {
    j = {{"params", layer.params},
         {"params_hash", layer.params_hash},
         {"candidates", layer.candidates},
         {"groups", layer.groups}};
}

void from_json(const nlohmann::json& j, EventLayer& layer) {
    layer.params = j.at("params").get<DetectorParams>();
    layer.params_hash = j.at("params_hash").get<std::string>();
    layer.candidates = j.at("candidates").get<std::vector<CandidateEvent>>();
    layer.groups = j.at("groups").get<std::vector<EventGroup>>();
}

std::vector<CandidateEvent> detect_au_peaks(const SignalStream& stream, const AuPeakParams& params,
                                            std::string_view hash) {
    if (stream.modality != ModalityKind::au) fail(ErrorCode::invalid_input, "detect_au_peaks needs an au stream");
    if (stream.empty()) fail(ErrorCode::invalid_input, "detect_au_peaks: empty stream");
    const auto& ts = stream.timestamps_ms;
    const auto gaps = find_gaps(stream);
    std::vector<CandidateEvent> out;

    for (std::size_t c = 0; c < stream.channels(); ++c) {
        const auto v = stream.column(c);
        std::vector<std::size_t> passing;
        for (auto [a, b] : finite_segments(v)) {
            for (auto i : local_maxima(v, a, b)) {
                if (v[i] >= params.min_intensity && prominence(v, a, b, i) >= params.min_prominence) {
                    passing.push_back(i);
                }
            }
        }
        std::sort(passing.begin(), passing.end(), [&](std::size_t x, std::size_t y) {
            if (v[x] != v[y]) return v[x] > v[y];
            return x < y;
        });
        std::vector<std::size_t> kept;
        for (auto i : passing) {
            bool clear = std::none_of(kept.begin(), kept.end(), [&](std::size_t k) {
                return std::abs(ts[i] - ts[k]) < params.min_separation_ms;
            });
            if (clear) kept.push_back(i);
        }
        std::sort(kept.begin(), kept.end());
        for (auto i : kept) {
            Interval window{std::max(ts[i] - params.half_window_ms, ts.front()),
                            std::min(ts[i] + params.half_window_ms, ts.back())};
            out.push_back(make_event(stream, stream.channel_names[c], DetectorMethod::au_peak, ts[i], window, v[i],
                                     hash, gaps));
        }
    }
    sort_events(out);
    return out;
}

SignalStream motion_energy(const SignalStream& skeleton, Millis frame_window_ms) {
    if (skeleton.modality != ModalityKind::skeleton) fail(ErrorCode::invalid_input, "motion_energy needs a skeleton stream");
    if (skeleton.size() < 2) fail(ErrorCode::invalid_input, "motion_energy needs at least 2 samples");
    if (frame_window_ms <= 0) fail(ErrorCode::invalid_input, "frame_window_ms must be > 0");
    const std::size_t joints = skeleton.channels() / 3;

    std::vector<Millis> mid;
    std::vector<double> inst;
    for (std::size_t i = 0; i + 1 < skeleton.size(); ++i) {
        const double dt = static_cast<double>(skeleton.timestamps_ms[i + 1] - skeleton.timestamps_ms[i]) / 1000.0;
        double e = 0.0;
        for (std::size_t j = 0; j < joints; ++j) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < 3; ++k) {
                const double d = skeleton.at(i + 1, 3 * j + k) - skeleton.at(i, 3 * j + k);
                d2 += d * d;
            }
            e += d2 / (dt * dt);  // |v|^2
        }
        inst.push_back(e);
        mid.push_back(skeleton.timestamps_ms[i] + (skeleton.timestamps_ms[i + 1] - skeleton.timestamps_ms[i]) / 2);
    }

    SignalStream out;
    out.stream_id = skeleton.stream_id;
    out.modality = ModalityKind::skeleton;
    out.channel_names = {"energy"};
    out.rate_hz = skeleton.rate_hz;
    out.timestamps_ms = mid;
    out.values.resize(inst.size());
    for (std::size_t i = 0; i < inst.size(); ++i) {
        // keep gaps visible: a step touching a gap stays NaN
        if (std::isnan(inst[i])) {
            out.values[i] = kNaN;
            continue;
        }
        auto [first, last] = centered_range(mid, i, frame_window_ms);
        out.values[i] = mean_std(inst, first, last).first;
    }
    return out;
}

std::vector<CandidateEvent> detect_motion_events(const SignalStream& energy, const MotionParams& params,
                                                 std::string_view hash) {
    if (energy.empty()) fail(ErrorCode::invalid_input, "detect_motion_events: empty stream");
    if (energy.channels() != 1) fail(ErrorCode::invalid_input, "detect_motion_events needs a single-channel stream");
    const auto& ts = energy.timestamps_ms;
    const auto& v = energy.values;
    std::vector<CandidateEvent> out;
    if (params.threshold_k > 0.0 && all_equal_finite(v)) return out;
    auto [mean, sd] = mean_std(v, 0, v.size() - 1);
    if (std::isnan(mean)) return out;
    const double tau = mean + params.threshold_k * sd;
    const auto gaps = find_gaps(energy);

    std::size_t i = 0;
    while (i < v.size()) {
        if (!(v[i] >= tau)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < v.size() && v[j + 1] >= tau) ++j;
        if (ts[j] - ts[i] >= params.min_duration_ms) {
            std::size_t best = i;
            for (std::size_t k = i + 1; k <= j; ++k) {
                if (v[k] > v[best]) best = k;
            }
            out.push_back(make_event(energy, energy.channel_names[0], DetectorMethod::motion_energy, ts[best],
                                     {ts[i], ts[j]}, v[best], hash, gaps));
        }
        i = j + 1;
    }
    sort_events(out);
    return out;
}

std::vector<double> smooth_centered(const std::vector<Millis>& ts, const std::vector<double>& values, Millis width_ms) {
    std::vector<double> out(values.size(), kNaN);
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto [first, last] = centered_range(ts, i, width_ms);
        out[i] = mean_std(values, first, last).first;
    }
    return out;
}

double ols_slope(const std::vector<Millis>& ts, const std::vector<double>& values, std::size_t first, std::size_t last) {
    if (last <= first) return kNaN;
    const double n = static_cast<double>(last - first + 1);
    double mt = 0.0;
    double mv = 0.0;
    for (std::size_t k = first; k <= last; ++k) {
        if (std::isnan(values[k])) return kNaN;
        mt += static_cast<double>(ts[k] - ts[first]) / 1000.0;
        mv += values[k];
    }
    mt /= n;
    mv /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t k = first; k <= last; ++k) {
        const double dt = static_cast<double>(ts[k] - ts[first]) / 1000.0 - mt;
        sxy += dt * (values[k] - mv);
        sxx += dt * dt;
    }
    return sxx > 0.0 ? sxy / sxx : kNaN;
}

std::vector<CandidateEvent> detect_physio_events(const SignalStream& stream, std::string_view channel,
                                                 const PhysioParams& params, std::string_view hash) {
    if (!is_physio(stream.modality)) {
        fail(ErrorCode::invalid_input, "detect_physio_events needs a bvp, hr, eda or imu stream");
    }
    const std::size_t col = stream.channel_index(channel);
    const auto& ts = stream.timestamps_ms;
    if (stream.size() < 2 || ts.back() - ts.front() < params.slope_window_ms) {
        fail(ErrorCode::invalid_input, "detect_physio_events: insufficient data for the slope window");
    }
    const auto raw = stream.column(col);
    const auto gaps = find_gaps(stream);
    const Millis smooth = params.smooth_for(stream.modality);
    std::vector<CandidateEvent> out;

    // (a) peaks: rolling z-score of the smoothed series
    const auto s = smooth_centered(ts, raw, smooth);
    std::vector<double> z(s.size(), kNaN);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (std::isnan(s[i])) continue;
        auto [first, last] = centered_range(ts, i, 10 * smooth);
        auto [mean, sd] = mean_std(s, first, last);
        z[i] = sd > 0.0 ? (s[i] - mean) / sd : 0.0;
    }
    std::size_t i = 0;
    while (i < z.size()) {
        if (!(z[i] >= params.z_threshold)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < z.size() && z[j + 1] >= params.z_threshold) ++j;
        std::size_t best = i;
        double zmax = z[i];
        for (std::size_t k = i + 1; k <= j; ++k) {
            if (s[k] > s[best]) best = k;
            zmax = std::max(zmax, z[k]);
        }
        out.push_back(make_event(stream, channel, DetectorMethod::physio_peak, ts[best], {ts[i], ts[j]}, zmax, hash,
                                 gaps));
        i = j + 1;
    }

    // (b) trend changes on the raw series; both regression windows must lie inside the data
    const Millis w = params.slope_window_ms;
    std::vector<double> d(raw.size(), kNaN);
    std::size_t trail_first = 0;
    std::size_t lead_last = 0;
    for (std::size_t k = 0; k < raw.size(); ++k) {
        if (ts[k] - w < ts.front() || ts[k] + w > ts.back()) continue;
        while (ts[trail_first] < ts[k] - w) ++trail_first;
        lead_last = std::max(lead_last, k);
        while (lead_last + 1 < ts.size() && ts[lead_last + 1] <= ts[k] + w) ++lead_last;
        const double trail = ols_slope(ts, raw, trail_first, k);
        const double lead = ols_slope(ts, raw, k, lead_last);
        if (std::isnan(trail) || std::isnan(lead)) continue;
        d[k] = std::abs(lead - trail);
    }
    for (auto [a, b] : finite_segments(d)) {
        for (auto k : local_maxima(d, a, b)) {
            if (d[k] > params.slope_delta) {
                out.push_back(make_event(stream, channel, DetectorMethod::physio_trend, ts[k], {ts[k] - w, ts[k] + w},
                                         d[k], hash, gaps));
            }
        }
    }
    sort_events(out);
    return out;
}

std::vector<EventGroup> aggregate_events(std::vector<CandidateEvent> candidates, Millis merge_gap_ms) {
    std::sort(candidates.begin(), candidates.end(), [](const CandidateEvent& a, const CandidateEvent& b) {
        return std::tie(a.window.start_ms, a.window.end_ms, a.event_id) <
               std::tie(b.window.start_ms, b.window.end_ms, b.event_id);
    });
    std::vector<EventGroup> groups;
    std::vector<std::vector<const CandidateEvent*>> members;
    for (const auto& c : candidates) {
        if (!groups.empty() && c.window.start_ms <= groups.back().span.end_ms + merge_gap_ms) {
            auto& g = groups.back();
            g.span.end_ms = std::max(g.span.end_ms, c.window.end_ms);
            members.back().push_back(&c);
        } else {
            groups.push_back(EventGroup{{}, {}, c.window, 0});
            members.push_back({&c});
        }
    }
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        auto& g = groups[gi];
        double weight = 0.0;
        double weighted = 0.0;
        double plain = 0.0;
        for (const auto* m : members[gi]) {
            g.members.push_back(m->event_id);
            weight += m->score;
            weighted += m->score * static_cast<double>(m->peak_ms);
            plain += static_cast<double>(m->peak_ms);
        }
        const double anchor = weight > 0.0 ? weighted / weight : plain / static_cast<double>(members[gi].size());
        g.anchor_ms = static_cast<Millis>(std::llround(anchor));
        std::sort(g.members.begin(), g.members.end());
        std::string material;
        for (const auto& id : g.members) material += id + ";";
        g.group_id = short_id("grp-", material);
    }
    return groups;
}

EventLayer detect_session_events(const std::vector<SignalStream>& streams, const DetectorParams& params) {
    validate(params);
    EventLayer layer;
    layer.params = params;
    layer.params_hash = params_hash(params);
    for (const auto& s : streams) {
        std::vector<CandidateEvent> found;
        switch (s.modality) {
            case ModalityKind::au: found = detect_au_peaks(s, params.au, layer.params_hash); break;
            case ModalityKind::skeleton:
                if (s.size() < 2) break;
                found = detect_motion_events(motion_energy(s, params.motion.frame_window_ms), params.motion,
                                             layer.params_hash);
                break;
            case ModalityKind::bvp:
            case ModalityKind::hr:
            case ModalityKind::eda:
            case ModalityKind::imu:
                if (s.size() < 2 || s.timestamps_ms.back() - s.timestamps_ms.front() < params.physio.slope_window_ms) {
                    break;
                }
                for (const auto& ch : s.channel_names) {
                    auto more = detect_physio_events(s, ch, params.physio, layer.params_hash);
                    found.insert(found.end(), more.begin(), more.end());
                }
                break;
        }
        layer.candidates.insert(layer.candidates.end(), found.begin(), found.end());
    }
    sort_events(layer.candidates);
    layer.groups = aggregate_events(layer.candidates, params.merge_gap_ms);
    return layer;
}

}  // namespace emowb
