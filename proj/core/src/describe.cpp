#include "emowb/describe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>

#include "emowb/error.hpp"
#include "emowb/ingest.hpp"

namespace emowb {

namespace {

// OpenFace 2.x intensity outputs (AUxx_r).
constexpr std::array<std::pair<std::string_view, std::string_view>, 17> kFacsNames{{
    {"AU01", "inner brow raiser"},
    {"AU02", "outer brow raiser"},
    {"AU04", "brow lowerer"},
    {"AU05", "upper lid raiser"},
    {"AU06", "cheek raiser"},
    {"AU07", "lid tightener"},
    {"AU09", "nose wrinkler"},
    {"AU10", "upper lip raiser"},
    {"AU12", "lip corner puller"},
    {"AU14", "dimpler"},
    {"AU15", "lip corner depressor"},
    {"AU17", "chin raiser"},
    {"AU20", "lip stretcher"},
    {"AU23", "lip tightener"},
    {"AU25", "lips part"},
    {"AU26", "jaw drop"},
    {"AU45", "blink"},
}};

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string strip_suffix(std::string_view code) {
    if (code.size() > 2 && code.substr(code.size() - 2) == "_r") code.remove_suffix(2);
    return std::string(code);
}

/// Rows of `stream` referenced by the packet (falls back to the boundary
/// when the packet carries no pointer for this stream).
std::pair<std::size_t, std::size_t> packet_rows(const EventPacket& packet, const SignalStream& stream) {
    WindowRef ref = packet.pointer_for(stream.stream_id)
                        ? packet.pointer_for(stream.stream_id)->ref
                        : stream_window(stream, packet.boundary.start_ms, packet.boundary.end_ms);
    auto first = static_cast<std::size_t>(std::clamp<std::int64_t>(ref.start_idx, 0, static_cast<std::int64_t>(stream.size())));
    auto last = static_cast<std::size_t>(std::clamp<std::int64_t>(ref.end_idx, 0, static_cast<std::int64_t>(stream.size())));
    return {first, std::max(first, last)};
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

int step_sign(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return 0;
    const double tol = 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
    if (b - a > tol) return 1;
    if (a - b > tol) return -1;
    return 0;
}

struct Run {
    int sign = 0;
    std::size_t first = 0;  // sample index
    std::size_t last = 0;   // sample index (inclusive)
};

void coalesce(std::vector<Run>& runs) {
    std::vector<Run> out;
    for (const auto& r : runs) {
        if (!out.empty() && out.back().sign == r.sign) {
            out.back().last = r.last;
        } else {
            out.push_back(r);
        }
    }
    runs = std::move(out);
}

}  // namespace

std::string_view to_string(DescriptorModality m) {
    switch (m) {
        case DescriptorModality::face: return "face";
        case DescriptorModality::motion: return "motion";
        case DescriptorModality::physio: return "physio";
        case DescriptorModality::context: return "context";
    }
    return "face";
}

std::string feature_text(const Feature& f) {
    if (const auto* d = std::get_if<double>(&f.value)) return fixed(*d, 3);
    return std::get<std::string>(f.value);
}

void to_json(nlohmann::json& j, const ModalityDescriptor& d) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& f : d.features) {
        if (const auto* v = std::get_if<double>(&f.value)) {
            features.push_back({{"name", f.name}, {"value", *v}});
        } else {
            features.push_back({{"name", f.name}, {"value", std::get<std::string>(f.value)}});
        }
    }
    nlohmann::json keyframes = nlohmann::json::array();
    for (const auto& k : d.keyframes) {
        keyframes.push_back({{"role", k.role},       {"video_id", k.video_id}, {"uri", k.uri},
                             {"frame_index", k.frame_index}, {"t_ms", k.t_ms}, {"clamped", k.clamped}});
    }
    j = {{"modality", to_string(d.modality)}, {"source_ids", d.source_ids}, {"features", std::move(features)},
         {"summary", d.summary},             {"keyframes", std::move(keyframes)}, {"absent", d.absent}};
}

std::string au_facs_name(std::string_view code) {
    const auto key = strip_suffix(code);
    for (const auto& [au, name] : kFacsNames) {
        if (au == key) return std::string(name);
    }
    return key;
}

ModalityDescriptor describe_face(const EventPacket& packet, const SignalStream& au_stream, const DescriberOptions& opts) {
    if (au_stream.modality != ModalityKind::au) fail(ErrorCode::invalid_input, "describe_face needs an au stream");
    auto [first, last] = packet_rows(packet, au_stream);
    if (first == last) fail(ErrorCode::not_found, "no AU samples in the packet window");

    std::size_t nearest = first;
    for (std::size_t r = first + 1; r < last; ++r) {
        if (std::abs(au_stream.timestamps_ms[r] - packet.anchor_ms) <
            std::abs(au_stream.timestamps_ms[nearest] - packet.anchor_ms)) {
            nearest = r;
        }
    }

    std::vector<std::pair<std::size_t, double>> active;
    for (std::size_t c = 0; c < au_stream.channels(); ++c) {
        const double v = au_stream.at(nearest, c);
        if (!std::isnan(v) && v >= opts.au_threshold) active.emplace_back(c, v);
    }
    std::stable_sort(active.begin(), active.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    ModalityDescriptor d;
    d.modality = DescriptorModality::face;
    d.source_ids = {au_stream.stream_id};
    std::string summary;
    for (const auto& [c, v] : active) {
        const auto code = strip_suffix(au_stream.channel_names[c]);
        d.features.push_back({code, v});
        if (!summary.empty()) summary += ", ";
        summary += au_facs_name(code) + " (" + code + " " + fixed(v, 2) + ")";
    }
    d.summary = summary.empty() ? "neutral" : summary;
    return d;
}

ModalityDescriptor describe_motion(const EventPacket& packet, const SignalStream& skeleton, const DescriberOptions& opts) {
    if (skeleton.modality != ModalityKind::skeleton) fail(ErrorCode::invalid_input, "describe_motion needs a skeleton stream");
    auto [first, last] = packet_rows(packet, skeleton);
    if (last - first < 2) fail(ErrorCode::invalid_input, "describe_motion needs at least 2 skeleton samples in the window");

    const auto joints = joint_names(skeleton);
    std::size_t root = 0;
    if (!opts.root_joint.empty()) {
        auto it = std::find(joints.begin(), joints.end(), opts.root_joint);
        if (it == joints.end()) fail(ErrorCode::not_found, "root joint '" + opts.root_joint + "' not in skeleton");
        root = static_cast<std::size_t>(it - joints.begin());
    }

    std::vector<double> path(joints.size(), 0.0);
    std::vector<double> speed_sum(joints.size(), 0.0);
    std::vector<double> speed_peak(joints.size(), 0.0);
    std::vector<std::size_t> steps(joints.size(), 0);
    for (std::size_t r = first; r + 1 < last; ++r) {
        const double dt = static_cast<double>(skeleton.timestamps_ms[r + 1] - skeleton.timestamps_ms[r]) / 1000.0;
        for (std::size_t j = 0; j < joints.size(); ++j) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < 3; ++k) {
                const double d = skeleton.at(r + 1, 3 * j + k) - skeleton.at(r, 3 * j + k);
                d2 += d * d;
            }
            if (std::isnan(d2)) continue;
            const double dist = std::sqrt(d2);
            path[j] += dist;
            speed_sum[j] += dist / dt;
            speed_peak[j] = std::max(speed_peak[j], dist / dt);
            ++steps[j];
        }
    }

    double mean_speed = 0.0;
    double peak_speed = 0.0;
    for (std::size_t j = 0; j < joints.size(); ++j) {
        const double m = steps[j] ? speed_sum[j] / static_cast<double>(steps[j]) : 0.0;
        mean_speed += m;
        peak_speed = std::max(peak_speed, speed_peak[j]);
    }
    mean_speed /= static_cast<double>(std::max<std::size_t>(1, joints.size()));

    double root_disp = 0.0;
    {
        double d2 = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const double d = skeleton.at(last - 1, 3 * root + k) - skeleton.at(first, 3 * root + k);
            d2 += d * d;
        }
        root_disp = std::isnan(d2) ? 0.0 : std::sqrt(d2);
    }

    std::vector<std::size_t> order(joints.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return path[a] > path[b]; });

    ModalityDescriptor d;
    d.modality = DescriptorModality::motion;
    d.source_ids = {skeleton.stream_id};
    const double duration = static_cast<double>(skeleton.timestamps_ms[last - 1] - skeleton.timestamps_ms[first]) / 1000.0;
    d.features.push_back({"duration_s", duration});
    d.features.push_back({"mean_speed_mps", mean_speed});
    d.features.push_back({"peak_speed_mps", peak_speed});
    d.features.push_back({"root_joint", joints[root]});
    d.features.push_back({"root_displacement_m", root_disp});
    std::size_t ranked = 0;
    for (auto j : order) {
        if (ranked == 3 || path[j] <= 0.0) break;
        ++ranked;
        d.features.push_back({"top_joint_" + std::to_string(ranked), joints[j]});
        d.features.push_back({"top_joint_" + std::to_string(ranked) + "_path_m", path[j]});
    }
    for (std::size_t j = 0; j < joints.size(); ++j) {
        d.features.push_back({"speed_mean." + joints[j], steps[j] ? speed_sum[j] / static_cast<double>(steps[j]) : 0.0});
        d.features.push_back({"speed_peak." + joints[j], speed_peak[j]});
    }

    if (peak_speed < opts.still_speed) {
        d.summary = "still";
    } else {
        const char* magnitude = peak_speed < 0.5 ? "small" : peak_speed < 1.5 ? "moderate" : "large";
        d.summary = std::string(magnitude) + " " + joints[order.front()] + " movement, ";
        d.summary += root_disp < 0.05 ? joints[root] + " stable" : joints[root] + " shifted " + fixed(root_disp, 2) + " m";
    }
    return d;
}

TrendDecomposition decompose_trend(const std::vector<Millis>& ts, const std::vector<double>& s, Millis min_run_ms) {
    TrendDecomposition out;
    if (s.size() < 2) return out;
    std::vector<Run> runs;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) runs.push_back({step_sign(s[k], s[k + 1]), k, k + 1});
    coalesce(runs);

    auto duration = [&](const Run& r) { return ts[r.last] - ts[r.first]; };
    while (runs.size() > 1) {
        std::size_t shortest = runs.size();
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (duration(runs[i]) >= min_run_ms) continue;
            if (shortest == runs.size() || duration(runs[i]) < duration(runs[shortest])) shortest = i;
        }
        if (shortest == runs.size()) break;
        std::size_t into;
        if (shortest == 0) {
            into = 1;
        } else if (shortest + 1 == runs.size()) {
            into = shortest - 1;
        } else {
            into = duration(runs[shortest + 1]) > duration(runs[shortest - 1]) ? shortest + 1 : shortest - 1;
        }
        runs[into].first = std::min(runs[into].first, runs[shortest].first);
        runs[into].last = std::max(runs[into].last, runs[shortest].last);
        runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(shortest));
        coalesce(runs);
    }

    std::vector<Run> moving;
    for (const auto& r : runs) {
        if (r.sign == 0) continue;
        moving.push_back(r);
        out.segments.push_back({r.sign > 0, ts[r.first], ts[r.last], s[r.last] - s[r.first]});
    }
    for (std::size_t i = 0; i + 1 < moving.size(); ++i) {
        if (moving[i].sign == moving[i + 1].sign) continue;
        const bool is_max = moving[i].sign > 0;
        std::size_t best = moving[i].last;
        for (std::size_t k = moving[i].last; k <= moving[i + 1].first; ++k) {
            if (is_max ? s[k] > s[best] : s[k] < s[best]) best = k;
        }
        out.extrema.push_back({is_max, ts[best], s[best]});
    }
    return out;
}

ModalityDescriptor describe_physio(const EventPacket& packet, const SignalStream& stream, const DescriberOptions& opts) {
    if (!is_physio(stream.modality)) fail(ErrorCode::invalid_input, "describe_physio needs a physiological stream");
    auto [first, last] = packet_rows(packet, stream);
    if (last - first < 3) fail(ErrorCode::invalid_input, "describe_physio needs at least 3 samples in the window");

    const Millis smooth = opts.physio_smooth_ms > 0 ? opts.physio_smooth_ms : PhysioParams{}.smooth_for(stream.modality);
    std::vector<Millis> ts(stream.timestamps_ms.begin() + static_cast<std::ptrdiff_t>(first),
                           stream.timestamps_ms.begin() + static_cast<std::ptrdiff_t>(last));
    std::vector<double> raw;
    for (std::size_t r = first; r < last; ++r) raw.push_back(stream.at(r, 0));
    const auto smoothed = smooth_centered(ts, raw, smooth);
    const auto trend = decompose_trend(ts, smoothed, smooth);

    ModalityDescriptor d;
    d.modality = DescriptorModality::physio;
    d.source_ids = {stream.stream_id};
    const double duration = static_cast<double>(ts.back() - ts.front()) / 1000.0;
    d.features.push_back({"kind", std::string(to_string(stream.modality))});
    d.features.push_back({"total_duration_s", duration});
    d.features.push_back({"n_segments", static_cast<double>(trend.segments.size())});
    double lo = 0.0;
    double hi = 0.0;
    bool any = false;
    for (double v : smoothed) {
        if (std::isnan(v)) continue;
        lo = any ? std::min(lo, v) : v;
        hi = any ? std::max(hi, v) : v;
        any = true;
    }
    d.features.push_back({"min", lo});
    d.features.push_back({"max", hi});

    const auto kind = upper(to_string(stream.modality));
    std::string summary;
    for (std::size_t i = 0; i < trend.segments.size(); ++i) {
        const auto& seg = trend.segments[i];
        const double secs = static_cast<double>(seg.end_ms - seg.start_ms) / 1000.0;
        const std::string label = seg.rising ? "rising" : "falling";
        d.features.push_back({"segment_" + std::to_string(i + 1),
                              label + " " + fixed(secs, 2) + " s from " + std::to_string(seg.start_ms) + " ms, amplitude " +
                                  fixed(seg.amplitude, 3)});
        summary += (i == 0 ? kind + " " : std::string(" then ")) + label + " " + fixed(secs, 1) + " s";
    }
    for (std::size_t i = 0; i < trend.extrema.size(); ++i) {
        const auto& e = trend.extrema[i];
        d.features.push_back({"extremum_" + std::to_string(i + 1), std::string(e.maximum ? "max " : "min ") +
                                                                       fixed(e.value, 3) + " at " +
                                                                       std::to_string(e.t_ms) + " ms"});
    }
    if (trend.segments.empty()) {
        d.summary = kind + " flat";
    } else {
        d.summary = summary;
        if (!trend.extrema.empty()) {
            const auto& e = trend.extrema.front();
            d.summary += std::string(", ") + (e.maximum ? "peak" : "trough") + " at " +
                         fixed(static_cast<double>(e.t_ms) / 1000.0, 1) + " s";
        }
    }
    return d;
}

ModalityDescriptor describe_context(const EventPacket& packet, const AlignmentIndex& index) {
    ModalityDescriptor d;
    d.modality = DescriptorModality::context;
    const auto it = std::find_if(index.videos.begin(), index.videos.end(),
                                 [](const VideoIndexEntry& v) { return v.kind == VideoKind::first_person; });
    if (it == index.videos.end()) {
        d.absent = true;
        d.summary = "no first-person video";
        return d;
    }
    d.source_ids = {it->video_id};
    const std::array<std::pair<const char*, Millis>, 3> at{
        {{"start", packet.boundary.start_ms}, {"anchor", packet.anchor_ms}, {"end", packet.boundary.end_ms}}};
    bool clamped = false;
    for (const auto& [role, t] : at) {
        KeyframeRef ref{role, it->video_id, it->uri, time_to_frame(index, it->video_id, t), t,
                        time_outside_video(index, it->video_id, t)};
        clamped = clamped || ref.clamped;
        d.features.push_back({std::string("frame.") + role, std::to_string(ref.frame_index)});
        d.keyframes.push_back(std::move(ref));
    }
    d.features.push_back({"video_uri", it->uri});
    if (clamped) d.features.push_back({"clamped", std::string("true")});
    return d;
}

ModalityDescriptor merge_physio(const std::vector<ModalityDescriptor>& parts) {
    ModalityDescriptor d;
    d.modality = DescriptorModality::physio;
    for (const auto& p : parts) {
        const auto source = p.source_ids.empty() ? std::string("physio") : p.source_ids.front();
        d.source_ids.insert(d.source_ids.end(), p.source_ids.begin(), p.source_ids.end());
        for (const auto& f : p.features) d.features.push_back({source + "." + f.name, f.value});
        if (!d.summary.empty()) d.summary += "; ";
        d.summary += p.summary;
    }
    d.absent = parts.empty();
    return d;
}

}  // namespace emowb
