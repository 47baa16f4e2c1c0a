#include "emowb/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "emowb/error.hpp"

namespace emowb {

namespace {

Millis grid_time(Millis offset, double rate_hz, std::int64_t i) {
    return offset + static_cast<Millis>(std::llround(static_cast<double>(i) * 1000.0 / rate_hz));
}

/// First i in [0, n) with pred(i) false, for pred monotone true->false.
template <class Pred>
std::int64_t partition_index(std::int64_t n, Pred pred) {
    std::int64_t lo = 0;
    std::int64_t hi = n;
    while (lo < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (pred(mid)) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    return lo;
}

template <class TimeFn>
WindowRef make_ref(std::string_view id, std::int64_t count, double span_start, double span_end, Millis start_ms,
                   Millis end_ms, TimeFn time_of) {
    WindowRef ref;
    ref.target_id = std::string(id);
    ref.start_ms = start_ms;
    ref.end_ms = end_ms;
    const auto lo_t = static_cast<double>(start_ms);
    const auto hi_t = static_cast<double>(end_ms);
    ref.start_idx = partition_index(count, [&](std::int64_t i) { return time_of(i) < lo_t; });
    ref.end_idx = partition_index(count, [&](std::int64_t i) { return time_of(i) <= hi_t; });
    ref.end_idx = std::max(ref.end_idx, ref.start_idx);
    ref.out_of_span = count == 0 || hi_t < span_start || lo_t > span_end;
    return ref;
}

}  // namespace

Millis StreamIndexEntry::sample_time(std::int64_t i) const {
    if (!timestamps_ms.empty()) return timestamps_ms[static_cast<std::size_t>(i)];
    return grid_time(offset_ms, rate_hz, i);
}

const StreamIndexEntry* AlignmentIndex::find_stream(std::string_view id) const {
    auto it = std::find_if(streams.begin(), streams.end(), [&](const auto& e) { return e.stream_id == id; });
    return it == streams.end() ? nullptr : &*it;
}

const VideoIndexEntry* AlignmentIndex::find_video(std::string_view id) const {
    auto it = std::find_if(videos.begin(), videos.end(), [&](const auto& e) { return e.video_id == id; });
    return it == videos.end() ? nullptr : &*it;
}

AlignmentIndex build_alignment_index(const SessionMeta& meta, const std::vector<SignalStream>& streams) {
    std::map<std::string, const SignalStream*, std::less<>> by_id;
    for (const auto& s : streams) {
        if (!meta.find_stream(s.stream_id)) {
            fail(ErrorCode::invalid_input, "stream '" + s.stream_id + "' is not in the session manifest");
        }
        if (!by_id.emplace(s.stream_id, &s).second) {
            fail(ErrorCode::invalid_input, "stream '" + s.stream_id + "' provided twice");
        }
    }

    AlignmentIndex index;
    index.session_id = meta.session_id;
    Millis t0 = std::numeric_limits<Millis>::max();
    Millis t1 = std::numeric_limits<Millis>::min();

    for (const auto& entry : meta.streams) {
        auto it = by_id.find(entry.stream_id);
        if (it == by_id.end()) {
            fail(ErrorCode::invalid_input, "manifest stream '" + entry.stream_id + "' has no parsed stream");
        }
        const auto& s = *it->second;
        if (s.empty()) fail(ErrorCode::invalid_input, "stream '" + s.stream_id + "' is empty");
        StreamIndexEntry e;
        e.stream_id = s.stream_id;
        e.modality = s.modality;
        e.offset_ms = s.timestamps_ms.front();
        e.end_ms = s.timestamps_ms.back();
        e.rate_hz = s.rate_hz;
        e.sample_count = static_cast<std::int64_t>(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.timestamps_ms[i] != grid_time(e.offset_ms, e.rate_hz, static_cast<std::int64_t>(i))) {
                e.timestamps_ms = s.timestamps_ms;
                break;
            }
        }
        t0 = std::min(t0, e.offset_ms);
        t1 = std::max(t1, e.end_ms);
        index.streams.push_back(std::move(e));
    }
    for (const auto& v : meta.videos) {
        VideoIndexEntry e;
        e.video_id = v.video_id;
        e.kind = v.kind;
        e.uri = v.uri;
        e.offset_ms = v.offset_ms;
        e.fps = v.fps;
        e.frame_count = v.frame_count;
        e.end_ms = v.frame_count > 0 ? static_cast<Millis>(std::ceil(e.frame_time(v.frame_count - 1))) : v.offset_ms;
        t0 = std::min(t0, e.offset_ms);
        t1 = std::max(t1, e.end_ms);
        index.videos.push_back(std::move(e));
    }
    if (index.streams.empty() && index.videos.empty()) {
        t0 = 0;
        t1 = 0;
    }
    index.t0_ms = t0;
    index.t1_ms = t1;
    return index;
}

WindowRef window_to_ref(const AlignmentIndex& index, std::string_view target_id, Millis start_ms, Millis end_ms) {
    if (start_ms > end_ms) fail(ErrorCode::invalid_input, "window start must not exceed end");
    if (const auto* s = index.find_stream(target_id)) {
        return make_ref(target_id, s->sample_count, static_cast<double>(s->offset_ms), static_cast<double>(s->end_ms),
                        start_ms, end_ms, [&](std::int64_t i) { return static_cast<double>(s->sample_time(i)); });
    }
    if (const auto* v = index.find_video(target_id)) {
        const double last = v->frame_count > 0 ? v->frame_time(v->frame_count - 1) : static_cast<double>(v->offset_ms);
        return make_ref(target_id, v->frame_count, static_cast<double>(v->offset_ms), last, start_ms, end_ms,
                        [&](std::int64_t i) { return v->frame_time(i); });
    }
    fail(ErrorCode::not_found, "unknown target '" + std::string(target_id) + "'");
}

double target_time(const AlignmentIndex& index, std::string_view target_id, std::int64_t i) {
    if (const auto* s = index.find_stream(target_id)) return static_cast<double>(s->sample_time(i));
    if (const auto* v = index.find_video(target_id)) return v->frame_time(i);
    fail(ErrorCode::not_found, "unknown target '" + std::string(target_id) + "'");
}

double target_period_ms(const AlignmentIndex& index, std::string_view target_id) {
    if (const auto* s = index.find_stream(target_id)) return s->period_ms();
    if (const auto* v = index.find_video(target_id)) return v->period_ms();
    fail(ErrorCode::not_found, "unknown target '" + std::string(target_id) + "'");
}

std::int64_t time_to_frame(const AlignmentIndex& index, std::string_view video_id, Millis t_ms) {
    const auto* v = index.find_video(video_id);
    if (!v) fail(ErrorCode::not_found, "unknown video '" + std::string(video_id) + "'");
    if (v->frame_count <= 0) return 0;
    const double raw = std::floor(static_cast<double>(t_ms - v->offset_ms) * v->fps / 1000.0);
    return static_cast<std::int64_t>(std::clamp(raw, 0.0, static_cast<double>(v->frame_count - 1)));
}

bool time_outside_video(const AlignmentIndex& index, std::string_view video_id, Millis t_ms) {
    const auto* v = index.find_video(video_id);
    if (!v) fail(ErrorCode::not_found, "unknown video '" + std::string(video_id) + "'");
    if (v->frame_count <= 0) return true;
    const double frame = std::floor(static_cast<double>(t_ms - v->offset_ms) * v->fps / 1000.0);
    return frame < 0.0 || frame > static_cast<double>(v->frame_count - 1);
}

WindowRef stream_window(const SignalStream& stream, Millis start_ms, Millis end_ms) {
    if (start_ms > end_ms) fail(ErrorCode::invalid_input, "window start must not exceed end");
    const auto& ts = stream.timestamps_ms;
    const auto n = static_cast<std::int64_t>(ts.size());
    const double first = n ? static_cast<double>(ts.front()) : 0.0;
    const double last = n ? static_cast<double>(ts.back()) : 0.0;
    return make_ref(stream.stream_id, n, first, last, start_ms, end_ms,
                    [&](std::int64_t i) { return static_cast<double>(ts[static_cast<std::size_t>(i)]); });
}

std::vector<EnvelopeBucket> downsample_envelope(const SignalStream& stream, std::string_view channel,
                                                Millis bucket_ms, std::optional<Interval> window) {
    if (bucket_ms <= 0) fail(ErrorCode::invalid_input, "bucket_ms must be > 0");
    const std::size_t col = stream.channel_index(channel);
    std::vector<EnvelopeBucket> out;
    if (stream.empty()) return out;
    const Interval span = window.value_or(Interval{stream.timestamps_ms.front(), stream.timestamps_ms.back()});
    if (span.start_ms > span.end_ms) fail(ErrorCode::invalid_input, "window start must not exceed end");
    const Millis length = span.end_ms - span.start_ms;
    const std::int64_t buckets = std::max<std::int64_t>(1, (length + bucket_ms - 1) / bucket_ms);

    auto ref = stream_window(stream, span.start_ms, span.end_ms);
    std::int64_t current = -1;
    for (auto i = ref.start_idx; i < ref.end_idx; ++i) {
        const double v = stream.at(static_cast<std::size_t>(i), col);
        if (std::isnan(v)) continue;
        const Millis t = stream.timestamps_ms[static_cast<std::size_t>(i)];
        const std::int64_t b = std::min((t - span.start_ms) / bucket_ms, buckets - 1);
        if (b != current) {
            out.push_back({span.start_ms + b * bucket_ms, v, v});
            current = b;
        } else {
            out.back().min = std::min(out.back().min, v);
            out.back().max = std::max(out.back().max, v);
        }
    }
    return out;
}

void to_json(nlohmann::json& j, const AlignmentIndex& index) {
    nlohmann::json streams = nlohmann::json::array();
    for (const auto& s : index.streams) {
        nlohmann::json e = {{"stream_id", s.stream_id},       {"modality_kind", to_string(s.modality)},
                            {"offset_ms", s.offset_ms},       {"end_ms", s.end_ms},
                            {"rate_hz", s.rate_hz},           {"sample_count", s.sample_count}};
        if (!s.timestamps_ms.empty()) e["timestamps_ms"] = s.timestamps_ms;
        streams.push_back(std::move(e));
    }
    nlohmann::json videos = nlohmann::json::array();
    for (const auto& v : index.videos) {
        videos.push_back({{"video_id", v.video_id},   {"kind", to_string(v.kind)},
                          {"uri", v.uri},             {"offset_ms", v.offset_ms},
                          {"end_ms", v.end_ms},       {"fps", v.fps},
                          {"frame_count", v.frame_count}});
    }
    j = {{"session_id", index.session_id}, {"t0_ms", index.t0_ms},
         {"t1_ms", index.t1_ms},           {"streams", std::move(streams)},
         {"videos", std::move(videos)},    {"index_revision", index.index_revision}};
}

void from_json(const nlohmann::json& j, AlignmentIndex& index) {
    index.session_id = j.at("session_id").get<std::string>();
    index.t0_ms = j.at("t0_ms").get<Millis>();
    index.t1_ms = j.at("t1_ms").get<Millis>();
    index.index_revision = j.value("index_revision", std::uint64_t{0});
    index.streams.clear();
    for (const auto& e : j.at("streams")) {
        StreamIndexEntry s;
        s.stream_id = e.at("stream_id").get<std::string>();
        s.modality = modality_from_string(e.at("modality_kind").get<std::string>());
        s.offset_ms = e.at("offset_ms").get<Millis>();
        s.end_ms = e.at("end_ms").get<Millis>();
        s.rate_hz = e.at("rate_hz").get<double>();
        s.sample_count = e.at("sample_count").get<std::int64_t>();
        if (e.contains("timestamps_ms")) s.timestamps_ms = e["timestamps_ms"].get<std::vector<Millis>>();
        index.streams.push_back(std::move(s));
    }
    index.videos.clear();
    for (const auto& e : j.at("videos")) {
        VideoIndexEntry v;
        v.video_id = e.at("video_id").get<std::string>();
        v.kind = video_kind_from_string(e.at("kind").get<std::string>());
        v.uri = e.value("uri", std::string{});
        v.offset_ms = e.at("offset_ms").get<Millis>();
        v.end_ms = e.at("end_ms").get<Millis>();
        v.fps = e.at("fps").get<double>();
        v.frame_count = e.at("frame_count").get<std::int64_t>();
        index.videos.push_back(std::move(v));
    }
}

void to_json(nlohmann::json& j, const WindowRef& ref) {
    j = {{"target_id", ref.target_id}, {"start_idx", ref.start_idx}, {"end_idx", ref.end_idx},
         {"start_ms", ref.start_ms},   {"end_ms", ref.end_ms},       {"out_of_span", ref.out_of_span}};
}

void from_json(const nlohmann::json& j, WindowRef& ref) {
    ref.target_id = j.at("target_id").get<std::string>();
    ref.start_idx = j.at("start_idx").get<std::int64_t>();
    ref.end_idx = j.at("end_idx").get<std::int64_t>();
    ref.start_ms = j.at("start_ms").get<Millis>();
    ref.end_ms = j.at("end_ms").get<Millis>();
    ref.out_of_span = j.at("out_of_span").get<bool>();
}

void to_json(nlohmann::json& j, const EnvelopeBucket& b) {
    j = {{"t_ms", b.t_ms}, {"min", b.min}, {"max", b.max}};
}

}  // namespace emowb
