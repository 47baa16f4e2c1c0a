#pragma once

// Synthetic signals and shared helpers for the test binaries.

#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "emowb/events.hpp"
#include "emowb/packets.hpp"
#include "emowb/timeline.hpp"
#include "emowb/types.hpp"

namespace synth {

using emowb::Millis;
using emowb::ModalityKind;
using emowb::SignalStream;
using Rng = std::mt19937_64;

inline std::filesystem::path fixture_dir() { return EMOWB_FIXTURE_DIR; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("emowb-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int integer(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline bool chance(Rng& rng, double p) { return uniform(rng, 0.0, 1.0) < p; }

inline SignalStream make_stream(std::string id, ModalityKind kind, std::vector<std::string> channels,
                                std::vector<Millis> ts, std::vector<double> values, double rate_hz) {
    SignalStream s;
    s.stream_id = std::move(id);
    s.modality = kind;
    s.channel_names = std::move(channels);
    s.timestamps_ms = std::move(ts);
    s.values = std::move(values);
    s.rate_hz = rate_hz;
    return s;
}

/// Grid timestamps offset + round(i * 1000 / rate), optionally jittered by up to +-jitter ms
/// (kept strictly increasing).
inline std::vector<Millis> grid(Rng& rng, std::size_t n, double rate_hz, Millis offset, Millis jitter = 0) {
    std::vector<Millis> ts;
    for (std::size_t i = 0; i < n; ++i) {
        Millis t = offset + static_cast<Millis>(std::llround(static_cast<double>(i) * 1000.0 / rate_hz));
        if (jitter > 0) t += integer(rng, -static_cast<int>(jitter), static_cast<int>(jitter));
        if (!ts.empty() && t <= ts.back()) t = ts.back() + 1;
        ts.push_back(t);
    }
    return ts;
}

/// Sparse bumps over a noisy baseline, sometimes quantized to force plateaus and ties.
inline std::vector<double> bumpy_series(Rng& rng, std::size_t n, double max_height) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(rng, 0.0, 0.4);
    const int bumps = integer(rng, 0, 6);
    for (int b = 0; b < bumps; ++b) {
        const double centre = uniform(rng, 0.0, static_cast<double>(n));
        const double width = uniform(rng, 1.0, 12.0);
        const double height = uniform(rng, 0.3, max_height);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (static_cast<double>(i) - centre) / width;
            v[i] += height * std::exp(-u * u);
        }
    }
    if (chance(rng, 0.4)) {
        const double step = chance(rng, 0.5) ? 0.25 : 0.5;
        for (auto& x : v) x = std::round(x / step) * step;
    }
    return v;
}

/// Punches a few NaN runs into a row-major value array.
inline void punch_gaps(Rng& rng, std::vector<double>& values, std::size_t channels, double probability) {
    const std::size_t rows = values.size() / channels;
    if (rows < 8 || !chance(rng, probability)) return;
    const int holes = integer(rng, 1, 2);
    for (int h = 0; h < holes; ++h) {
        const auto start = static_cast<std::size_t>(integer(rng, 0, static_cast<int>(rows) - 4));
        const auto len = static_cast<std::size_t>(integer(rng, 1, 3));
        for (std::size_t r = start; r < std::min(rows, start + len); ++r) {
            for (std::size_t c = 0; c < channels; ++c) values[r * channels + c] = NAN;
        }
    }
}

inline SignalStream random_au(Rng& rng) {
    const std::size_t n = static_cast<std::size_t>(integer(rng, 3, 220));
    const double rate = std::vector<double>{10.0, 25.0, 30.0, 60.0}[static_cast<std::size_t>(integer(rng, 0, 3))];
    const std::size_t channels = static_cast<std::size_t>(integer(rng, 1, 3));
    std::vector<std::string> names;
    const char* codes[] = {"AU01_r", "AU06_r", "AU12_r"};
    for (std::size_t c = 0; c < channels; ++c) names.emplace_back(codes[c]);
    std::vector<std::vector<double>> cols;
    for (std::size_t c = 0; c < channels; ++c) cols.push_back(bumpy_series(rng, n, 4.5));
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < channels; ++c) values.push_back(cols[c][i]);
    }
    punch_gaps(rng, values, channels, 0.3);
    auto ts = grid(rng, n, rate, integer(rng, -500, 5000), chance(rng, 0.2) ? 3 : 0);
    return make_stream("face", ModalityKind::au, names, ts, values, rate);
}

inline emowb::AuPeakParams random_au_params(Rng& rng) {
    emowb::AuPeakParams p;
    p.min_intensity = uniform(rng, 0.0, 2.0);
    p.min_prominence = chance(rng, 0.2) ? 0.0 : uniform(rng, 0.0, 1.5);
    p.min_separation_ms = integer(rng, 1, 1500);
    p.half_window_ms = integer(rng, 1, 2000);
    return p;
}

/// 1..3 joints, still stretches interrupted by bursts of movement.
inline SignalStream random_skeleton(Rng& rng) {
    const std::size_t n = static_cast<std::size_t>(integer(rng, 2, 160));
    const double rate = chance(rng, 0.5) ? 30.0 : 10.0;
    const std::size_t joints = static_cast<std::size_t>(integer(rng, 1, 3));
    std::vector<std::string> names;
    for (std::size_t j = 0; j < joints; ++j) {
        for (const char* axis : {"_x", "_y", "_z"}) names.push_back("j" + std::to_string(j) + axis);
    }
    std::vector<double> pos(3 * joints);
    for (auto& x : pos) x = uniform(rng, -1.0, 1.0);
    const double quiet = chance(rng, 0.2) ? 0.0 : 0.002;
    std::vector<double> values;
    int burst = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (burst == 0 && chance(rng, 0.05)) burst = integer(rng, 2, 20);
        const double step = burst > 0 ? uniform(rng, 0.01, 0.2) : quiet;
        if (burst > 0) --burst;
        for (auto& x : pos) x += uniform(rng, -step, step);
        values.insert(values.end(), pos.begin(), pos.end());
    }
    auto ts = grid(rng, n, rate, integer(rng, 0, 2000), chance(rng, 0.2) ? 4 : 0);
    return make_stream("body", ModalityKind::skeleton, names, ts, values, rate);
}

inline emowb::MotionParams random_motion_params(Rng& rng) {
    emowb::MotionParams p;
    p.frame_window_ms = integer(rng, 1, 500);
    p.threshold_k = std::vector<double>{0.0, 0.5, 1.0, 2.0, 3.0}[static_cast<std::size_t>(integer(rng, 0, 4))];
    p.min_duration_ms = integer(rng, 1, 600);
    return p;
}

/// Single-channel energy series with pulses, plateaus and the odd flat series.
inline SignalStream random_energy(Rng& rng) {
    const std::size_t n = static_cast<std::size_t>(integer(rng, 1, 300));
    std::vector<double> v;
    if (chance(rng, 0.05)) {
        v.assign(n, uniform(rng, 0.0, 2.0));
    } else {
        v = bumpy_series(rng, n, 6.0);
        if (chance(rng, 0.3)) {
            const auto at = static_cast<std::size_t>(integer(rng, 0, static_cast<int>(n) - 1));
            const auto len = static_cast<std::size_t>(integer(rng, 1, 30));
            for (std::size_t i = at; i < std::min(n, at + len); ++i) v[i] = 8.0;
        }
    }
    punch_gaps(rng, v, 1, 0.2);
    auto ts = grid(rng, n, 30.0, integer(rng, 0, 1000), chance(rng, 0.2) ? 5 : 0);
    return make_stream("body", ModalityKind::skeleton, {"energy"}, ts, v, 30.0);
}

/// Baseline with drift, Gaussian bumps and ramps; long enough for the slope window.
inline SignalStream random_physio(Rng& rng, const emowb::PhysioParams& params) {
    const ModalityKind kinds[] = {ModalityKind::eda, ModalityKind::bvp, ModalityKind::hr};
    const auto kind = kinds[integer(rng, 0, 2)];
    const double rate = std::vector<double>{4.0, 8.0, 16.0, 32.0}[static_cast<std::size_t>(integer(rng, 0, 3))];
    const double min_s = 2.0 * static_cast<double>(params.slope_window_ms) / 1000.0 + 1.0;
    const double seconds = uniform(rng, min_s, std::max(min_s + 1.0, std::min(40.0, 320.0 / rate)));
    const auto n = static_cast<std::size_t>(seconds * rate);
    std::vector<double> v(n);
    const double base = uniform(rng, 0.5, 80.0);
    const double drift = uniform(rng, -0.05, 0.05);
    const double noise = chance(rng, 0.3) ? 0.0 : uniform(rng, 0.0, 0.2);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = base + drift * static_cast<double>(i) / rate + uniform(rng, -noise, noise);
    }
    const int features = integer(rng, 0, 4);
    for (int f = 0; f < features; ++f) {
        const double centre = uniform(rng, 0.0, seconds);
        const double height = uniform(rng, -3.0, 6.0);
        if (chance(rng, 0.5)) {
            const double width = uniform(rng, 0.2, 2.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double u = (static_cast<double>(i) / rate - centre) / width;
                v[i] += height * std::exp(-u * u);
            }
        } else {
            const double rise = uniform(rng, 0.5, 4.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / rate;
                if (t >= centre) v[i] += height * std::min(1.0, (t - centre) / rise);
            }
        }
    }
    punch_gaps(rng, v, 1, 0.15);
    auto ts = grid(rng, n, rate, integer(rng, 0, 3000), chance(rng, 0.2) ? 6 : 0);
    return make_stream("wrist", kind, {std::string(emowb::to_string(kind))}, ts, v, rate);
}

inline emowb::PhysioParams random_physio_params(Rng& rng) {
    emowb::PhysioParams p;
    for (auto& [kind, ms] : p.smooth_ms) ms = integer(rng, 50, 1000);
    p.z_threshold = uniform(rng, 0.5, 3.5);
    p.slope_window_ms = integer(rng, 500, 4000);
    p.slope_delta = uniform(rng, 0.0, 2.0);
    return p;
}

/// One joint moving `step_m` along x per sample at `rate_hz`; the rest fixed.
inline SignalStream single_moving_joint(std::size_t n, double rate_hz, double step_m, std::size_t joints = 3) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < joints; ++j) {
        for (const char* axis : {"_x", "_y", "_z"}) names.push_back("joint" + std::to_string(j) + axis);
    }
    std::vector<double> values;
    std::vector<Millis> ts;
    for (std::size_t i = 0; i < n; ++i) {
        ts.push_back(static_cast<Millis>(std::llround(static_cast<double>(i) * 1000.0 / rate_hz)));
        for (std::size_t j = 0; j < joints; ++j) {
            values.push_back(j == joints - 1 ? step_m * static_cast<double>(i) : 0.1 * static_cast<double>(j));
            values.push_back(1.0);
            values.push_back(0.5);
        }
    }
    return make_stream("body", ModalityKind::skeleton, names, ts, values, rate_hz);
}

/// Triangle (up then down), ramp and constant physio series at 4 Hz over 20 s.
inline SignalStream physio_shape(const std::string& shape) {
    std::vector<Millis> ts;
    std::vector<double> v;
    for (int i = 0; i <= 80; ++i) {
        const double t = i / 4.0;
        ts.push_back(i * 250);
        if (shape == "triangle") {
            v.push_back(t <= 10.0 ? 1.0 + 0.3 * t : 1.0 + 0.3 * (20.0 - t));
        } else if (shape == "ramp") {
            v.push_back(1.0 + 0.2 * t);
        } else {
            v.push_back(2.5);
        }
    }
    return make_stream("eda", ModalityKind::eda, {"eda"}, ts, v, 4.0);
}

/// Session with 2..4 streams on varied grids and 1..2 videos, plus its index.
struct RandomSession {
    emowb::SessionMeta meta;
    std::vector<SignalStream> streams;
    emowb::AlignmentIndex index;
};

inline RandomSession random_session(Rng& rng) {
    RandomSession out;
    out.meta.session_id = "rand";
    out.meta.participant_id = "p";
    out.meta.scene_id = "lobby";
    const int n_streams = integer(rng, 2, 4);
    const ModalityKind kinds[] = {ModalityKind::au, ModalityKind::eda, ModalityKind::hr, ModalityKind::bvp};
    for (int k = 0; k < n_streams; ++k) {
        const double rate = std::vector<double>{4.0, 10.0, 30.0, 64.0}[static_cast<std::size_t>(integer(rng, 0, 3))];
        const auto n = static_cast<std::size_t>(integer(rng, 2, 600));
        const Millis jitter = chance(rng, 0.3) ? integer(rng, 1, 5) : 0;
        auto ts = grid(rng, n, rate, integer(rng, -1000, 3000), jitter);
        const auto id = "s" + std::to_string(k);
        const auto kind = kinds[k % 4];
        out.meta.streams.push_back({id, kind, rate, "", 0});
        out.streams.push_back(make_stream(id, kind, {"c"}, ts, std::vector<double>(n, 1.0), rate));
    }
    const int n_videos = integer(rng, 1, 2);
    for (int k = 0; k < n_videos; ++k) {
        out.meta.videos.push_back({"v" + std::to_string(k), "v.mp4", uniform(rng, 10.0, 60.0), integer(rng, 1, 900),
                                   integer(rng, -500, 1500),
                                   k == 0 ? emowb::VideoKind::first_person : emowb::VideoKind::face_avatar,
                                   std::nullopt});
    }
    out.index = emowb::build_alignment_index(out.meta, out.streams);
    return out;
}

/// Random group inside (or slightly beyond) the index span.
inline emowb::EventGroup random_group(Rng& rng, const emowb::AlignmentIndex& index) {
    emowb::EventGroup g;
    const Millis a = integer(rng, static_cast<int>(index.t0_ms) - 300, static_cast<int>(index.t1_ms));
    g.span = {a, a + integer(rng, 0, 4000)};
    g.anchor_ms = integer(rng, static_cast<int>(g.span.start_ms), static_cast<int>(g.span.end_ms));
    g.members = {"evt-" + std::to_string(a)};
    g.group_id = "grp-" + std::to_string(a);
    return g;
}

/// A legal action for a packet in `state`, or nullopt when the state is terminal.
inline std::optional<emowb::PacketAction> random_legal_action(Rng& rng, const emowb::EventPacket& packet) {
    using emowb::PacketAction;
    using emowb::PacketState;
    switch (packet.state) {
        case PacketState::verified: return std::nullopt;
        case PacketState::discarded: return PacketAction::restore();
        default: break;
    }
    const double r = uniform(rng, 0.0, 1.0);
    if (r < 0.1) return PacketAction::verify();
    if (r < 0.3) return PacketAction::discard();
    const Millis a = packet.boundary.start_ms + integer(rng, -2000, 2000);
    return PacketAction::edit({a, a + integer(rng, 1, 5000)}, "e" + std::to_string(integer(rng, 0, 99)));
}

}  // namespace synth
