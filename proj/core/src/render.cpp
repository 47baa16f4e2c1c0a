#include "emowb/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "emowb/error.hpp"

namespace emowb {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr Rgb kBackground{16, 16, 24};
constexpr Rgb kCursor{255, 64, 64};
constexpr std::array<Rgb, 6> kPalette{{{80, 200, 255}, {255, 200, 80}, {120, 230, 120},
                                       {230, 120, 230}, {240, 240, 240}, {255, 140, 90}}};

struct Band {
    std::size_t channel = 0;
    int top = 0;
    int height = 0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Linear interpolation at a fractional time; NaN outside the data, across
/// gap samples, or across holes longer than two nominal periods.
double value_at(const SignalStream& s, std::size_t col, double t) {
    const auto& ts = s.timestamps_ms;
    if (ts.empty() || t < static_cast<double>(ts.front()) || t > static_cast<double>(ts.back())) {
        return std::nan("");
    }
    auto it = std::upper_bound(ts.begin(), ts.end(), t,
                               [](double v, Millis m) { return v < static_cast<double>(m); });
    const auto j = static_cast<std::size_t>(it - ts.begin()) - 1;
    if (static_cast<double>(ts[j]) == t || j + 1 >= ts.size()) return s.at(j, col);
    const double span = static_cast<double>(ts[j + 1] - ts[j]);
    if (span > 2.0 * 1000.0 / s.rate_hz) return std::nan("");
    const double a = s.at(j, col);
    const double b = s.at(j + 1, col);
    return a + (b - a) * (t - static_cast<double>(ts[j])) / span;
}

void put(RasterFrame& f, int x, int y, const Rgb& c) {
    auto* p = &f.rgb[(static_cast<std::size_t>(y) * f.width + x) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
}

}  // namespace

std::string RasterFrame::to_ppm() const {
    std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
    return out;
}

std::vector<RasterFrame> render_signal_frames(const SignalStream& stream, const RenderView& view) {
    if (view.width_px < 2 || view.height_px < 1) fail(ErrorCode::invalid_input, "raster must be at least 2x1 pixels");
    if (view.end_ms <= view.start_ms) fail(ErrorCode::invalid_input, "view span must be positive");
    if (!(view.fps > 0.0)) fail(ErrorCode::invalid_input, "fps must be > 0");
    if (view.window_ms <= 0) fail(ErrorCode::invalid_input, "window_ms must be > 0");

    std::vector<std::size_t> channels;
    if (view.channel) {
        channels.push_back(stream.channel_index(*view.channel));
    } else if (view.stacked) {
        for (std::size_t c = 0; c < stream.channels(); ++c) channels.push_back(c);
    } else {
        channels.push_back(0);
    }

    const int band_height = view.height_px / static_cast<int>(channels.size());
    if (band_height < 1) fail(ErrorCode::invalid_input, "raster too short for the stacked channels");

    std::vector<Band> bands;
    const Millis visible_from = view.start_ms - view.window_ms;
    for (std::size_t k = 0; k < channels.size(); ++k) {
        Band b;
        b.channel = channels[k];
        b.top = static_cast<int>(k) * band_height;
        b.height = k + 1 == channels.size() ? view.height_px - b.top : band_height;
        bool any = false;
        for (std::size_t r = 0; r < stream.size(); ++r) {
            const Millis t = stream.timestamps_ms[r];
            const double v = stream.at(r, b.channel);
            if (t < visible_from || t > view.end_ms || std::isnan(v)) continue;
            b.lo = any ? std::min(b.lo, v) : v;
            b.hi = any ? std::max(b.hi, v) : v;
            any = true;
        }
        if (!any) fail(ErrorCode::invalid_input, "empty window: no samples to render");
        bands.push_back(b);
    }

    auto to_row = [](const Band& b, double v) {
        if (b.hi == b.lo) return b.top + b.height / 2;
        // interpolation against a sample just outside the visible range can overshoot
        const double u = std::clamp((v - b.lo) / (b.hi - b.lo), 0.0, 1.0);
        return b.top + static_cast<int>(std::lround((b.height - 1) * (1.0 - u)));
    };

    const double px_ms = static_cast<double>(view.window_ms) / static_cast<double>(view.width_px - 1);
    std::vector<RasterFrame> frames;
    for (std::int64_t k = 0;; ++k) {
        const Millis t = view.start_ms + static_cast<Millis>(std::llround(static_cast<double>(k) * 1000.0 / view.fps));
        if (t > view.end_ms) break;
        RasterFrame f;
        f.width = view.width_px;
        f.height = view.height_px;
        f.t_ms = t;
        f.rgb.resize(static_cast<std::size_t>(f.width) * f.height * 3);
        for (std::size_t i = 0; i < f.rgb.size(); i += 3) {
            f.rgb[i] = kBackground[0];
            f.rgb[i + 1] = kBackground[1];
            f.rgb[i + 2] = kBackground[2];
        }
        for (std::size_t bi = 0; bi < bands.size(); ++bi) {
            const auto& b = bands[bi];
            const auto& color = kPalette[b.channel % kPalette.size()];
            auto column_time = [&](int x) {
                return static_cast<double>(t) - static_cast<double>(view.width_px - 1 - x) * px_ms;
            };
            double prev = value_at(stream, b.channel, column_time(-1));
            for (int x = 0; x < view.width_px; ++x) {
                const double cur = value_at(stream, b.channel, column_time(x));
                if (!std::isnan(cur)) {
                    int y0 = to_row(b, cur);
                    int y1 = std::isnan(prev) ? y0 : to_row(b, prev);
                    if (y0 > y1) std::swap(y0, y1);
                    for (int y = y0; y <= y1; ++y) put(f, x, y, color);
                }
                prev = cur;
            }
        }
        for (int y = 0; y < f.height; ++y) put(f, f.width - 1, y, kCursor);
        frames.push_back(std::move(f));
    }
    return frames;
}

}  // namespace emowb
