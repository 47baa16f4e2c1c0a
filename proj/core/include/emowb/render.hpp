#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emowb/types.hpp"

namespace emowb {

struct RasterFrame {
    int width = 0;
    int height = 0;
    Millis t_ms = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

    /// Binary PPM (P6).
    std::string to_ppm() const;
    const std::uint8_t* pixel(int x, int y) const { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
};

struct RenderView {
    Millis start_ms = 0;
    Millis end_ms = 0;
    int width_px = 320;
    int height_px = 120;
    double fps = 10.0;
    // Length of the sliding window shown in each frame (ends at the frame time).
    Millis window_ms = 5000;
    // Channel to draw; when unset, channel 0 unless `stacked`.
    std::optional<std::string> channel;
    // Draw every channel in its own horizontal band.
    bool stacked = false;
};

/// One frame per t = start + round(k * 1000 / fps) <= end. Column x of the
/// frame at t samples the signal at t - (width-1-x) * window_ms / (width-1);
/// the polyline joins consecutive columns and a cursor marks the right edge.
/// Vertical scale is fixed per channel over [start - window_ms, end].
std::vector<RasterFrame> render_signal_frames(const SignalStream& stream, const RenderView& view);

}  // namespace emowb
