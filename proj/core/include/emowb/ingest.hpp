#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "emowb/types.hpp"

namespace emowb {

struct ParseReport {
    std::string stream_id;
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0;
    std::vector<Interval> gaps;  // sorted, non-overlapping
    std::vector<std::string> warnings;

    bool operator==(const ParseReport&) const = default;
};

void to_json(nlohmann::json& j, const ParseReport& r);
void from_json(const nlohmann::json& j, ParseReport& r);

/// Where a parsed file sits on the session clock.
struct ParseContext {
    std::string stream_id;
    Millis recording_epoch_ms = 0;
    // Added to the file's relative time column.
    Millis time_offset_ms = 0;
    // Nominal rate for formats that carry no rate of their own.
    double declared_rate_hz = 0.0;
};

using ParseResult = std::pair<SignalStream, ParseReport>;

/// OpenFace CSV: `frame`, `timestamp` (seconds) and `AUxx_r` intensity
/// columns. `_c` presence columns and everything else are ignored.
ParseResult parse_au_csv(std::string_view text, const ParseContext& ctx);

/// Either a wearable export (line 1 absolute start epoch in seconds, line 2
/// rate in Hz, then one value per line) or `t_ms,value` rows. Auto-detected.
ParseResult parse_physio_csv(std::string_view text, ModalityKind kind, const ParseContext& ctx);

/// `t_ms` then `<joint>_x, <joint>_y, <joint>_z` triples, metres.
ParseResult parse_skeleton(std::string_view text, const ParseContext& ctx);

/// `t_ms,acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z`.
ParseResult parse_imu(std::string_view text, const ParseContext& ctx);

/// Dispatch on the manifest entry's modality.
ParseResult parse_stream_file(std::string_view text, const StreamEntry& entry, Millis recording_epoch_ms);

/// Linear interpolation onto t_k = t_first + round(k * 1000 / rate) up to
/// t_last. Never bridges a gap sample or a hole longer than two nominal
/// input periods; those outputs are NaN.
SignalStream resample(const SignalStream& stream, double target_rate_hz);

/// Gap intervals of a stream: runs of rows containing NaN, plus timestamp
/// holes longer than two nominal periods.
std::vector<Interval> find_gaps(const SignalStream& stream);

/// Joint names of a skeleton stream in channel order.
std::vector<std::string> joint_names(const SignalStream& skeleton);

}  // namespace emowb
