#include "emowb/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>
#include <set>

#include "emowb/error.hpp"
#include "text_util.hpp"

namespace emowb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string_view>> rows;
    char delim = ',';
};

Table read_table(std::string_view text) {
    Table t;
    auto ls = detail::lines(text);
    std::size_t i = 0;
    while (i < ls.size() && detail::trim(ls[i]).empty()) ++i;
    if (i == ls.size()) fail(ErrorCode::invalid_input, "file is empty");
    t.delim = detail::detect_delimiter(ls[i]);
    for (auto cell : detail::split(ls[i], t.delim)) t.header.emplace_back(detail::trim(cell));
    for (++i; i < ls.size(); ++i) {
        if (detail::trim(ls[i]).empty()) continue;
        t.rows.push_back(detail::split(ls[i], t.delim));
    }
    return t;
}

/// Builds a stream from table rows. `time_of` maps the raw time cell to
/// session milliseconds. Rows with garbage cells are dropped and counted;
/// NaN cells stay as gap values.
template <class TimeFn>
ParseResult build_from_table(const Table& table, std::size_t time_col, const std::vector<std::size_t>& value_cols,
                             std::vector<std::string> channel_names, ModalityKind kind, const ParseContext& ctx,
                             TimeFn time_of, std::optional<std::size_t> success_col = std::nullopt) {
    SignalStream s;
    s.stream_id = ctx.stream_id;
    s.modality = kind;
    s.channel_names = std::move(channel_names);
    ParseReport report;
    report.stream_id = ctx.stream_id;

    std::vector<double> row_values(value_cols.size());
    for (const auto& row : table.rows) {
        ++report.rows_read;
        if (row.size() != table.header.size()) {
            ++report.rows_dropped;
            continue;
        }
        auto t = time_of(row[time_col]);
        if (!t) {
            ++report.rows_dropped;
            continue;
        }
        bool ok = true;
        for (std::size_t c = 0; c < value_cols.size(); ++c) {
            auto cell = row[value_cols[c]];
            if (detail::is_nan_token(cell)) {
                row_values[c] = kNaN;
            } else if (auto v = detail::parse_finite(cell)) {
                row_values[c] = *v;
            } else {
                ok = false;
                break;
            }
        }
        if (!ok) {
            ++report.rows_dropped;
            continue;
        }
        if (success_col) {
            // OpenFace writes zeros when tracking fails; those are gaps, not neutral faces.
            auto success = detail::parse_finite(row[*success_col]);
            if (success && *success == 0.0) std::fill(row_values.begin(), row_values.end(), kNaN);
        }
        s.timestamps_ms.push_back(*t);
        s.values.insert(s.values.end(), row_values.begin(), row_values.end());
    }
    if (s.empty()) fail(ErrorCode::invalid_input, "stream '" + ctx.stream_id + "' has no parseable rows");
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s.timestamps_ms[i] <= s.timestamps_ms[i - 1]) {
            fail(ErrorCode::invalid_input, "stream '" + ctx.stream_id + "': non-monotonic timestamps at row " +
                                               std::to_string(i));
        }
    }
    if (ctx.declared_rate_hz > 0.0) {
        s.rate_hz = ctx.declared_rate_hz;
    } else if (s.size() >= 2) {
        std::vector<Millis> dts;
        for (std::size_t i = 1; i < s.size(); ++i) dts.push_back(s.timestamps_ms[i] - s.timestamps_ms[i - 1]);
        std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
        s.rate_hz = 1000.0 / static_cast<double>(dts[dts.size() / 2]);
        report.warnings.push_back("no declared rate; estimated " + std::to_string(s.rate_hz) + " Hz from median step");
    } else {
        fail(ErrorCode::invalid_input, "stream '" + ctx.stream_id + "': single sample and no declared rate");
    }
    if (report.rows_dropped > 0) {
        report.warnings.push_back(std::to_string(report.rows_dropped) + " unparseable rows dropped");
    }
    report.gaps = find_gaps(s);
    validate(s);
    return {std::move(s), std::move(report)};
}

auto relative_ms(const ParseContext& ctx) {
    return [offset = ctx.time_offset_ms](std::string_view cell) -> std::optional<Millis> {
        auto t = detail::parse_millis(cell);
        if (!t) return std::nullopt;
        return *t + offset;
    };
}

std::size_t require_column(const Table& t, std::string_view name, std::string_view what) {
    auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) {
        fail(ErrorCode::invalid_input, std::string(what) + ": missing " + std::string(name) + " column");
    }
    return static_cast<std::size_t>(it - t.header.begin());
}

void reject_duplicate_columns(const Table& t, std::string_view what) {
    std::set<std::string> seen;
    for (const auto& h : t.header) {
        if (!seen.insert(h).second) {
            fail(ErrorCode::invalid_input, std::string(what) + ": duplicate column '" + h + "'");
        }
    }
}

}  // namespace

void to_json(nlohmann::json& j, const ParseReport& r) {
    j = {{"stream_id", r.stream_id},
         {"rows_read", r.rows_read},
         {"rows_dropped", r.rows_dropped},
         {"gaps", r.gaps},
         {"warnings", r.warnings}};
}

void from_json(const nlohmann::json& j, ParseReport& r) {
    r.stream_id = j.at("stream_id").get<std::string>();
    r.rows_read = j.at("rows_read").get<std::size_t>();
    r.rows_dropped = j.at("rows_dropped").get<std::size_t>();
    r.gaps = j.at("gaps").get<std::vector<Interval>>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
}

ParseResult parse_au_csv(std::string_view text, const ParseContext& ctx) {
    auto table = read_table(text);
    auto time_col = require_column(table, "timestamp", "AU csv");
    static const std::regex au_pattern("AU[0-9][0-9]_r");
    std::vector<std::size_t> cols;
    std::vector<std::string> names;
    std::optional<std::size_t> success_col;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (std::regex_match(table.header[i], au_pattern)) {
            cols.push_back(i);
            names.push_back(table.header[i]);
        } else if (table.header[i] == "success") {
            success_col = i;
        }
    }
    if (cols.empty()) fail(ErrorCode::invalid_input, "AU csv: no AU columns");
    auto seconds_to_ms = [offset = ctx.time_offset_ms](std::string_view cell) -> std::optional<Millis> {
        auto s = detail::parse_finite(cell);
        if (!s) return std::nullopt;
        return static_cast<Millis>(std::llround(*s * 1000.0)) + offset;
    };
    return build_from_table(table, time_col, cols, std::move(names), ModalityKind::au, ctx, seconds_to_ms,
                            success_col);
}

ParseResult parse_physio_csv(std::string_view text, ModalityKind kind, const ParseContext& ctx) {
    if (kind != ModalityKind::bvp && kind != ModalityKind::hr && kind != ModalityKind::eda) {
        fail(ErrorCode::invalid_input, "physio csv: kind must be bvp, hr or eda");
    }
    std::vector<std::string_view> ls;
    for (auto l : detail::lines(text)) {
        if (!detail::trim(l).empty()) ls.push_back(l);
    }
    if (ls.empty()) fail(ErrorCode::invalid_input, "physio csv: empty body");
    const char delim = detail::detect_delimiter(ls[0]);
    const auto fields = detail::split(ls[0], delim).size();
    const std::string channel(to_string(kind));

    if (fields == 2) {
        Table table;
        table.delim = delim;
        std::size_t first = 0;
        auto head = detail::split(ls[0], delim);
        if (!detail::parse_finite(head[0])) {
            for (auto h : head) table.header.emplace_back(detail::trim(h));
            first = 1;
        } else {
            table.header = {"t_ms", "value"};
        }
        for (std::size_t i = first; i < ls.size(); ++i) table.rows.push_back(detail::split(ls[i], delim));
        if (table.rows.empty()) fail(ErrorCode::invalid_input, "physio csv: empty body");
        return build_from_table(table, 0, {1}, {channel}, kind, ctx, relative_ms(ctx));
    }
    if (fields != 1) fail(ErrorCode::invalid_input, "physio csv: unknown format");

    // Wearable export: start epoch (s), rate (Hz), then values.
    auto start_s = detail::parse_finite(ls[0]);
    if (!start_s || ls.size() < 2) fail(ErrorCode::invalid_input, "physio csv: unknown format");
    auto rate = detail::parse_finite(ls[1]);
    if (!rate) fail(ErrorCode::invalid_input, "physio csv: unknown format");
    if (*rate <= 0.0) fail(ErrorCode::invalid_input, "physio csv: rate must be > 0");
    if (ls.size() < 3) fail(ErrorCode::invalid_input, "physio csv: empty body");
    if (ctx.declared_rate_hz > 0.0 && std::abs(ctx.declared_rate_hz - *rate) > 1e-9 * *rate) {
        fail(ErrorCode::invalid_input, "physio csv: header rate " + std::string(detail::trim(ls[1])) +
                                           " Hz disagrees with the declared rate");
    }

    SignalStream s;
    s.stream_id = ctx.stream_id;
    s.modality = kind;
    s.channel_names = {channel};
    s.rate_hz = *rate;
    ParseReport report;
    report.stream_id = ctx.stream_id;
    const Millis base = static_cast<Millis>(std::llround(*start_s * 1000.0)) - ctx.recording_epoch_ms +
                        ctx.time_offset_ms;
    for (std::size_t i = 2; i < ls.size(); ++i) {
        ++report.rows_read;
        const auto sample = static_cast<double>(i - 2);
        const Millis t = base + static_cast<Millis>(std::llround(sample * 1000.0 / *rate));
        double v = kNaN;
        if (!detail::is_nan_token(ls[i])) {
            auto parsed = detail::parse_finite(ls[i]);
            if (!parsed) {
                ++report.rows_dropped;
                continue;
            }
            v = *parsed;
        }
        if (!s.timestamps_ms.empty() && t <= s.timestamps_ms.back()) {
            fail(ErrorCode::invalid_input, "physio csv: rate too high for millisecond timestamps");
        }
        s.timestamps_ms.push_back(t);
        s.values.push_back(v);
    }
    if (s.empty()) fail(ErrorCode::invalid_input, "physio csv: empty body");
    if (report.rows_dropped > 0) {
        report.warnings.push_back(std::to_string(report.rows_dropped) + " unparseable rows dropped");
    }
    report.gaps = find_gaps(s);
    validate(s);
    return {std::move(s), std::move(report)};
}

ParseResult parse_skeleton(std::string_view text, const ParseContext& ctx) {
    auto table = read_table(text);
    if (table.header.empty() || table.header[0] != "t_ms") {
        fail(ErrorCode::invalid_input, "skeleton: first column must be t_ms");
    }
    reject_duplicate_columns(table, "skeleton");
    const std::size_t value_count = table.header.size() - 1;
    if (value_count == 0 || value_count % 3 != 0) {
        fail(ErrorCode::invalid_input, "skeleton: column count must be 1 + 3*joints (incomplete triple)");
    }
    std::set<std::string> joints;
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < value_count / 3; ++j) {
        const auto& x = table.header[1 + 3 * j];
        if (x.size() < 3 || x.substr(x.size() - 2) != "_x") {
            fail(ErrorCode::invalid_input, "skeleton: expected <joint>_x at column " + std::to_string(1 + 3 * j));
        }
        const auto joint = x.substr(0, x.size() - 2);
        if (table.header[2 + 3 * j] != joint + "_y" || table.header[3 + 3 * j] != joint + "_z") {
            fail(ErrorCode::invalid_input, "skeleton: incomplete triple for joint '" + joint + "'");
        }
        if (!joints.insert(joint).second) {
            fail(ErrorCode::invalid_input, "skeleton: duplicate joint '" + joint + "'");
        }
        for (std::size_t k = 0; k < 3; ++k) cols.push_back(1 + 3 * j + k);
    }
    std::vector<std::string> names(table.header.begin() + 1, table.header.end());
    return build_from_table(table, 0, cols, std::move(names), ModalityKind::skeleton, ctx, relative_ms(ctx));
}

ParseResult parse_imu(std::string_view text, const ParseContext& ctx) {
    static const std::vector<std::string> expected = {"t_ms",  "acc_x", "acc_y", "acc_z",
                                                      "gyr_x", "gyr_y", "gyr_z"};
    auto table = read_table(text);
    reject_duplicate_columns(table, "imu");
    if (table.header != expected) {
        fail(ErrorCode::invalid_input, "imu: header must be t_ms,acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z");
    }
    std::vector<std::string> names(expected.begin() + 1, expected.end());
    return build_from_table(table, 0, {1, 2, 3, 4, 5, 6}, std::move(names), ModalityKind::imu, ctx,
                            relative_ms(ctx));
}

ParseResult parse_stream_file(std::string_view text, const StreamEntry& entry, Millis recording_epoch_ms) {
    ParseContext ctx{entry.stream_id, recording_epoch_ms, entry.time_offset_ms, entry.declared_rate_hz};
    switch (entry.modality) {
        case ModalityKind::au: return parse_au_csv(text, ctx);
        case ModalityKind::skeleton: return parse_skeleton(text, ctx);
        case ModalityKind::imu: return parse_imu(text, ctx);
        case ModalityKind::bvp:
        case ModalityKind::hr:
        case ModalityKind::eda: return parse_physio_csv(text, entry.modality, ctx);
    }
    fail(ErrorCode::invalid_input, "unsupported modality");
}

std::vector<Interval> find_gaps(const SignalStream& stream) {
    std::vector<Interval> raw;
    const double period = stream.rate_hz > 0.0 ? 1000.0 / stream.rate_hz : 0.0;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        if (stream.row_has_gap(i)) {
            const Millis t = stream.timestamps_ms[i];
            if (!raw.empty() && i > 0 && stream.row_has_gap(i - 1)) {
                raw.back().end_ms = t;
            } else {
                raw.push_back({t, t});
            }
        }
        if (i + 1 < stream.size() && period > 0.0) {
            const Millis a = stream.timestamps_ms[i];
            const Millis b = stream.timestamps_ms[i + 1];
            if (static_cast<double>(b - a) > 2.0 * period) raw.push_back({a + 1, b - 1});
        }
    }
    std::sort(raw.begin(), raw.end(), [](const Interval& x, const Interval& y) {
        return std::tie(x.start_ms, x.end_ms) < std::tie(y.start_ms, y.end_ms);
    });
    std::vector<Interval> merged;
    for (const auto& g : raw) {
        if (!merged.empty() && g.start_ms <= merged.back().end_ms + 1) {
            merged.back().end_ms = std::max(merged.back().end_ms, g.end_ms);
        } else {
            merged.push_back(g);
        }
    }
    return merged;
}

SignalStream resample(const SignalStream& stream, double target_rate_hz) {
    if (stream.size() < 2) fail(ErrorCode::invalid_input, "resample needs at least 2 samples");
    if (!(target_rate_hz > 0.0) || target_rate_hz > 1000.0) {
        fail(ErrorCode::invalid_input, "resample target rate must be in (0, 1000] Hz");
    }
    const double max_bridge = 2.0 * 1000.0 / stream.rate_hz;
    const auto& ts = stream.timestamps_ms;
    const Millis first = ts.front();
    const Millis last = ts.back();

    SignalStream out;
    out.stream_id = stream.stream_id;
    out.modality = stream.modality;
    out.channel_names = stream.channel_names;
    out.rate_hz = target_rate_hz;
    const std::size_t nch = stream.channels();

    std::size_t j = 0;
    for (std::int64_t k = 0;; ++k) {
        const Millis t = first + static_cast<Millis>(std::llround(static_cast<double>(k) * 1000.0 / target_rate_hz));
        if (t > last) break;
        while (j + 1 < ts.size() && ts[j + 1] <= t) ++j;
        out.timestamps_ms.push_back(t);
        for (std::size_t c = 0; c < nch; ++c) {
            if (ts[j] == t) {
                out.values.push_back(stream.at(j, c));
                continue;
            }
            const double span = static_cast<double>(ts[j + 1] - ts[j]);
            const double a = stream.at(j, c);
            const double b = stream.at(j + 1, c);
            if (span > max_bridge || std::isnan(a) || std::isnan(b)) {
                out.values.push_back(kNaN);
                continue;
            }
            const double f = static_cast<double>(t - ts[j]) / span;
            out.values.push_back(a + (b - a) * f);
        }
    }
    return out;
}

std::vector<std::string> joint_names(const SignalStream& skeleton) {
    std::vector<std::string> out;
    for (std::size_t c = 0; c + 2 < skeleton.channels(); c += 3) {
        const auto& x = skeleton.channel_names[c];
        out.push_back(x.size() > 2 ? x.substr(0, x.size() - 2) : x);
    }
    return out;
}

}  // namespace emowb
