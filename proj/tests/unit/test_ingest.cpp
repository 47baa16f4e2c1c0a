#include <cmath>

#include "doctest.h"
#include "emowb/error.hpp"
#include "emowb/ingest.hpp"
#include "emowb/store.hpp"
#include "synth.hpp"

using namespace emowb;

namespace {

ParseContext ctx(std::string id, double rate = 0.0, Millis epoch = 0, Millis offset = 0) {
    return {std::move(id), epoch, offset, rate};
}

bool throws_invalid(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == ErrorCode::invalid_input;
    }
    return false;
}

}  // namespace

TEST_CASE("OpenFace csv: seconds to ms, AU intensity columns only, success=0 rows become gaps") {
    const std::string text =
        "frame, face_id, timestamp, confidence, success, AU01_r, AU12_r, AU12_c\n"
        "1, 0, 0.000, 0.98, 1, 0.10, 1.50, 1\n"
        "2, 0, 0.033, 0.98, 1, 0.20, 2.50, 1\n"
        "3, 0, 0.067, 0.00, 0, 0.00, 0.00, 0\n"
        "4, 0, 0.100, 0.98, 1, 0.30, 0.25, 0\n";
    auto [s, report] = parse_au_csv(text, ctx("face", 30.0));
    CHECK(s.channel_names == std::vector<std::string>{"AU01_r", "AU12_r"});
    CHECK(s.timestamps_ms == std::vector<Millis>{0, 33, 67, 100});
    CHECK(s.at(1, 1) == 2.5);
    CHECK(std::isnan(s.at(2, 0)));
    CHECK(std::isnan(s.at(2, 1)));
    CHECK(s.rate_hz == 30.0);
    CHECK(report.rows_read == 4);
    CHECK(report.rows_dropped == 0);
    REQUIRE(report.gaps.size() == 1);
    CHECK(report.gaps[0] == Interval{67, 67});
}

TEST_CASE("OpenFace csv: garbage rows are dropped and counted; missing timestamp is an error") {
    const std::string text =
        "frame,timestamp,AU06_r\n"
        "1,0.0,0.5\n"
        "2,abc,0.6\n"
        "3,0.2,oops\n"
        "4,0.3\n"
        "5,0.4,0.9\n";
    auto [s, report] = parse_au_csv(text, ctx("face", 10.0));
    CHECK(s.size() == 2);
    CHECK(report.rows_read == 5);
    CHECK(report.rows_dropped == 3);
    CHECK_FALSE(report.warnings.empty());
    CHECK(throws_invalid([] { parse_au_csv("frame,AU06_r\n1,0.5\n", ctx("f")); }));
    CHECK(throws_invalid([] { parse_au_csv("frame,timestamp\n1,0.5\n", ctx("f")); }));
    CHECK(throws_invalid([] { parse_au_csv("timestamp,AU06_r\n0.2,1\n0.1,1\n", ctx("f", 10.0)); }));
}

TEST_CASE("rate is estimated from the median step when none is declared") {
    auto [s, report] = parse_au_csv("timestamp,AU06_r\n0.0,1\n0.1,1\n0.2,1\n0.5,1\n0.6,1\n", ctx("f"));
    CHECK(s.rate_hz == doctest::Approx(10.0));
    CHECK_FALSE(report.warnings.empty());
    // the 300 ms hole is more than two nominal periods
    REQUIRE(report.gaps.size() == 1);
    CHECK(report.gaps[0] == Interval{201, 499});
}

TEST_CASE("physio t_ms,value form with and without a header") {
    auto [a, ra] = parse_physio_csv("t_ms,eda\n0,1.0\n250,1.5\n500,nan\n750,2.0\n", ModalityKind::eda, ctx("w", 4.0));
    CHECK(a.timestamps_ms == std::vector<Millis>{0, 250, 500, 750});
    CHECK(a.channel_names == std::vector<std::string>{"eda"});
    CHECK(std::isnan(a.at(2, 0)));
    CHECK(ra.gaps == std::vector<Interval>{{500, 500}});
    auto [b, rb] = parse_physio_csv("0,60\n1000,61\n", ModalityKind::hr, ctx("h", 1.0, 0, 5000));
    CHECK(b.timestamps_ms == std::vector<Millis>{5000, 6000});
    CHECK(b.at(1, 0) == 61.0);
    CHECK(throws_invalid([] { parse_physio_csv("0,1\n", ModalityKind::imu, ctx("x")); }));
}

TEST_CASE("physio wearable form: absolute epoch seconds, rate, values") {
    // recording starts at 1000.0 s; the device started 2.5 s later at 4 Hz
    const std::string text = "1002.5\n4.0\n0.1\n0.2\n0.3\n";
    auto [s, report] = parse_physio_csv(text, ModalityKind::eda, ctx("w", 4.0, 1'000'000));
    CHECK(s.timestamps_ms == std::vector<Millis>{2500, 2750, 3000});
    CHECK(s.rate_hz == 4.0);
    CHECK(report.rows_read == 3);
    CHECK(throws_invalid([&] { parse_physio_csv(text, ModalityKind::eda, ctx("w", 8.0, 1'000'000)); }));
    CHECK(throws_invalid([] { parse_physio_csv("1002.5\n0\n1\n", ModalityKind::eda, ctx("w")); }));
}

TEST_CASE("skeleton and imu headers are checked") {
    auto [s, r] = parse_skeleton("t_ms,head_x,head_y,head_z,hand_x,hand_y,hand_z\n0,0,1,2,3,4,5\n100,0,1,2,3,4,6\n",
                                 ctx("b", 10.0));
    CHECK(joint_names(s) == std::vector<std::string>{"head", "hand"});
    CHECK(s.at(1, 5) == 6.0);
    CHECK(throws_invalid([] { parse_skeleton("t_ms,head_x,head_y\n0,1,2\n", ctx("b", 10.0)); }));
    CHECK(throws_invalid([] { parse_skeleton("t_ms,head_x,head_y,head_q\n0,1,2,3\n", ctx("b", 10.0)); }));
    CHECK(throws_invalid([] { parse_skeleton("time,head_x,head_y,head_z\n0,1,2,3\n", ctx("b", 10.0)); }));
    auto [imu, ri] = parse_imu("t_ms,acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z\n0,1,2,3,4,5,6\n10,1,2,3,4,5,6\n", ctx("i", 100.0));
    CHECK(imu.channels() == 6);
    CHECK(throws_invalid([] { parse_imu("t_ms,acc_x\n0,1\n", ctx("i", 100.0)); }));
}

TEST_CASE("parse_stream_file dispatches on modality and applies the manifest offset") {
    StreamEntry e{"w", ModalityKind::eda, 4.0, "", 1000};
    auto [s, r] = parse_stream_file("0,1\n250,2\n", e, 0);
    CHECK(s.timestamps_ms == std::vector<Millis>{1000, 1250});
    CHECK(s.modality == ModalityKind::eda);
}

TEST_CASE("resample interpolates linearly and never bridges gaps") {
    auto s = synth::make_stream("w", ModalityKind::eda, {"eda"}, {0, 100, 200, 300, 900, 1000},
                                {0.0, 1.0, NAN, 3.0, 9.0, 10.0}, 10.0);
    auto r = resample(s, 20.0);
    REQUIRE(r.size() == 21);
    for (std::size_t k = 0; k < r.size(); ++k) {
        const Millis t = r.timestamps_ms[k];
        CHECK(t == static_cast<Millis>(50 * k));
        const double v = r.at(k, 0);
        if (t <= 100) {
            CHECK(v == doctest::Approx(t / 100.0));
        } else if (t < 300 || (t > 300 && t < 900)) {
            CHECK(std::isnan(v));  // touches the NaN sample or the 600 ms hole
        } else if (t == 300) {
            CHECK(v == 3.0);
        } else {
            CHECK(v == doctest::Approx(9.0 + (t - 900) / 100.0));
        }
    }
    CHECK(throws_invalid([&] { resample(s, 0.0); }));
}

TEST_CASE("find_gaps merges NaN runs and holes") {
    auto s = synth::make_stream("w", ModalityKind::eda, {"eda"}, {0, 100, 200, 300, 400, 1000, 1100},
                                {1, NAN, NAN, 1, 1, 1, NAN}, 10.0);
    CHECK(find_gaps(s) == std::vector<Interval>{{100, 200}, {401, 999}, {1100, 1100}});
}

TEST_CASE("fixture files parse cleanly") {
    const auto dir = synth::fixture_dir();
    auto [au, r1] = parse_au_csv(read_file(dir / "au.csv"), ctx("face_au", 30.0));
    CHECK(au.size() == 1800);
    CHECK(au.channels() == 8);
    CHECK(r1.gaps.size() == 1);
    auto [sk, r2] = parse_skeleton(read_file(dir / "skeleton.csv"), ctx("body", 30.0));
    CHECK(joint_names(sk).size() == 5);
    CHECK(r2.rows_dropped == 0);
    auto [eda, r3] = parse_physio_csv(read_file(dir / "eda.csv"), ModalityKind::eda, ctx("wrist_eda", 4.0));
    CHECK(eda.size() == 240);
    CHECK(r3.gaps.empty());
}
