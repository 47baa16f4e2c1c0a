#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "emowb/events.hpp"

using namespace emowb;

namespace {

SignalStream stream(std::string id, ModalityKind kind, std::vector<std::string> channels, std::size_t n, double rate,
                    std::mt19937_64& rng) {
    SignalStream s;
    s.stream_id = std::move(id);
    s.modality = kind;
    s.channel_names = std::move(channels);
    s.rate_hz = rate;
    std::normal_distribution<double> noise(0.0, 0.05);
    for (std::size_t i = 0; i < n; ++i) {
        s.timestamps_ms.push_back(static_cast<Millis>(std::llround(static_cast<double>(i) * 1000.0 / rate)));
        for (std::size_t c = 0; c < s.channel_names.size(); ++c) {
            const double t = static_cast<double>(i) / rate;
            s.values.push_back(1.0 + std::sin(t * (0.3 + 0.1 * static_cast<double>(c))) + noise(rng));
        }
    }
    return s;
}

void BM_au_peaks(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto s = stream("face", ModalityKind::au, {"AU01_r", "AU06_r", "AU12_r"},
                          static_cast<std::size_t>(state.range(0)), 30.0, rng);
    for (auto _ : state) benchmark::DoNotOptimize(detect_au_peaks(s, {}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_au_peaks)->Arg(1'000)->Arg(18'000)->Arg(108'000);

void BM_motion(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::vector<std::string> names;
    for (int j = 0; j < 20; ++j) {
        for (const char* axis : {"_x", "_y", "_z"}) names.push_back("j" + std::to_string(j) + axis);
    }
    const auto s = stream("body", ModalityKind::skeleton, names, static_cast<std::size_t>(state.range(0)), 30.0, rng);
    for (auto _ : state) {
        const auto energy = motion_energy(s, MotionParams{}.frame_window_ms);
        benchmark::DoNotOptimize(detect_motion_events(energy, {}));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_motion)->Arg(1'000)->Arg(18'000);

void BM_physio(benchmark::State& state) {
    std::mt19937_64 rng(3);
    const auto s = stream("wrist", ModalityKind::eda, {"eda"}, static_cast<std::size_t>(state.range(0)), 4.0, rng);
    for (auto _ : state) benchmark::DoNotOptimize(detect_physio_events(s, "eda", {}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_physio)->Arg(2'400)->Arg(14'400);

}  // namespace
