#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "emowb/timeline.hpp"

using namespace emowb;

namespace {

struct Fixture {
    SessionMeta meta;
    std::vector<SignalStream> streams;
    AlignmentIndex index;
};

Fixture fixture(std::size_t seconds, Millis jitter) {
    Fixture f;
    f.meta.session_id = "bench";
    f.meta.participant_id = "p";
    f.meta.scene_id = "lobby";
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<Millis> wobble(-jitter, jitter);
    const std::pair<const char*, double> grids[] = {{"face", 30.0}, {"eda", 4.0}, {"bvp", 64.0}};
    for (const auto& [id, rate] : grids) {
        SignalStream s;
        s.stream_id = id;
        s.modality = ModalityKind::hr;
        s.channel_names = {"v"};
        s.rate_hz = rate;
        const auto n = static_cast<std::size_t>(static_cast<double>(seconds) * rate);
        for (std::size_t i = 0; i < n; ++i) {
            s.timestamps_ms.push_back(static_cast<Millis>(std::llround(static_cast<double>(i) * 1000.0 / rate)) +
                                      (jitter > 0 && i > 0 ? wobble(rng) : 0));
            s.values.push_back(std::sin(static_cast<double>(i) * 0.01));
        }
        f.meta.streams.push_back({id, ModalityKind::hr, rate, "", 0});
        f.streams.push_back(std::move(s));
    }
    f.index = build_alignment_index(f.meta, f.streams);
    return f;
}

void window_queries(benchmark::State& state, Millis jitter) {
    const auto f = fixture(3600, jitter);
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<Millis> start(f.index.t0_ms, f.index.t1_ms);
    for (auto _ : state) {
        const Millis a = start(rng);
        benchmark::DoNotOptimize(window_to_ref(f.index, "bvp", a, a + 2500));
    }
}

void BM_window_to_ref_regular(benchmark::State& state) { window_queries(state, 0); }
void BM_window_to_ref_jittered(benchmark::State& state) { window_queries(state, 3); }
BENCHMARK(BM_window_to_ref_regular);
BENCHMARK(BM_window_to_ref_jittered);

void BM_envelope(benchmark::State& state) {
    const auto f = fixture(3600, 0);
    const auto& bvp = f.streams[2];
    for (auto _ : state) benchmark::DoNotOptimize(downsample_envelope(bvp, "v", state.range(0)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(bvp.size()));
}
BENCHMARK(BM_envelope)->Arg(100)->Arg(1000)->Arg(60'000);

}  // namespace
