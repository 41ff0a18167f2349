#include <benchmark/benchmark.h>

#include <random>

#include "adgen/background.hpp"
#include "adgen/evaluation.hpp"
#include "adgen/layout.hpp"
#include "adgen/mock_backends.hpp"
#include "adgen/pairing.hpp"

using namespace adgen;

namespace {

PointCloud floor_points(double tilt) {
    const int w = 320, h = 240;
    const auto k = intrinsics_from_fov(w, h);
    SyntheticPlaneParams p;
    p.tilt_deg = tilt;
    p.noise_sigma = 0.005;
    p.seed = 3;
    const auto depth = synthesize_plane_depth(w, h, k, p);
    return backproject_floor(depth, Mask(w, h, true), k);
}

void BM_FitFloorPlane(benchmark::State& state) {
    const auto points = floor_points(25.0);
    for (auto _ : state) benchmark::DoNotOptimize(fit_floor_plane(points));
}
BENCHMARK(BM_FitFloorPlane);

void BM_Backproject(benchmark::State& state) {
    const int w = 640, h = 480;
    const auto k = intrinsics_from_fov(w, h);
    SyntheticPlaneParams p;
    p.tilt_deg = 15.0;
    const auto depth = synthesize_plane_depth(w, h, k, p);
    const Mask mask(w, h, true);
    for (auto _ : state) benchmark::DoNotOptimize(backproject_floor(depth, mask, k));
}
BENCHMARK(BM_Backproject);

void BM_ParseLayout(benchmark::State& state) {
    LayoutSpec spec;
    spec.boxes = {LayoutBox{"gray sofa", 560, 300, 80, 468, 1}, LayoutBox{"floor lamp", 120, 520, 700, 248, 0}};
    const auto raw = serialize_layout(spec);
    for (auto _ : state) benchmark::DoNotOptimize(parse_layout(raw));
}
BENCHMARK(BM_ParseLayout);

void BM_InpaintMask(benchmark::State& state) {
    GrayImage alpha(kCanvasSize, kCanvasSize, 0);
    for (int y = 400; y < 768; ++y)
        for (int x = 200; x < 800; ++x) *alpha.at(x, y) = 255;
    const int margin = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(make_inpaint_mask(alpha, margin));
}
BENCHMARK(BM_InpaintMask)->Arg(0)->Arg(4)->Arg(16);

void BM_Aggregate(benchmark::State& state) {
    std::mt19937 rng(1);
    std::vector<EvalScore> scores(static_cast<std::size_t>(state.range(0)));
    const char* configs[] = {"A1", "A2", "A3", "A4", "Ours"};
    for (auto& s : scores) {
        s.score = 1 + static_cast<int>(rng() % 5);
        s.judge_model = "gpt-4o";
        s.config = configs[rng() % 5];
    }
    for (auto _ : state) benchmark::DoNotOptimize(aggregate(scores, EvalDimension::authenticity));
}
BENCHMARK(BM_Aggregate)->Arg(200)->Arg(10000);

}  // namespace
BENCHMARK_MAIN();
