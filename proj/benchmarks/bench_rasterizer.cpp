#include <benchmark/benchmark.h>

#include "sketchanim/rasterizer.hpp"

using namespace sketchanim;

namespace {

Sketch3D bench_sketch(int curves) {
  InitOptions opts;
  opts.n_curves = curves;
  opts.seed = 7;
  opts.radius = 0.6;
  opts.min_step = 0.05;
  opts.max_step = 0.2;
  return init_sketch(opts);
}

void BM_RenderView(benchmark::State& state) {
  const auto sketch = bench_sketch(16);
  const auto vp = Viewpoint::canonical(ViewKind::front, kDefaultCameraDistance,
                                       kDefaultFovDeg, int(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_view(sketch, vp));
  }
}
BENCHMARK(BM_RenderView)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Backward(benchmark::State& state) {
  const auto sketch = bench_sketch(16);
  const auto vp = Viewpoint::canonical(ViewKind::front, kDefaultCameraDistance,
                                       kDefaultFovDeg, int(state.range(0)));
  const auto r = render_view(sketch, vp);
  const std::vector<double> grad(r.image.pixel_count(), 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(backward(r.tape, grad));
  }
}
BENCHMARK(BM_Backward)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
