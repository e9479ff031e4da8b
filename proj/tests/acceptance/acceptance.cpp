// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sketchanim/gradcheck.hpp"
#include "sketchanim/motion.hpp"
#include "sketchanim/run_config.hpp"
#include "sketchanim/seeding.hpp"
#include "sketchanim/stage1.hpp"

using namespace sketchanim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* name, const Outcome& o) {
  std::printf("%s  %-26s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

Outcome gradient_suite() {
  const auto start = Clock::now();
  const auto r = run_gradcheck(GradcheckOptions{});
  const double secs = seconds_since(start);
  std::string detail;
  for (const auto& c : r.checks) {
    detail += fmt("%s=%.2e/%.0e ", c.name.c_str(), c.max_relative_error, c.tolerance);
  }
  detail += fmt("cases=%d time=%.1fs", r.checks.front().cases, secs);
  return {r.passed() && r.checks.front().cases >= 50 && secs < 120.0, detail};
}

Outcome reconstruction_exactness() {
  std::mt19937_64 rng(derive_seed(2024, {7}));
  std::uniform_int_distribution<int> frames_d(1, 16), curves_d(1, 32);
  std::normal_distribution<double> g(0.0, 1.0);
  double max_err = 0.0;
  bool index_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    DisplacementField truth(frames_d(rng), curves_d(rng));
    for (auto& p : truth.data()) p = {g(rng), g(rng), g(rng)};
    std::vector<FlatViewVector> front, side;
    for (int k = 0; k < truth.frames(); ++k) {
      front.push_back(flatten_delta(truth, k, Plane::frontal));
      side.push_back(flatten_delta(truth, k, Plane::sagittal));
      for (int i = 0; i < truth.curves(); ++i) {
        for (int j = 0; j < 4; ++j) {
          const std::size_t m = 2 * (4 * std::size_t(i) + j);
          const Point3& p = truth.at(k, i, j);
          index_ok = index_ok && front.back().values[m] == p.x &&
                     front.back().values[m + 1] == p.y &&
                     side.back().values[m] == p.y &&
                     side.back().values[m + 1] == p.z;
        }
      }
    }
    const auto rebuilt = reconstruct_3d(front, side);
    for (std::size_t n = 0; n < truth.data().size(); ++n) {
      const Point3 d = rebuilt.data()[n] - truth.data()[n];
      max_err = std::max({max_err, std::abs(d.x), std::abs(d.y), std::abs(d.z)});
    }
  }
  return {max_err < 1e-12 && index_ok,
          fmt("fields=100 max_abs_err=%.3g index_layout=%s", max_err,
              index_ok ? "ok" : "wrong")};
}

Point3 uniform_in_ball(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    const Point3 p{u(rng), u(rng), u(rng)};
    if (dot(p, p) <= 1.0) return p;
  }
}

Outcome projection_approximation() {
  std::mt19937_64 rng(derive_seed(2024, {3}));
  double worst = 0.0;
  int monotone = 0;
  const int n = 100;
  for (int c = 0; c < n; ++c) {
    BezierCurve curve;
    for (auto& p : curve.control) p = uniform_in_ball(rng);
    double prev = INFINITY;
    bool decreasing = true;
    for (double d : {4.0, 8.0, 16.0, 32.0}) {
      const double dev =
          projection_deviation(Viewpoint::custom(0.0, 0.0, d, 40.0, 512), curve);
      if (d == 4.0) worst = std::max(worst, dev);
      decreasing = decreasing && dev < prev;
      prev = dev;
    }
    if (decreasing) ++monotone;
  }
  return {worst < 1.5 && monotone == n,
          fmt("max_dev@d4=%.2fpx (limit 1.5) strictly_decreasing=%d/%d", worst,
              monotone, n)};
}

std::vector<Viewpoint> all_views(int size) {
  std::vector<Viewpoint> out;
  for (auto v : {ViewKind::front, ViewKind::back, ViewKind::left,
                 ViewKind::right, ViewKind::top}) {
    out.push_back(Viewpoint::canonical(v, kDefaultCameraDistance, kDefaultFovDeg, size));
  }
  return out;
}

double mean_view_l2(const Sketch3D& s, const std::map<std::string, RasterImage>& targets,
                    int size, const RasterOptions& opts) {
  double sum = 0.0;
  const auto views = all_views(size);
  for (const auto& vp : views) {
    sum += l2_distance(render_view(s, vp, opts).image,
                       targets.at(std::string(to_string(vp.kind))));
  }
  return sum / double(views.size());
}

// Hidden reference and its perturbed starting point for the structure
// recovery run.
struct Stage1Setup {
  Sketch3D reference;
  Sketch3D start;
  Stage1Config config;
};

Stage1Setup stage1_setup() {
  Stage1Setup s;
  InitOptions ref;
  ref.n_curves = 8;
  ref.seed = 11;
  ref.radius = 0.5;
  ref.min_step = 0.15;
  ref.max_step = 0.3;
  s.reference = init_sketch(ref);
  s.start = s.reference;
  std::mt19937_64 rng(derive_seed(11, {1}));
  std::normal_distribution<double> g(0.0, 0.1);
  for (auto& c : s.start.curves) {
    for (auto& p : c.control) p = p + Point3{g(rng), g(rng), g(rng)};
  }
  s.config.iters = 400;
  s.config.image_size = 64;
  s.config.seed = 5;
  s.config.prompt = "a hidden sketch";
  return s;
}

Outcome stage1_recovery() {
  const auto start = Clock::now();
  auto s = stage1_setup();
  const auto targets = render_view_targets(s.reference, s.config.image_size, s.config.raster);
  TargetImageProvider provider(targets);
  const double before = mean_view_l2(s.start, targets, s.config.image_size, s.config.raster);
  const auto r1 = optimize_structure(s.start, provider, s.config);
  const double secs = seconds_since(start);
  const auto r2 = optimize_structure(s.start, provider, s.config);
  const double after = mean_view_l2(r1.sketch, targets, s.config.image_size, s.config.raster);
  const bool deterministic = as_flat_parameters(r1.sketch) == as_flat_parameters(r2.sketch);
  const double ratio = after / before;
  return {ratio < 0.35 && deterministic && secs < 300.0,
          fmt("l2 %.4f -> %.4f ratio=%.3f (limit 0.35) deterministic=%s time=%.1fs",
              before, after, ratio, deterministic ? "yes" : "no", secs)};
}

Outcome stage2_recovery() {
  const auto start = Clock::now();
  InitOptions ref;
  ref.n_curves = 8;
  ref.seed = 23;
  ref.radius = 0.4;
  ref.min_step = 0.1;
  ref.max_step = 0.25;
  const Sketch3D base = init_sketch(ref);
  const Sketch3D base_copy = base;

  Stage2Config cfg;
  cfg.iters = 300;
  cfg.frames = 8;
  cfg.frame_size = 64;
  cfg.seed = 9;
  cfg.prompt = "a hidden sketch";
  cfg.motion_prompt = "moving to the side";

  const Point3 step{0.02, 0.012, -0.016};
  DisplacementField scripted(cfg.frames, int(base.curves.size()));
  for (int k = 0; k < cfg.frames; ++k) {
    for (int i = 0; i < scripted.curves(); ++i) {
      for (int j = 0; j < 4; ++j) scripted.at(k, i, j) = double(k) * step;
    }
  }
  const auto targets = render_plane_targets(base, scripted, cfg.frame_size, cfg.raster);
  TargetVideoProvider provider(targets);

  auto mean_frame_l2 = [&](const DisplacementField& field) {
    double sum = 0.0;
    int n = 0;
    for (auto plane : {Plane::frontal, Plane::sagittal}) {
      const auto& seq = targets.at(std::string(to_string(plane)));
      for (int k = 0; k < cfg.frames; ++k) {
        sum += l2_distance(render_frame(base, field, k, plane, cfg.frame_size, cfg.raster).image,
                           seq[k]);
        ++n;
      }
    }
    return sum / n;
  };

  MotionModel model(int(base.curves.size()), cfg.model);
  const double before = mean_frame_l2(DisplacementField(cfg.frames, scripted.curves()));
  const auto result = optimize_motion(base, model, provider, cfg);
  const double after = mean_frame_l2(result.field);
  const double ratio = after / before;

  bool frame0 = true;
  for (auto plane : {Plane::frontal, Plane::sagittal}) {
    frame0 = frame0 &&
             render_frame(base, result.field, 0, plane, cfg.frame_size, cfg.raster).image ==
                 render_ortho(base, OrthoFrame{plane, cfg.frame_size}, cfg.raster).image;
  }
  const bool untouched = as_flat_parameters(base) == as_flat_parameters(base_copy);
  return {ratio < 0.40 && frame0 && untouched,
          fmt("l2 %.4f -> %.4f ratio=%.3f (limit 0.40) frame0_exact=%s base_untouched=%s time=%.1fs",
              before, after, ratio, frame0 ? "yes" : "no", untouched ? "yes" : "no",
              seconds_since(start))};
}

Outcome curriculum() {
  Stage1Config defaults;
  const auto sched = defaults.schedule();
  std::mt19937_64 rng(derive_seed(2024, {5}));
  double max_first = 0.0, max_last = 0.0, min_all = 1.0;
  bool bounded = true;
  const int last = sched.total_iters - 1;
  for (int n = 0; n < 10000; ++n) {
    const double a = sample_timestep(sched, 0, rng);
    const double b = sample_timestep(sched, last, rng);
    max_first = std::max(max_first, a);
    max_last = std::max(max_last, b);
    min_all = std::min({min_all, a, b});
    bounded = bounded && a <= sched.t_max(0) && b <= sched.t_max(last);
  }
  std::uniform_int_distribution<int> any_iter(0, last);
  for (int n = 0; n < 10000; ++n) {
    const int it = any_iter(rng);
    const double t = sample_timestep(sched, it, rng);
    bounded = bounded && t <= sched.t_max(it);
    min_all = std::min(min_all, t);
  }
  const bool pass = bounded && max_first > 0.79 && max_first <= 0.8 &&
                    max_last > 0.59 && max_last <= 0.6 && min_all >= 0.02;
  return {pass, fmt("max@0=%.5f max@last=%.5f min=%.5f within_tmax=%s", max_first,
                    max_last, min_all, bounded ? "yes" : "no")};
}

Outcome defaults_conform() {
  const InitOptions init;
  const Stage1Config s1;
  const Stage2Config s2;
  const bool pass = init.n_curves == 16 && init.radius == 0.2 && s1.lr == 1.5e-3 &&
                    s2.lr == 1e-4 && s1.iters == 4000 && s2.iters == 1000 &&
                    s1.cfg_scale == 7.5 && s2.cfg_scale == 30.0 &&
                    s1.top_view_prob == 0.10;
  return {pass, fmt("N=%d radius=%g lr=%g/%g iters=%d/%d cfg=%g/%g top=%g", init.n_curves,
                    init.radius, s1.lr, s2.lr, s1.iters, s2.iters, s1.cfg_scale,
                    s2.cfg_scale, s1.top_view_prob)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient-suite", gradient_suite},
      {"reconstruction-exactness", reconstruction_exactness},
      {"projection-approximation", projection_approximation},
      {"stage1-recovery", stage1_recovery},
      {"stage2-recovery", stage2_recovery},
      {"curriculum", curriculum},
      {"defaults", defaults_conform},
  };
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && only != name) continue;
    try {
      report(name, fn());
    } catch (const std::exception& e) {
      report(name, {false, std::string("exception: ") + e.what()});
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
