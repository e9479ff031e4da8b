#include "sketchanim/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>

#include "json.hpp"
#include "sketchanim/motion.hpp"
#include "sketchanim/seeding.hpp"
#include "sketchanim/stage1.hpp"

namespace sketchanim {

namespace {

constexpr int kRasterSize = 128;
constexpr double kRasterStep = 1e-3;
constexpr double kLossStep = 1e-6;
constexpr double kFloorFraction = 1e-3;

struct CaseError {
  double max_relative = 0.0;
  int components = 0;
};

CaseError compare(const std::vector<double>& analytic,
                  const std::vector<double>& numeric) {
  double scale = 0.0;
  for (double n : numeric) scale = std::max(scale, std::abs(n));
  CaseError out;
  const double floor = std::max(kFloorFraction * scale, 1e-300);
  for (std::size_t k = 0; k < numeric.size(); ++k) {
    const double denom = std::max(std::abs(numeric[k]), floor);
    const double err = std::abs(analytic[k] - numeric[k]) / denom;
    // A NaN must fail the check, so it is folded in explicitly.
    out.max_relative = std::isnan(err) ? INFINITY : std::max(out.max_relative, err);
    ++out.components;
  }
  return out;
}

double weighted_sum(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

std::vector<double> random_normal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> out(n);
  for (auto& v : out) v = g(rng);
  return out;
}

// Pixels whose field sits near F = 1, or with a sample near d = sigma, are
// not differentiable at the finite-difference step and get no loss weight.
void mask_clamp_band(const RasterTape& tape, std::vector<double>& weights) {
  const double band = 0.05 * tape.options.sigma;
  for (std::size_t p = 0; p < tape.field.size(); ++p) {
    if (std::abs(tape.field[p] - 1.0) < 0.05) weights[p] = 0.0;
  }
  for (const auto& e : tape.entries) {
    if (tape.options.sigma - e.distance < band) weights[e.pixel] = 0.0;
  }
}

CaseError raster_case(std::uint64_t seed, bool sign_flip) {
  std::mt19937_64 rng(seed);
  InitOptions init;
  init.n_curves = 3;
  init.seed = seed;
  init.radius = 0.5;
  init.min_step = 0.1;
  init.max_step = 0.3;
  const Sketch3D sketch = init_sketch(init);
  std::uniform_real_distribution<double> az(0.0, 360.0);
  std::uniform_real_distribution<double> el(-60.0, 60.0);
  const Viewpoint vp = Viewpoint::custom(az(rng), el(rng), kDefaultCameraDistance,
                                         kDefaultFovDeg, kRasterSize);
  const RasterOptions opts{2.0, 16};
  const std::vector<double> params = as_flat_parameters(sketch);
  const std::vector<double> loss_grad = random_normal(
      std::size_t(kRasterSize) * kRasterSize, rng);

  auto render = [&](const std::vector<double>& p) {
    return render_view(from_flat_parameters(p, &sketch), vp, opts);
  };

  const auto base = render(params);
  std::vector<double> analytic(params.size());
  std::vector<double> numeric(params.size());
  // Fourth-order central stencil: the second-order one leaves a truncation
  // error of about (sample shift / sigma)^2, which is already 1e-3 here.
  constexpr std::array<double, 4> offsets = {-2.0, -1.0, 1.0, 2.0};
  constexpr std::array<double, 4> coeffs = {1.0, -8.0, 8.0, -1.0};
  for (std::size_t k = 0; k < params.size(); ++k) {
    std::vector<RasterResult> shifted;
    std::vector<double> w = loss_grad;
    mask_clamp_band(base.tape, w);
    for (double o : offsets) {
      auto p = params;
      p[k] += o * kRasterStep;
      shifted.push_back(render(p));
      mask_clamp_band(shifted.back().tape, w);
    }
    double acc = 0.0;
    for (std::size_t m = 0; m < offsets.size(); ++m) {
      acc += coeffs[m] * weighted_sum(w, shifted[m].image.intensity);
    }
    numeric[k] = acc / (12.0 * kRasterStep);
    analytic[k] = backward(base.tape, w)[k] * (sign_flip ? -1.0 : 1.0);
  }
  return compare(analytic, numeric);
}

std::vector<double> central_difference(
    std::vector<double> x, const std::function<double(const std::vector<double>&)>& f,
    double step) {
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = x[k];
    const double h = step * std::max(1.0, std::abs(orig));
    x[k] = orig + h;
    const double fp = f(x);
    x[k] = orig - h;
    const double fm = f(x);
    x[k] = orig;
    out[k] = (fp - fm) / (2.0 * h);
  }
  return out;
}

CaseError geometric_case(std::uint64_t seed) {
  InitOptions init;
  init.n_curves = 4;
  init.seed = seed;
  init.min_step = 0.05;
  init.max_step = 0.3;
  const Sketch3D sketch = init_sketch(init);
  const auto params = as_flat_parameters(sketch);
  const auto numeric = central_difference(
      params,
      [&](const std::vector<double>& p) {
        return geometric_loss(from_flat_parameters(p, &sketch)).value;
      },
      kLossStep);
  return compare(geometric_loss(sketch).grad, numeric);
}

DisplacementField random_field(int frames, int curves, std::mt19937_64& rng) {
  DisplacementField field(frames, curves);
  std::normal_distribution<double> g(0.0, 0.1);
  for (auto& p : field.data()) p = {g(rng), g(rng), g(rng)};
  return field;
}

std::vector<double> field_values(const DisplacementField& f) {
  std::vector<double> out;
  for (const auto& p : f.data()) {
    out.insert(out.end(), {p.x, p.y, p.z});
  }
  return out;
}

DisplacementField field_from(const std::vector<double>& v, int frames,
                             int curves) {
  DisplacementField f(frames, curves);
  auto d = f.data();
  for (std::size_t k = 0; k < d.size(); ++k) {
    d[k] = {v[3 * k], v[3 * k + 1], v[3 * k + 2]};
  }
  return f;
}

CaseError smoothness_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int frames = 2 + int(seed % 7);
  const int curves = 1 + int(seed % 5);
  const auto field = random_field(frames, curves, rng);
  const auto numeric = central_difference(
      field_values(field),
      [&](const std::vector<double>& v) {
        return smoothness_loss(field_from(v, frames, curves)).value;
      },
      kLossStep);
  return compare(field_values(smoothness_loss(field).grad), numeric);
}

// Loss = <G, reconstruct_3d(front, side)> for a random G; exercises the 1/2
// split of y between the two planes.
CaseError reconstruction_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int frames = 1 + int(seed % 4);
  const int curves = 1 + int(seed % 3);
  const std::size_t len = std::size_t(curves) * 8;
  const auto weights = random_field(frames, curves, rng);
  const auto weight_values = field_values(weights);

  std::vector<double> x = random_normal(2 * frames * len, rng);
  auto split = [&](const std::vector<double>& v) {
    std::vector<FlatViewVector> front, side;
    for (int k = 0; k < frames; ++k) {
      auto at = v.begin() + std::ptrdiff_t(2 * k * len);
      front.push_back({Plane::frontal, {at, at + std::ptrdiff_t(len)}});
      side.push_back({Plane::sagittal,
                      {at + std::ptrdiff_t(len), at + std::ptrdiff_t(2 * len)}});
    }
    return std::pair{front, side};
  };
  const auto numeric = central_difference(
      x,
      [&](const std::vector<double>& v) {
        auto [front, side] = split(v);
        return weighted_sum(weight_values,
                            field_values(reconstruct_3d(front, side)));
      },
      kLossStep);

  std::vector<FlatViewVector> gf, gs;
  reconstruct_3d_backward(weights, gf, gs);
  std::vector<double> analytic;
  for (int k = 0; k < frames; ++k) {
    analytic.insert(analytic.end(), gf[k].values.begin(), gf[k].values.end());
    analytic.insert(analytic.end(), gs[k].values.begin(), gs[k].values.end());
  }
  return compare(analytic, numeric);
}

CaseError motion_model_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int curves = 2;
  MotionModel model(curves, MotionModelOptions{12, 3, seed});
  // The output layer starts at zero; randomize it so every path is live.
  auto params = model.parameters();
  std::normal_distribution<double> g(0.0, 0.3);
  for (auto& p : params) {
    if (p == 0.0) p = g(rng);
  }
  InitOptions init;
  init.n_curves = curves;
  init.seed = seed;
  const Sketch3D base = init_sketch(init);
  const Plane plane = seed % 2 ? Plane::sagittal : Plane::frontal;
  const FlatViewVector input = flatten_view(base, plane);
  const int frames = 8;
  const int k = 1 + int(seed % 7);
  const auto loss_grad = random_normal(model.output_size(), rng);

  MotionModel::Cache cache;
  model.forward(input, k, frames, &cache);
  std::vector<double> analytic(model.parameter_count(), 0.0);
  model.backward(cache, loss_grad, analytic);

  const std::vector<double> start(params.begin(), params.end());
  const auto numeric = central_difference(
      start,
      [&](const std::vector<double>& p) {
        std::copy(p.begin(), p.end(), model.parameters().begin());
        return weighted_sum(loss_grad, model.forward(input, k, frames));
      },
      kLossStep);
  return compare(analytic, numeric);
}

GradcheckResult run_check(const std::string& name, int cases, double tol,
                          std::uint64_t seed,
                          const std::function<CaseError(std::uint64_t)>& fn) {
  GradcheckResult r;
  r.name = name;
  r.tolerance = tol;
  for (int c = 0; c < cases; ++c) {
    const auto e = fn(derive_seed(seed, {std::uint64_t(c)}));
    r.max_relative_error = std::max(r.max_relative_error, e.max_relative);
    r.components += e.components;
    ++r.cases;
  }
  r.passed = r.cases > 0 && r.max_relative_error < tol;
  return r;
}

}  // namespace

bool GradcheckReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const auto& c) { return c.passed; });
}

std::string GradcheckReport::to_jsonl() const {
  std::string out;
  for (const auto& c : checks) {
    nlohmann::json j{{"check", c.name},
                     {"cases", c.cases},
                     {"components", c.components},
                     {"max_rel_error", c.max_relative_error},
                     {"tolerance", c.tolerance},
                     {"pass", c.passed}};
    out += j.dump() + "\n";
  }
  nlohmann::json summary{{"summary", passed() ? "pass" : "fail"},
                         {"seconds", seconds}};
  out += summary.dump() + "\n";
  return out;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  GradcheckReport report;
  const int n = options.cases;
  const auto seed = options.seed;
  report.checks.push_back(run_check(
      "rasterizer", n, options.raster_tolerance, derive_seed(seed, {1}),
      [&](std::uint64_t s) { return raster_case(s, options.inject_sign_flip); }));
  report.checks.push_back(run_check("geometric_loss", n, options.loss_tolerance,
                                    derive_seed(seed, {2}), geometric_case));
  report.checks.push_back(run_check("smoothness_loss", n, options.loss_tolerance,
                                    derive_seed(seed, {3}), smoothness_case));
  report.checks.push_back(run_check("reconstruction", n, options.loss_tolerance,
                                    derive_seed(seed, {4}), reconstruction_case));
  report.checks.push_back(run_check("motion_model", n, options.loss_tolerance,
                                    derive_seed(seed, {5}), motion_model_case));
  report.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return report;
}

}  // namespace sketchanim
