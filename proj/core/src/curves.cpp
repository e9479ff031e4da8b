#include "sketchanim/curves.hpp"

#include <random>

#include "sketchanim/error.hpp"

namespace sketchanim {

Point3 evaluate(const BezierCurve& curve, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("bezier parameter t must lie in [0, 1], got " +
                      std::to_string(t));
  }
  const auto b = bernstein3(t);
  Point3 out;
  for (int j = 0; j < 4; ++j) out += b[j] * curve.control[j];
  return out;
}

namespace {

Point3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    Point3 v{gauss(rng), gauss(rng), gauss(rng)};
    const double n = norm(v);
    if (n > 1e-12) return v * (1.0 / n);
  }
}

Point3 random_in_ball(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Point3 dir = random_unit(rng);
  return dir * (radius * std::cbrt(unit(rng)));
}

}  // namespace

Sketch3D init_sketch(const InitOptions& options) {
  if (options.n_curves < 1) {
    throw ConfigError("n_curves must be at least 1");
  }
  if (!(options.min_step > 0.0) || options.min_step > options.max_step) {
    throw ConfigError("init steps must satisfy 0 < min_step <= max_step");
  }
  if (!(options.radius >= 0.0)) {
    throw ConfigError("init radius must be non-negative");
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> step(options.min_step,
                                              options.max_step);
  Sketch3D sketch;
  sketch.seed = options.seed;
  sketch.curves.resize(static_cast<std::size_t>(options.n_curves));
  for (auto& curve : sketch.curves) {
    curve.control[0] = random_in_ball(rng, options.radius);
    for (int j = 1; j < 4; ++j) {
      const Point3 dir = random_unit(rng);
      curve.control[j] = curve.control[j - 1] + dir * step(rng);
    }
  }
  return sketch;
}

std::vector<double> as_flat_parameters(const Sketch3D& sketch) {
  std::vector<double> flat;
  flat.reserve(sketch.curves.size() * kFloatsPerCurve);
  for (const auto& curve : sketch.curves) {
    for (const auto& p : curve.control) {
      flat.push_back(p.x);
      flat.push_back(p.y);
      flat.push_back(p.z);
    }
  }
  return flat;
}

Sketch3D from_flat_parameters(std::span<const double> flat,
                              const Sketch3D* like) {
  if (flat.empty() || flat.size() % kFloatsPerCurve != 0) {
    throw ShapeError("flat parameter vector length " +
                     std::to_string(flat.size()) +
                     " is not a positive multiple of 12");
  }
  if (like != nullptr && !like->curves.empty() &&
      flat.size() != like->curves.size() * kFloatsPerCurve) {
    throw ShapeError("flat parameter vector holds " +
                     std::to_string(flat.size() / kFloatsPerCurve) +
                     " curves, expected " + std::to_string(like->curves.size()));
  }
  Sketch3D sketch;
  if (like != nullptr) {
    sketch.prompt = like->prompt;
    sketch.seed = like->seed;
  }
  sketch.curves.resize(flat.size() / kFloatsPerCurve);
  for (std::size_t i = 0; i < sketch.curves.size(); ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const std::size_t k = flat_index(i, j);
      sketch.curves[i].control[j] = {flat[k], flat[k + 1], flat[k + 2]};
    }
  }
  return sketch;
}

void validate(const Sketch3D& sketch) {
  if (sketch.curves.empty()) throw DomainError("sketch has no curves");
  for (std::size_t i = 0; i < sketch.curves.size(); ++i) {
    for (const auto& p : sketch.curves[i].control) {
      if (!is_finite(p)) {
        throw DomainError("curve " + std::to_string(i) +
                          " has a non-finite control point");
      }
    }
  }
}

}  // namespace sketchanim
