#include "sketchanim/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "parallel.hpp"
#include "sketchanim/error.hpp"

namespace sketchanim {

void RasterOptions::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("sigma must be a positive number of pixels");
  }
  if (samples < kMinSamplesPerCurve) {
    throw ConfigError("samples per curve must be at least " +
                      std::to_string(kMinSamplesPerCurve));
  }
}

double stroke_kernel(double d, double sigma) {
  const double r = 1.0 - (d * d) / (sigma * sigma);
  return r > 0.0 ? r * r : 0.0;
}

double stroke_kernel_derivative(double d, double sigma) {
  const double r = 1.0 - (d * d) / (sigma * sigma);
  if (r <= 0.0) return 0.0;
  return -4.0 * d * r / (sigma * sigma);
}

namespace {

struct SampledCurve {
  std::vector<Vec2> points;
  double min_u = 0, max_u = 0, min_v = 0, max_v = 0;  // inflated by sigma
};

std::vector<std::array<double, 4>> bernstein_table(int samples) {
  std::vector<std::array<double, 4>> table(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    table[s] = bernstein3(double(s) / (samples - 1));
  }
  return table;
}

std::vector<SampledCurve> sample_curves(
    std::span<const Bezier2D> curves, const RasterOptions& options,
    const std::vector<std::array<double, 4>>& basis) {
  std::vector<SampledCurve> out(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    for (const auto& c : curves[i].control) {
      if (!std::isfinite(c.u) || !std::isfinite(c.v)) {
        throw RenderError("curve " + std::to_string(i) +
                          " has a non-finite control point");
      }
    }
    auto& sc = out[i];
    sc.points.resize(basis.size());
    sc.min_u = sc.min_v = std::numeric_limits<double>::infinity();
    sc.max_u = sc.max_v = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < basis.size(); ++s) {
      Vec2 q;
      for (int j = 0; j < 4; ++j) q = q + basis[s][j] * curves[i].control[j];
      sc.points[s] = q;
      sc.min_u = std::min(sc.min_u, q.u);
      sc.max_u = std::max(sc.max_u, q.u);
      sc.min_v = std::min(sc.min_v, q.v);
      sc.max_v = std::max(sc.max_v, q.v);
    }
    sc.min_u -= options.sigma;
    sc.max_u += options.sigma;
    sc.min_v -= options.sigma;
    sc.max_v += options.sigma;
  }
  return out;
}

// Pixel index range [lo, hi) whose centers (k + 0.5) fall inside [a, b].
std::pair<int, int> pixel_span(double a, double b, int extent) {
  const int lo = std::max(0, static_cast<int>(std::ceil(a - 0.5)));
  const int hi = std::min(extent, static_cast<int>(std::floor(b - 0.5)) + 1);
  return {lo, hi};
}

}  // namespace

RasterResult rasterize(std::span<const Bezier2D> curves, int width,
                       int height, const RasterOptions& options) {
  options.validate();
  if (width <= 0 || height <= 0) {
    throw ShapeError("raster size must be positive");
  }
  const auto basis = bernstein_table(options.samples);
  const auto sampled = sample_curves(curves, options, basis);
  const double sigma2 = options.sigma * options.sigma;
  const double quad_weight = 1.0 / options.samples;

  RasterResult result;
  auto& tape = result.tape;
  tape.width = width;
  tape.height = height;
  tape.options = options;
  tape.curve_count = curves.size();
  tape.field.assign(std::size_t(width) * height, 0.0);

  std::vector<std::vector<TapeEntry>> chunk_entries(detail::kRowChunks);
  detail::for_each_chunk(
      std::size_t(height), detail::kRowChunks,
      [&](std::size_t chunk, std::size_t row_begin, std::size_t row_end) {
        auto& entries = chunk_entries[chunk];
        for (std::size_t y = row_begin; y < row_end; ++y) {
          const double cy = double(y) + 0.5;
          for (std::size_t i = 0; i < sampled.size(); ++i) {
            const auto& sc = sampled[i];
            if (cy < sc.min_v || cy > sc.max_v) continue;
            const auto [x0, x1] = pixel_span(sc.min_u, sc.max_u, width);
            for (int x = x0; x < x1; ++x) {
              const double cx = double(x) + 0.5;
              const std::size_t pixel = y * std::size_t(width) + x;
              double acc = 0.0;
              for (std::size_t s = 0; s < sc.points.size(); ++s) {
                const double du = cx - sc.points[s].u;
                const double dv = cy - sc.points[s].v;
                const double d2 = du * du + dv * dv;
                if (d2 >= sigma2) continue;
                const double r = 1.0 - d2 / sigma2;
                acc += r * r;
                entries.push_back({static_cast<std::uint32_t>(pixel),
                                   static_cast<std::uint32_t>(i),
                                   static_cast<std::uint32_t>(s),
                                   double(s) / (options.samples - 1),
                                   sc.points[s], std::sqrt(d2)});
              }
              tape.field[pixel] += quad_weight * acc;
            }
          }
        }
      });
  for (auto& entries : chunk_entries) {
    tape.entries.insert(tape.entries.end(), entries.begin(), entries.end());
  }

  result.image = RasterImage(width, height);
  for (std::size_t p = 0; p < tape.field.size(); ++p) {
    result.image.intensity[p] = 1.0 - std::min(tape.field[p], 1.0);
  }
  return result;
}

std::vector<std::array<Vec2, 4>> backward_2d(
    const RasterTape& tape, std::span<const double> grad_image) {
  if (grad_image.size() != tape.field.size()) {
    throw ShapeError("gradient image has " + std::to_string(grad_image.size()) +
                     " pixels, tape expects " +
                     std::to_string(tape.field.size()));
  }
  const double sigma2 = tape.options.sigma * tape.options.sigma;
  const double quad_weight = 1.0 / tape.options.samples;
  const auto basis = bernstein_table(tape.options.samples);

  const std::size_t n = tape.entries.size();
  std::vector<std::vector<std::array<Vec2, 4>>> partial(
      detail::kRowChunks,
      std::vector<std::array<Vec2, 4>>(tape.curve_count));
  detail::for_each_chunk(
      n, detail::kRowChunks,
      [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        auto& acc = partial[chunk];
        for (std::size_t e = begin; e < end; ++e) {
          const TapeEntry& entry = tape.entries[e];
          const double g = grad_image[entry.pixel];
          // intensity = 1 - min(F, 1): flat once the field saturates.
          if (g == 0.0 || !(tape.field[entry.pixel] < 1.0)) continue;
          const double px = double(entry.pixel % tape.width) + 0.5;
          const double py = double(entry.pixel / tape.width) + 0.5;
          const double d2 = entry.distance * entry.distance;
          // dw/dd * dd/dq, written without the 1/d so that d -> 0 is smooth.
          const double k = -4.0 * (1.0 - d2 / sigma2) / sigma2;
          const double scale = -g * quad_weight * k;
          const Vec2 dq{scale * (entry.point.u - px),
                        scale * (entry.point.v - py)};
          const auto& b = basis[entry.sample];
          for (int j = 0; j < 4; ++j) {
            acc[entry.curve][j] = acc[entry.curve][j] + b[j] * dq;
          }
        }
      });

  std::vector<std::array<Vec2, 4>> grads(tape.curve_count);
  for (const auto& acc : partial) {
    for (std::size_t i = 0; i < grads.size(); ++i) {
      for (int j = 0; j < 4; ++j) grads[i][j] = grads[i][j] + acc[i][j];
    }
  }
  return grads;
}

std::vector<double> chain_to_world(
    const std::vector<std::array<Vec2, 4>>& grads_2d,
    const std::vector<std::array<Jacobian23, 4>>& jacobians) {
  if (grads_2d.size() != jacobians.size()) {
    throw ShapeError("gradient and Jacobian curve counts differ");
  }
  std::vector<double> flat(grads_2d.size() * kFloatsPerCurve, 0.0);
  for (std::size_t i = 0; i < grads_2d.size(); ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const auto& J = jacobians[i][j];
      const Vec2 g = grads_2d[i][j];
      for (std::size_t c = 0; c < 3; ++c) {
        flat[flat_index(i, j, c)] = g.u * J[c] + g.v * J[3 + c];
      }
    }
  }
  return flat;
}

std::vector<double> backward(const RasterTape& tape,
                             std::span<const double> grad_image) {
  if (tape.jacobians.size() != tape.curve_count) {
    throw ShapeError("tape carries no projection Jacobians");
  }
  return chain_to_world(backward_2d(tape, grad_image), tape.jacobians);
}

RasterResult render_view(const Sketch3D& sketch, const Viewpoint& vp,
                         const RasterOptions& options) {
  const Camera camera(vp);
  std::vector<Bezier2D> curves2d;
  std::vector<std::array<Jacobian23, 4>> jacobians;
  curves2d.reserve(sketch.curves.size());
  jacobians.reserve(sketch.curves.size());
  for (const auto& curve : sketch.curves) {
    for (const auto& p : curve.control) {
      if (!is_finite(p)) throw RenderError("non-finite control point");
    }
    auto pc = project_curve_with_jacobian(camera, curve);
    curves2d.push_back(pc.curve);
    jacobians.push_back(pc.jacobians);
  }
  auto result = rasterize(curves2d, vp.image_size, vp.image_size, options);
  result.tape.jacobians = std::move(jacobians);
  return result;
}

RasterResult render_ortho(const Sketch3D& sketch, const OrthoFrame& frame,
                          const RasterOptions& options) {
  std::vector<Bezier2D> curves2d;
  curves2d.reserve(sketch.curves.size());
  for (const auto& curve : sketch.curves) {
    Bezier2D c;
    for (int j = 0; j < 4; ++j) c.control[j] = frame.to_pixel(curve.control[j]);
    curves2d.push_back(c);
  }
  auto result =
      rasterize(curves2d, frame.image_size, frame.image_size, options);
  std::array<Jacobian23, 4> J;
  J.fill(frame.jacobian());
  result.tape.jacobians.assign(sketch.curves.size(), J);
  return result;
}

namespace {

std::array<std::uint8_t, 3> hue_to_rgb(double hue_deg) {
  const double h = hue_deg / 60.0;
  const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h) % 6) {
    case 0: r = 1; g = x; break;
    case 1: r = x; g = 1; break;
    case 2: g = 1; b = x; break;
    case 3: g = x; b = 1; break;
    case 4: r = x; b = 1; break;
    default: r = 1; b = x; break;
  }
  auto q = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255));
  };
  return {q(r), q(g), q(b)};
}

}  // namespace

RgbImage render_depth_color(const Sketch3D& sketch, const Viewpoint& vp,
                            const RasterOptions& options) {
  options.validate();
  const Camera camera(vp);
  const int size = vp.image_size;
  const auto basis = bernstein_table(options.samples);

  struct Sample {
    Vec2 pixel;
    double depth;
  };
  std::vector<Sample> samples;
  double near = std::numeric_limits<double>::infinity();
  double far = -near;
  for (const auto& curve : sketch.curves) {
    const Bezier2D c2 = project_curve_with_jacobian(camera, curve).curve;
    for (const auto& b : basis) {
      Vec2 q;
      Point3 p;
      for (int j = 0; j < 4; ++j) {
        q = q + b[j] * c2.control[j];
        p += b[j] * curve.control[j];
      }
      const double depth = camera.project(p).depth;
      near = std::min(near, depth);
      far = std::max(far, depth);
      samples.push_back({q, depth});
    }
  }

  const auto coverage = render_view(sketch, vp, options).image;
  RgbImage out;
  out.width = out.height = size;
  out.rgb.assign(std::size_t(size) * size * 3, 255);
  std::vector<double> best(std::size_t(size) * size,
                           std::numeric_limits<double>::infinity());
  std::vector<double> best_depth(best.size(), 0.0);
  const double sigma = options.sigma;
  for (const auto& s : samples) {
    const auto [x0, x1] = pixel_span(s.pixel.u - sigma, s.pixel.u + sigma, size);
    const auto [y0, y1] = pixel_span(s.pixel.v - sigma, s.pixel.v + sigma, size);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const double d = std::hypot(x + 0.5 - s.pixel.u, y + 0.5 - s.pixel.v);
        const std::size_t p = std::size_t(y) * size + x;
        if (d < sigma && d < best[p]) {
          best[p] = d;
          best_depth[p] = s.depth;
        }
      }
    }
  }
  const double span = far > near ? far - near : 1.0;
  for (std::size_t p = 0; p < best.size(); ++p) {
    if (!std::isfinite(best[p])) continue;
    const double ink = 1.0 - coverage.intensity[p];
    const auto rgb = hue_to_rgb(240.0 * (best_depth[p] - near) / span);
    for (int c = 0; c < 3; ++c) {
      const double v = (1.0 - ink) * 255.0 + ink * rgb[c];
      out.rgb[3 * p + c] =
          static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  }
  return out;
}

}  // namespace sketchanim
