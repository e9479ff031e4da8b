#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sketchanim/curves.hpp"
#include "sketchanim/projection.hpp"

namespace sketchanim {

inline constexpr double kDefaultSigmaPx = 2.0;
inline constexpr int kDefaultSamplesPerCurve = 32;
inline constexpr int kMinSamplesPerCurve = 8;

struct RasterOptions {
  double sigma = kDefaultSigmaPx;  // kernel support radius, pixels
  int samples = kDefaultSamplesPerCurve;

  void validate() const;
};

/// Grayscale stroke image: 1 is white background, 0 is a fully inked pixel.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<double> intensity;  // row-major, size width * height

  RasterImage() = default;
  RasterImage(int w, int h, double fill = 1.0)
      : width(w), height(h), intensity(std::size_t(w) * h, fill) {}

  double& at(int x, int y) { return intensity[std::size_t(y) * width + x]; }
  double at(int x, int y) const {
    return intensity[std::size_t(y) * width + x];
  }
  std::size_t pixel_count() const { return intensity.size(); }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

/// 8-bit RGB image, used only for the depth-colored visualization.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
};

/// Smoothing kernel w(d) = max(0, 1 - d^2/sigma^2)^2.
double stroke_kernel(double d, double sigma);
/// dw/dd.
double stroke_kernel_derivative(double d, double sigma);

/// One quadrature sample that landed within sigma of a pixel center.
struct TapeEntry {
  std::uint32_t pixel = 0;
  std::uint32_t curve = 0;
  std::uint32_t sample = 0;
  double t = 0.0;
  Vec2 point;
  double distance = 0.0;
};

/// Everything the backward pass needs from a forward render.
struct RasterTape {
  int width = 0;
  int height = 0;
  RasterOptions options;
  std::size_t curve_count = 0;
  std::vector<double> field;  // unclamped stroke field F per pixel
  std::vector<TapeEntry> entries;
  // d(pixel)/d(world) for each control point; filled by the 3D render paths.
  std::vector<std::array<Jacobian23, 4>> jacobians;
};

struct RasterResult {
  RasterImage image;
  RasterTape tape;
};

/// Renders 2D Bezier strokes by uniform quadrature of the distance kernel
/// along each curve. Intensity is 1 - min(F, 1). Throws RenderError on
/// non-finite control points.
RasterResult rasterize(std::span<const Bezier2D> curves, int width,
                       int height, const RasterOptions& options = {});

/// Per-curve gradient of a scalar loss with respect to the 2D control points,
/// given dL/d(intensity). Throws ShapeError when grad_image does not match
/// the tape.
std::vector<std::array<Vec2, 4>> backward_2d(const RasterTape& tape,
                                             std::span<const double> grad_image);

/// Pushes 2D control-point gradients through the stored projection Jacobians.
/// Returns a flat gradient in the layout of as_flat_parameters.
std::vector<double> chain_to_world(
    const std::vector<std::array<Vec2, 4>>& grads_2d,
    const std::vector<std::array<Jacobian23, 4>>& jacobians);

/// Full backward pass to 3D control points. Needs a tape that carries
/// projection Jacobians (render_view / render_ortho).
std::vector<double> backward(const RasterTape& tape,
                             std::span<const double> grad_image);

/// Perspective render of a sketch: project_curve followed by rasterize.
RasterResult render_view(const Sketch3D& sketch, const Viewpoint& vp,
                         const RasterOptions& options = {});

/// Orthographic render used by the animation stage.
RasterResult render_ortho(const Sketch3D& sketch, const OrthoFrame& frame,
                          const RasterOptions& options = {});

/// Non-differentiable visualization: each inked pixel takes a hue from the
/// camera depth of its nearest sample, blended over white by coverage.
RgbImage render_depth_color(const Sketch3D& sketch, const Viewpoint& vp,
                            const RasterOptions& options = {});

}  // namespace sketchanim
