#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sketchanim/curves.hpp"

namespace sketchanim {

struct Vec2 {
  double u = 0.0;
  double v = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.u + b.u, a.v + b.v}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.u - b.u, a.v - b.v}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.u, s * a.v}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

enum class ViewKind { front, back, left, right, top, custom };

std::string_view to_string(ViewKind kind);
/// Parses "front", "back", "left", "right", "top"; returns nullopt otherwise.
std::optional<ViewKind> parse_view_kind(std::string_view name);

inline constexpr double kDefaultCameraDistance = 4.0;
inline constexpr double kDefaultFovDeg = 40.0;
inline constexpr int kDefaultImageSize = 512;
inline constexpr double kTopViewElevationDeg = 89.0;

struct Viewpoint {
  ViewKind kind = ViewKind::front;
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  double distance = kDefaultCameraDistance;
  double fov_deg = kDefaultFovDeg;
  int image_size = kDefaultImageSize;

  /// Canonical camera for front/back/left/right/top.
  static Viewpoint canonical(ViewKind kind,
                             double distance = kDefaultCameraDistance,
                             double fov_deg = kDefaultFovDeg,
                             int image_size = kDefaultImageSize);
  static Viewpoint custom(double azimuth_deg, double elevation_deg,
                          double distance = kDefaultCameraDistance,
                          double fov_deg = kDefaultFovDeg,
                          int image_size = kDefaultImageSize);

  /// Throws ConfigError when distance <= 0, fov outside (0, 120) or the image
  /// size is not positive.
  void validate() const;
};

/// The four cardinal views used for structure optimization.
std::vector<Viewpoint> cardinal_views(int image_size = kDefaultImageSize);

/// Row-major 2x3 Jacobian d(u, v)/d(x, y, z).
using Jacobian23 = std::array<double, 6>;

struct ProjectedPoint {
  Vec2 pixel;
  Jacobian23 jacobian{};
  double depth = 0.0;
};

/// Pinhole camera looking at the origin. Exact for canonical views: the
/// camera basis uses exact sines/cosines at multiples of 90 degrees.
class Camera {
 public:
  explicit Camera(const Viewpoint& vp);

  /// Throws ProjectionError if p is at or behind the camera plane.
  ProjectedPoint project(const Point3& p) const;

  const Viewpoint& viewpoint() const { return vp_; }
  const Point3& position() const { return eye_; }

 private:
  Viewpoint vp_;
  Point3 eye_;
  Point3 right_;
  Point3 up_;
  Point3 forward_;
  double focal_px_ = 0.0;
  double min_depth_ = 0.0;
};

Vec2 project_point(const Viewpoint& vp, const Point3& p);
ProjectedPoint project_point_with_jacobian(const Viewpoint& vp,
                                           const Point3& p);

struct Bezier2D {
  std::array<Vec2, 4> control{};

  friend bool operator==(const Bezier2D&, const Bezier2D&) = default;
};

Vec2 evaluate(const Bezier2D& curve, double t);

/// Projects the four control points; the resulting polynomial Bezier stands
/// in for the exact rational projection.
Bezier2D project_curve(const Viewpoint& vp, const BezierCurve& curve);

struct ProjectedCurve {
  Bezier2D curve;
  std::array<Jacobian23, 4> jacobians{};
  std::array<double, 4> depths{};
};

ProjectedCurve project_curve_with_jacobian(const Camera& camera,
                                           const BezierCurve& curve);

/// Max over a dense t grid of |project_curve(c)(t) - project(c(t))| in pixels.
double projection_deviation(const Viewpoint& vp, const BezierCurve& curve,
                            int samples = 1001);

enum class Plane { frontal, sagittal };

std::string_view to_string(Plane plane);

/// Orthographic coordinate drop: frontal -> (x, y), sagittal -> (y, z).
std::array<double, 2> ortho_project(Plane plane, const Point3& p);

/// Pixel placement used for orthographic frame renders. World [-1, 1] maps
/// onto the image. The frontal plane puts x across and y up; the sagittal
/// plane is drawn as a side view with z across and y up.
struct OrthoFrame {
  Plane plane = Plane::frontal;
  int image_size = 256;

  Vec2 to_pixel(const Point3& p) const;
  /// d(u, v)/d(x, y, z); constant for an orthographic frame.
  Jacobian23 jacobian() const;
};

}  // namespace sketchanim
