#include "sketchanim/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sketchanim/error.hpp"

namespace sketchanim {

namespace {

struct SinCos {
  double s;
  double c;
};

// Exact at multiples of 90 degrees so canonical views are exact rotations of
// one another.
SinCos sincos_deg(double deg) {
  double a = std::fmod(deg, 360.0);
  if (a < 0.0) a += 360.0;
  if (a == 0.0) return {0.0, 1.0};
  if (a == 90.0) return {1.0, 0.0};
  if (a == 180.0) return {0.0, -1.0};
  if (a == 270.0) return {-1.0, 0.0};
  const double r = a * std::numbers::pi / 180.0;
  return {std::sin(r), std::cos(r)};
}

Point3 normalized(const Point3& p) {
  const double n = norm(p);
  return p * (1.0 / n);
}

}  // namespace

std::string_view to_string(ViewKind kind) {
  switch (kind) {
    case ViewKind::front: return "front";
    case ViewKind::back: return "back";
    case ViewKind::left: return "left";
    case ViewKind::right: return "right";
    case ViewKind::top: return "top";
    case ViewKind::custom: return "custom";
  }
  return "custom";
}

std::optional<ViewKind> parse_view_kind(std::string_view name) {
  for (auto k : {ViewKind::front, ViewKind::back, ViewKind::left,
                 ViewKind::right, ViewKind::top}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

Viewpoint Viewpoint::canonical(ViewKind kind, double distance, double fov_deg,
                               int image_size) {
  Viewpoint vp;
  vp.kind = kind;
  vp.distance = distance;
  vp.fov_deg = fov_deg;
  vp.image_size = image_size;
  switch (kind) {
    case ViewKind::front: vp.azimuth_deg = 0.0; break;
    case ViewKind::right: vp.azimuth_deg = 90.0; break;
    case ViewKind::back: vp.azimuth_deg = 180.0; break;
    case ViewKind::left: vp.azimuth_deg = 270.0; break;
    case ViewKind::top:
      vp.azimuth_deg = 0.0;
      vp.elevation_deg = kTopViewElevationDeg;
      break;
    case ViewKind::custom:
      throw ConfigError("custom is not a canonical view");
  }
  return vp;
}

Viewpoint Viewpoint::custom(double azimuth_deg, double elevation_deg,
                            double distance, double fov_deg, int image_size) {
  Viewpoint vp;
  vp.kind = ViewKind::custom;
  vp.azimuth_deg = azimuth_deg;
  vp.elevation_deg = elevation_deg;
  vp.distance = distance;
  vp.fov_deg = fov_deg;
  vp.image_size = image_size;
  return vp;
}

void Viewpoint::validate() const {
  if (!(distance > 0.0)) throw ConfigError("camera distance must be > 0");
  if (!(fov_deg > 0.0 && fov_deg < 120.0)) {
    throw ConfigError("camera fov must lie in (0, 120) degrees");
  }
  if (image_size <= 0) throw ConfigError("image_size must be positive");
  if (std::abs(elevation_deg) >= 90.0) {
    throw ConfigError("camera elevation must lie in (-90, 90) degrees");
  }
}

std::vector<Viewpoint> cardinal_views(int image_size) {
  std::vector<Viewpoint> views;
  for (auto k :
       {ViewKind::front, ViewKind::back, ViewKind::left, ViewKind::right}) {
    views.push_back(Viewpoint::canonical(k, kDefaultCameraDistance,
                                         kDefaultFovDeg, image_size));
  }
  return views;
}

Camera::Camera(const Viewpoint& vp) : vp_(vp) {
  vp_.validate();
  const auto az = sincos_deg(vp.azimuth_deg);
  const auto el = sincos_deg(vp.elevation_deg);
  eye_ = Point3{az.s * el.c, el.s, az.c * el.c} * vp.distance;
  forward_ = normalized(-eye_);
  right_ = normalized(cross(forward_, Point3{0.0, 1.0, 0.0}));
  up_ = cross(right_, forward_);
  const double half_fov_rad = 0.5 * vp.fov_deg * std::numbers::pi / 180.0;
  focal_px_ = 0.5 * vp.image_size / std::tan(half_fov_rad);
  min_depth_ = 1e-9 * vp.distance;
}

ProjectedPoint Camera::project(const Point3& p) const {
  const Point3 rel = p - eye_;
  const double depth = dot(forward_, rel);
  if (!(depth > min_depth_)) {
    throw ProjectionError("point is at or behind the camera plane");
  }
  const double xc = dot(right_, rel);
  const double yc = dot(up_, rel);
  const double half = 0.5 * vp_.image_size;
  const double inv = 1.0 / depth;

  ProjectedPoint out;
  out.depth = depth;
  out.pixel = {half + focal_px_ * xc * inv, half - focal_px_ * yc * inv};
  // u = half + f * xc / depth, v = half - f * yc / depth
  const double f_inv = focal_px_ * inv;
  const double f_inv2 = focal_px_ * inv * inv;
  out.jacobian = {
      f_inv * right_.x - f_inv2 * xc * forward_.x,
      f_inv * right_.y - f_inv2 * xc * forward_.y,
      f_inv * right_.z - f_inv2 * xc * forward_.z,
      -(f_inv * up_.x - f_inv2 * yc * forward_.x),
      -(f_inv * up_.y - f_inv2 * yc * forward_.y),
      -(f_inv * up_.z - f_inv2 * yc * forward_.z),
  };
  return out;
}

Vec2 project_point(const Viewpoint& vp, const Point3& p) {
  return Camera(vp).project(p).pixel;
}

ProjectedPoint project_point_with_jacobian(const Viewpoint& vp,
                                           const Point3& p) {
  return Camera(vp).project(p);
}

Vec2 evaluate(const Bezier2D& curve, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("bezier parameter t must lie in [0, 1]");
  }
  const auto b = bernstein3(t);
  Vec2 out;
  for (int j = 0; j < 4; ++j) out = out + b[j] * curve.control[j];
  return out;
}

ProjectedCurve project_curve_with_jacobian(const Camera& camera,
                                           const BezierCurve& curve) {
  ProjectedCurve out;
  for (int j = 0; j < 4; ++j) {
    const auto pp = camera.project(curve.control[j]);
    out.curve.control[j] = pp.pixel;
    out.jacobians[j] = pp.jacobian;
    out.depths[j] = pp.depth;
  }
  return out;
}

Bezier2D project_curve(const Viewpoint& vp, const BezierCurve& curve) {
  return project_curve_with_jacobian(Camera(vp), curve).curve;
}

double projection_deviation(const Viewpoint& vp, const BezierCurve& curve,
                            int samples) {
  const Camera camera(vp);
  const Bezier2D approx = project_curve_with_jacobian(camera, curve).curve;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = samples == 1 ? 0.0 : double(s) / (samples - 1);
    const Vec2 a = evaluate(approx, t);
    const Vec2 b = camera.project(evaluate(curve, t)).pixel;
    worst = std::max(worst, std::hypot(a.u - b.u, a.v - b.v));
  }
  return worst;
}

std::string_view to_string(Plane plane) {
  return plane == Plane::frontal ? "frontal" : "sagittal";
}

std::array<double, 2> ortho_project(Plane plane, const Point3& p) {
  if (plane == Plane::frontal) return {p.x, p.y};
  return {p.y, p.z};
}

Vec2 OrthoFrame::to_pixel(const Point3& p) const {
  const double half = 0.5 * image_size;
  const auto ab = ortho_project(plane, p);
  if (plane == Plane::frontal) {
    return {half * (ab[0] + 1.0), half * (1.0 - ab[1])};
  }
  return {half * (ab[1] + 1.0), half * (1.0 - ab[0])};
}

Jacobian23 OrthoFrame::jacobian() const {
  const double half = 0.5 * image_size;
  if (plane == Plane::frontal) return {half, 0.0, 0.0, 0.0, -half, 0.0};
  return {0.0, 0.0, half, 0.0, -half, 0.0};
}

}  // namespace sketchanim
