#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sketchanim {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Point3& operator+=(const Point3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Point3& operator-=(const Point3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  Point3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend Point3 operator+(Point3 a, const Point3& b) { return a += b; }
  friend Point3 operator-(Point3 a, const Point3& b) { return a -= b; }
  friend Point3 operator*(Point3 a, double s) { return a *= s; }
  friend Point3 operator*(double s, Point3 a) { return a *= s; }
  friend Point3 operator-(const Point3& a) { return {-a.x, -a.y, -a.z}; }
  friend bool operator==(const Point3&, const Point3&) = default;
};

inline double dot(const Point3& a, const Point3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Point3& a) { return std::sqrt(dot(a, a)); }

inline bool is_finite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

/// Cubic Bernstein basis B^3_j(t), j = 0..3.
inline std::array<double, 4> bernstein3(double t) {
  const double s = 1.0 - t;
  return {s * s * s, 3.0 * t * s * s, 3.0 * t * t * s, t * t * t};
}

struct BezierCurve {
  std::array<Point3, 4> control{};

  friend bool operator==(const BezierCurve&, const BezierCurve&) = default;
};

/// A static 3D vector sketch: N independent cubic Bezier strokes.
struct Sketch3D {
  std::vector<BezierCurve> curves;
  std::string prompt;
  std::uint64_t seed = 0;

  std::size_t size() const { return curves.size(); }

  friend bool operator==(const Sketch3D&, const Sketch3D&) = default;
};

inline constexpr int kDefaultCurveCount = 16;
inline constexpr double kDefaultInitRadius = 0.2;
inline constexpr double kDefaultInitMinStep = 0.001;
inline constexpr double kDefaultInitMaxStep = 0.01;

/// Evaluates the curve at t in [0, 1]. Throws DomainError outside the range.
Point3 evaluate(const BezierCurve& curve, double t);

struct InitOptions {
  int n_curves = kDefaultCurveCount;
  std::uint64_t seed = 0;
  double radius = kDefaultInitRadius;
  double min_step = kDefaultInitMinStep;
  double max_step = kDefaultInitMaxStep;
};

/// Random sketch: the first control point of each curve is uniform in the ball
/// of `radius`; every following point is the previous one plus an isotropic
/// step whose length is uniform in [min_step, max_step].
Sketch3D init_sketch(const InitOptions& options);

inline constexpr std::size_t kFloatsPerCurve = 12;

/// Offset of (curve, point, coord) in the flat layout: curve-major, then
/// control point, then x/y/z.
constexpr std::size_t flat_index(std::size_t curve, std::size_t point,
                                 std::size_t coord = 0) {
  return kFloatsPerCurve * curve + 3 * point + coord;
}

std::vector<double> as_flat_parameters(const Sketch3D& sketch);

/// Rebuilds curves from a flat vector; prompt and seed are copied from
/// `like` when given. Throws ShapeError when the length is not a multiple of
/// 12 or is zero, or when `like` has a different non-zero curve count.
Sketch3D from_flat_parameters(std::span<const double> flat,
                              const Sketch3D* like = nullptr);

/// Throws DomainError if the sketch is empty or holds a non-finite coordinate.
void validate(const Sketch3D& sketch);

}  // namespace sketchanim
