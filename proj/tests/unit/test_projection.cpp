#include "doctest.h"
#include "oracles.hpp"
#include "sketchanim/error.hpp"
#include "sketchanim/projection.hpp"

#include <numbers>
#include <random>

using namespace sketchanim;

namespace {

Point3 random_in_ball(std::mt19937_64& rng, double r = 1.0) {
  std::uniform_real_distribution<double> u(-r, r);
  while (true) {
    Point3 p{u(rng), u(rng), u(rng)};
    if (dot(p, p) <= r * r) return p;
  }
}

}  // namespace

TEST_CASE("canonical views use the fixed azimuth and elevation") {
  const auto check = [](ViewKind k, double az, double el) {
    const auto vp = Viewpoint::canonical(k);
    CHECK(vp.azimuth_deg == az);
    CHECK(vp.elevation_deg == el);
    CHECK(vp.distance == 4.0);
    CHECK(vp.fov_deg == 40.0);
    CHECK(vp.image_size == 512);
  };
  check(ViewKind::front, 0, 0);
  check(ViewKind::right, 90, 0);
  check(ViewKind::back, 180, 0);
  check(ViewKind::left, 270, 0);
  check(ViewKind::top, 0, 89);
  CHECK(cardinal_views().size() == 4);
}

TEST_CASE("view names parse and print") {
  for (auto k : {ViewKind::front, ViewKind::back, ViewKind::left, ViewKind::right,
                 ViewKind::top}) {
    CHECK(parse_view_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_view_kind("diagonal").has_value());
}

TEST_CASE("viewpoint validation") {
  CHECK_THROWS_AS(Viewpoint::custom(0, 0, 0.0).validate(), ConfigError);
  CHECK_THROWS_AS(Viewpoint::custom(0, 0, 4, 0.0).validate(), ConfigError);
  CHECK_THROWS_AS(Viewpoint::custom(0, 0, 4, 120.0).validate(), ConfigError);
  CHECK_THROWS_AS(Viewpoint::custom(0, 90.0).validate(), ConfigError);
  CHECK_NOTHROW(Viewpoint::custom(33, -45, 6, 60, 128).validate());
}

TEST_CASE("origin projects to the image center") {
  for (double fov : {10.0, 40.0, 90.0}) {
    const auto c = project_point(Viewpoint::custom(0, 0, 4, fov, 512), {0, 0, 0});
    CHECK(c.u == doctest::Approx(256.0).epsilon(1e-12));
    CHECK(c.v == doctest::Approx(256.0).epsilon(1e-12));
  }
}

TEST_CASE("hand-evaluated pinhole example") {
  const auto p = project_point(Viewpoint::canonical(ViewKind::front), {0.5, 0, 0});
  const double expect = 256.0 + 256.0 * (0.5 / 4.0) / std::tan(20.0 * std::numbers::pi / 180.0);
  CHECK(p.u == doctest::Approx(expect).epsilon(1e-12));
  CHECK(p.v == doctest::Approx(256.0).epsilon(1e-12));
}

TEST_CASE("projection agrees with an independent look-at camera") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> az(0, 360), el(-80, 80);
  for (int n = 0; n < 200; ++n) {
    const double a = az(rng), e = el(rng);
    const Point3 p = random_in_ball(rng);
    const auto got = project_point(Viewpoint::custom(a, e, 4, 40, 512), p);
    const auto ref = oracle::pinhole({p.x, p.y, p.z}, a, e, 4, 40, 512);
    CHECK(got.u == doctest::Approx(ref[0]).epsilon(1e-10));
    CHECK(got.v == doctest::Approx(ref[1]).epsilon(1e-10));
  }
}

TEST_CASE("back view of the z-mirrored point is the horizontal flip of the front view") {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 50; ++n) {
    const Point3 p = random_in_ball(rng);
    const auto f = project_point(Viewpoint::canonical(ViewKind::front), p);
    const auto b = project_point(Viewpoint::canonical(ViewKind::back), {p.x, p.y, -p.z});
    CHECK(b.u == doctest::Approx(512.0 - f.u).epsilon(1e-12));
    CHECK(b.v == doctest::Approx(f.v).epsilon(1e-12));
  }
}

TEST_CASE("right view equals the front view of the sketch rotated -90 degrees about y") {
  std::mt19937_64 rng(6);
  for (int n = 0; n < 100; ++n) {
    const Point3 p = random_in_ball(rng);
    const auto r = project_point(Viewpoint::canonical(ViewKind::right), p);
    const auto f = project_point(Viewpoint::canonical(ViewKind::front), {-p.z, p.y, p.x});
    CHECK(r.u == f.u);
    CHECK(r.v == f.v);
  }
}

TEST_CASE("top view stays finite") {
  const auto p = project_point(Viewpoint::canonical(ViewKind::top), {0.3, 0.2, -0.4});
  CHECK(std::isfinite(p.u));
  CHECK(std::isfinite(p.v));
}

TEST_CASE("points at or behind the camera throw") {
  const auto vp = Viewpoint::canonical(ViewKind::front);
  CHECK_THROWS_AS(project_point(vp, {0, 0, 4}), ProjectionError);
  CHECK_THROWS_AS(project_point(vp, {0, 0, 5}), ProjectionError);
}

TEST_CASE("projection Jacobian matches finite differences") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> az(0, 360), el(-80, 80);
  for (int n = 0; n < 50; ++n) {
    const auto vp = Viewpoint::custom(az(rng), el(rng), 4, 40, 512);
    const Point3 p = random_in_ball(rng);
    const auto pp = project_point_with_jacobian(vp, p);
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
      Point3 a = p, b = p;
      (c == 0 ? a.x : c == 1 ? a.y : a.z) += h;
      (c == 0 ? b.x : c == 1 ? b.y : b.z) -= h;
      const auto pa = project_point(vp, a), pb = project_point(vp, b);
      CHECK(pp.jacobian[c] == doctest::Approx((pa.u - pb.u) / (2 * h)).epsilon(1e-6));
      CHECK(pp.jacobian[3 + c] == doctest::Approx((pa.v - pb.v) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("project_curve projects each control point") {
  const auto vp = Viewpoint::canonical(ViewKind::left);
  const BezierCurve c{{Point3{0.1, 0.2, 0.3}, Point3{-0.3, 0.1, 0}, Point3{0, 0, 0.5},
                       Point3{0.4, -0.4, 0.1}}};
  const auto b = project_curve(vp, c);
  for (int j = 0; j < 4; ++j) CHECK(b.control[j] == project_point(vp, c.control[j]));
}

TEST_CASE("curve on the optical axis projects to a dot at the center") {
  const BezierCurve c{{Point3{0, 0, -0.5}, Point3{0, 0, 0}, Point3{0, 0, 0.3},
                       Point3{0, 0, 0.9}}};
  const auto b = project_curve(Viewpoint::canonical(ViewKind::front), c);
  for (const auto& q : b.control) {
    CHECK(q.u == doctest::Approx(256.0));
    CHECK(q.v == doctest::Approx(256.0));
  }
}

TEST_CASE("approximation error shrinks monotonically with camera distance") {
  const BezierCurve c{{Point3{-0.8, 0.1, 0.5}, Point3{0.2, 0.9, -0.4},
                       Point3{0.6, -0.5, 0.7}, Point3{0.1, 0.3, -0.9}}};
  double prev = INFINITY;
  for (double d : {4.0, 5.0, 6.0, 8.0, 11.0, 16.0, 23.0, 32.0}) {
    const double dev = projection_deviation(Viewpoint::custom(0, 0, d), c);
    CHECK(dev < prev);
    prev = dev;
  }
}

TEST_CASE("deviation oracle agrees with dense sampling of both curves") {
  std::mt19937_64 rng(12);
  BezierCurve c;
  for (auto& p : c.control) p = random_in_ball(rng);
  const auto vp = Viewpoint::custom(30, 20);
  oracle::Curve2 approx;
  for (int j = 0; j < 4; ++j) {
    approx[j] = oracle::pinhole({c.control[j].x, c.control[j].y, c.control[j].z}, 30, 20,
                                4, 40, 512);
  }
  double worst = 0.0;
  for (int s = 0; s <= 1000; ++s) {
    const double t = s / 1000.0;
    const Point3 p = evaluate(c, t);
    const auto truth = oracle::pinhole({p.x, p.y, p.z}, 30, 20, 4, 40, 512);
    const auto a = oracle::bezier(approx, t);
    worst = std::max(worst, std::hypot(a[0] - truth[0], a[1] - truth[1]));
  }
  CHECK(projection_deviation(vp, c) == doctest::Approx(worst).epsilon(1e-9));
}

TEST_CASE("orthographic coordinate drops") {
  CHECK(ortho_project(Plane::frontal, {1, 2, 3}) == std::array<double, 2>{1, 2});
  CHECK(ortho_project(Plane::sagittal, {1, 2, 3}) == std::array<double, 2>{2, 3});
  std::mt19937_64 rng(4);
  for (int n = 0; n < 20; ++n) {
    const Point3 p = random_in_ball(rng, 5.0);
    CHECK(ortho_project(Plane::frontal, p)[1] == ortho_project(Plane::sagittal, p)[0]);
  }
}

TEST_CASE("orthographic frames map world [-1, 1] onto the image") {
  const OrthoFrame front{Plane::frontal, 64};
  CHECK(front.to_pixel({-1, 1, 0.7}).u == doctest::Approx(0.0));
  CHECK(front.to_pixel({-1, 1, 0.7}).v == doctest::Approx(0.0));
  CHECK(front.to_pixel({1, -1, -0.2}).u == doctest::Approx(64.0));
  CHECK(front.to_pixel({1, -1, -0.2}).v == doctest::Approx(64.0));
  const OrthoFrame side{Plane::sagittal, 64};
  CHECK(side.to_pixel({0.9, 0, 1}).u == doctest::Approx(64.0));
  CHECK(side.to_pixel({0.9, 1, 0}).v == doctest::Approx(0.0));
}

TEST_CASE("orthographic projection of a Bezier is exact") {
  std::mt19937_64 rng(9);
  BezierCurve c;
  for (auto& p : c.control) p = random_in_ball(rng);
  for (auto plane : {Plane::frontal, Plane::sagittal}) {
    const OrthoFrame f{plane, 256};
    Bezier2D b;
    for (int j = 0; j < 4; ++j) b.control[j] = f.to_pixel(c.control[j]);
    for (int s = 0; s <= 100; ++s) {
      const double t = s / 100.0;
      const Vec2 a = evaluate(b, t);
      const Vec2 truth = f.to_pixel(evaluate(c, t));
      CHECK(a.u == doctest::Approx(truth.u).epsilon(1e-12));
      CHECK(a.v == doctest::Approx(truth.v).epsilon(1e-12));
    }
  }
}
