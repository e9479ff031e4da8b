#include "doctest.h"
#include "sketchanim/error.hpp"
#include "sketchanim/formats.hpp"
#include "sketchanim/image_io.hpp"

#include <filesystem>
#include <random>
#include <regex>
#include <sstream>

using namespace sketchanim;

namespace {

const std::filesystem::path kDir = std::filesystem::temp_directory_path() / "sketchanim_formats";

Sketch3D awkward_sketch() {
  InitOptions init;
  init.n_curves = 5;
  init.seed = 99;
  auto s = init_sketch(init);
  s.prompt = "a \"quoted\" cat\nwith a newline";
  s.seed = 18446744073709551557ull;
  s.curves[0].control[0] = {0.1, 1.0 / 3.0, -2.0 / 7.0};
  s.curves[0].control[1] = {1e-300, -0.0, 123456789.123456789};
  return s;
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("sketch JSON round trip is exact") {
  const auto s = awkward_sketch();
  const auto back = sketch_from_json(sketch_to_json(s));
  CHECK(back == s);
  std::filesystem::create_directories(kDir);
  write_sketch(kDir / "s.json", s);
  CHECK(read_sketch(kDir / "s.json") == s);
  CHECK_FALSE(is_animation_file(kDir / "s.json"));
}

TEST_CASE("sketch JSON keeps at least nine significant digits") {
  Sketch3D s;
  s.curves.push_back(BezierCurve{{Point3{0.123456789, 0, 0}, Point3{}, Point3{}, Point3{}}});
  const auto text = sketch_to_json(s);
  CHECK(text.find("0.123456789") != std::string::npos);
}

TEST_CASE("sketch JSON rejects bad documents") {
  CHECK_THROWS_AS(sketch_from_json("{"), IoError);
  CHECK_THROWS_AS(sketch_from_json(R"({"version": 2, "prompt": "", "seed": 0, "curves": []})"), IoError);
  CHECK_THROWS_AS(sketch_from_json(R"({"version": 1, "prompt": "", "seed": 0, "curves": [[[0,0,0],[0,0,0],[0,0,0]]]})"),
                  IoError);
  CHECK_THROWS_AS(sketch_from_json(R"({"version": 1, "prompt": "", "seed": 0, "curves": [[[0,0],[0,0,0],[0,0,0],[0,0,0]]]})"),
                  IoError);
  CHECK_THROWS_AS(read_sketch(kDir / "missing.json"), IoError);
}

TEST_CASE("animation JSON round trip is exact") {
  Animation a;
  a.base = awkward_sketch();
  a.field = DisplacementField(4, int(a.base.size()));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 0.1);
  for (int k = 1; k < 4; ++k) {
    for (int i = 0; i < a.field.curves(); ++i) {
      for (int j = 0; j < 4; ++j) a.field.at(k, i, j) = {n(rng), n(rng), n(rng)};
    }
  }
  const auto back = animation_from_json(animation_to_json(a));
  CHECK(back.base == a.base);
  CHECK(back.field == a.field);
  write_animation(kDir / "a.json", a);
  CHECK(is_animation_file(kDir / "a.json"));
  CHECK(read_animation(kDir / "a.json").field == a.field);
}

TEST_CASE("animation JSON checks its frame and curve counts") {
  Animation a;
  a.base = awkward_sketch();
  a.field = DisplacementField(2, int(a.base.size()));
  auto text = animation_to_json(a);
  const auto bad_k = std::regex_replace(text, std::regex("\"K\": 2"), "\"K\": 3");
  REQUIRE(bad_k != text);
  CHECK_THROWS_AS(animation_from_json(bad_k), IoError);

  a.field = DisplacementField(2, int(a.base.size()) + 1);
  CHECK_THROWS(animation_from_json(animation_to_json(a)));
}

TEST_CASE("SVG has one path per curve and valid structure") {
  std::vector<Bezier2D> curves(7);
  for (std::size_t i = 0; i < curves.size(); ++i) {
    curves[i].control = {Vec2{double(i), 1}, Vec2{2, 3}, Vec2{4, 5}, Vec2{6, double(i)}};
  }
  const auto svg = curves_to_svg(curves, 512, 256, 2.0);
  CHECK(count(svg, "<path") == 7);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("width=\"512\"") != std::string::npos);
  CHECK(svg.find("height=\"256\"") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("M 0 1 C 2 3 4 5 6 0") != std::string::npos);
}

TEST_CASE("trace CSV has a header and one row per iteration") {
  std::vector<Stage1TraceRow> trace(3);
  for (int i = 0; i < 3; ++i) {
    trace[i].iter = i;
    trace[i].t = 0.5;
    trace[i].sds = {{"front", 0.25}, {"back", 0.125}};
    trace[i].geometric = 1.5;
  }
  trace[1].sds.emplace_back("top", 0.75);
  write_stage1_trace(kDir / "t1.csv", trace, {"front", "back", "top"});
  const auto text = read_text(kDir / "t1.csv");
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "iter,t,sds_front,sds_back,sds_top,geometric");
  CHECK(lines[1] == "0,0.5,0.25,0.125,,1.5");
  CHECK(lines[2] == "1,0.5,0.25,0.125,0.75,1.5");

  std::vector<Stage2TraceRow> t2(2);
  t2[1].iter = 1;
  write_stage2_trace(kDir / "t2.csv", t2);
  CHECK(count(read_text(kDir / "t2.csv"), "\n") == 3);
}

TEST_CASE("PNG quantization and round trip") {
  RasterImage img(5, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) img.intensity[i] = double(i) / 14.0;
  img.intensity[0] = -0.5;
  img.intensity[1] = 1.5;
  const auto q = quantize(img);
  CHECK(q[0] == 0);
  CHECK(q[1] == 255);
  CHECK(q[7] == 128);  // round(0.5 * 255)
  write_png(kDir / "img.png", img);
  const auto back = read_png_gray(kDir / "img.png");
  CHECK(back.width == 5);
  CHECK(back.height == 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) CHECK(back.intensity[i] == q[i] / 255.0);

  // Re-encoding an already quantized image reproduces the file bitwise.
  write_png(kDir / "img2.png", back);
  CHECK(read_text(kDir / "img.png") == read_text(kDir / "img2.png"));
}

TEST_CASE("PNG errors") {
  write_text(kDir / "not.png", "hello");
  CHECK_THROWS_AS(read_png_gray(kDir / "not.png"), IoError);
  CHECK_THROWS_AS(read_png_gray(kDir / "nope.png"), IoError);
  std::filesystem::remove_all(kDir);
}
