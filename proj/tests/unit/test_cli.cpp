#include "doctest.h"
#include "sketchanim/commands.hpp"
#include "sketchanim/error.hpp"
#include "sketchanim/formats.hpp"
#include "sketchanim/image_io.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace sketchanim;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "sketchanim_cli";

RunConfig quick_config(const fs::path& out) {
  RunConfig c;
  c.prompt = "a teapot";
  c.motion_prompt = "the teapot spins";
  c.seed = 3;
  c.output_dir = out;
  c.init.n_curves = 4;
  c.stage1.iters = 10;
  c.stage1.image_size = 48;
  c.stage2.iters = 4;
  c.stage2.frames = 8;
  c.stage2.frame_size = 32;
  c.stage2.model = {16, 2, 0};
  return c;
}

int lines(const std::string& text) {
  int n = 0;
  for (char ch : text) n += ch == '\n';
  return n;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(SKETCHANIM_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int exit_code_of(const std::function<int()>& fn) {
  std::ostringstream err;
  return run_command(fn, err);
}

struct Workspace {
  Workspace() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
  ~Workspace() { fs::remove_all(kDir); }
};

}  // namespace

TEST_CASE("structure command writes its artifacts") {
  Workspace ws;
  std::ostringstream log;
  REQUIRE(cmd_structure(quick_config(kDir / "a"), false, log) == kExitOk);
  CHECK(fs::exists(kDir / "a" / "sketch.json"));
  for (const char* v : {"front", "back", "left", "right", "top"}) {
    CHECK(fs::exists(kDir / "a" / (std::string("preview_") + v + ".png")));
  }
  CHECK(lines(read_text(kDir / "a" / "loss_trace.csv")) == 11);
  const auto sketch = read_sketch(kDir / "a" / "sketch.json");
  CHECK(sketch.curves.size() == 4);
  CHECK(sketch.prompt == "a teapot");

  REQUIRE(cmd_structure(quick_config(kDir / "b"), false, log) == kExitOk);
  CHECK(read_text(kDir / "a" / "sketch.json") == read_text(kDir / "b" / "sketch.json"));
}

TEST_CASE("structure resume continues from the checkpoint") {
  Workspace ws;
  std::ostringstream log;
  auto c = quick_config(kDir / "r");
  c.stage1.iters = 10;
  c.stage1.checkpoint_every = 5;
  REQUIRE(cmd_structure(c, false, log) == kExitOk);
  const auto full = read_text(kDir / "r" / "sketch.json");
  // The final checkpoint marks the run as complete, so resuming is a no-op.
  REQUIRE(cmd_structure(c, true, log) == kExitOk);
  CHECK(read_text(kDir / "r" / "sketch.json") == full);
  CHECK(lines(read_text(kDir / "r" / "loss_trace.csv")) == 1);
}

TEST_CASE("invalid settings are usage errors naming the field") {
  Workspace ws;
  auto c = quick_config(kDir / "bad");
  c.stage1.lr = 0.0;
  std::ostringstream log, err;
  CHECK(run_command([&] { return cmd_structure(c, false, log); }, err) == kExitUsage);
  CHECK(err.str().find("stage1.lr") != std::string::npos);
  CHECK_FALSE(fs::exists(kDir / "bad" / "sketch.json"));
}

TEST_CASE("unreachable guidance fails with a retained checkpoint") {
  Workspace ws;
  auto c = quick_config(kDir / "down");
  c.provider = "remote:http://127.0.0.1:1";
  std::ostringstream log, err;
  CHECK(run_command([&] { return cmd_structure(c, false, log); }, err) == kExitFailure);
  CHECK(fs::exists(kDir / "down" / "checkpoint" / "stage1_sketch.json"));
  CHECK(err.str().find("checkpoint") != std::string::npos);
}

TEST_CASE("motion command writes frames that start at the static sketch") {
  Workspace ws;
  std::ostringstream log;
  auto c = quick_config(kDir / "m");
  REQUIRE(cmd_structure(c, false, log) == kExitOk);
  REQUIRE(cmd_motion(c, kDir / "m" / "sketch.json", false, log) == kExitOk);

  int pngs = 0;
  for (const auto& e : fs::directory_iterator(kDir / "m" / "frames")) pngs += e.path().extension() == ".png";
  CHECK(pngs == 16);
  CHECK(lines(read_text(kDir / "m" / "motion_trace.csv")) == 5);

  const auto anim = read_animation(kDir / "m" / "animation.json");
  CHECK(anim.field.frames() == 8);
  CHECK(anim.base == read_sketch(kDir / "m" / "sketch.json"));
  CHECK(animation_from_json(animation_to_json(anim)).field == anim.field);

  const auto static_front = render_ortho(anim.base, OrthoFrame{Plane::frontal, 32}, c.stage2.raster).image;
  const auto frame0 = read_png_gray(kDir / "m" / "frames" / "frontal_000.png");
  const auto q = quantize(static_front);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(frame0.intensity[i] == q[i] / 255.0);
}

TEST_CASE("render command") {
  Workspace ws;
  std::ostringstream log;
  InitOptions init;
  init.n_curves = 6;
  init.radius = 0.4;
  init.min_step = 0.1;
  init.max_step = 0.2;
  const auto sketch = init_sketch(init);
  write_sketch(kDir / "s.json", sketch);

  RenderRequest svg;
  svg.input = kDir / "s.json";
  svg.output = kDir / "s.svg";
  svg.size = 64;
  REQUIRE(cmd_render(svg, log) == kExitOk);
  const auto text = read_text(svg.output);
  int paths = 0;
  for (auto p = text.find("<path"); p != std::string::npos; p = text.find("<path", p + 1)) ++paths;
  CHECK(paths == 6);

  RenderRequest png = svg;
  png.output = kDir / "s.png";
  png.view = "left";
  REQUIRE(cmd_render(png, log) == kExitOk);
  const auto expected = quantize(
      render_view(sketch, Viewpoint::canonical(ViewKind::left, kDefaultCameraDistance, kDefaultFovDeg, 64)).image);
  const auto got = read_png_gray(png.output);
  bool same = got.width == 64;
  for (std::size_t i = 0; same && i < expected.size(); ++i) same = got.intensity[i] == expected[i] / 255.0;
  CHECK(same);

  RenderRequest depth = png;
  depth.output = kDir / "d.png";
  depth.depth_color = true;
  REQUIRE(cmd_render(depth, log) == kExitOk);
  // Color type byte of the IHDR chunk: 2 is RGB, 0 is grayscale.
  CHECK(static_cast<unsigned char>(read_text(depth.output)[25]) == 2);
  CHECK(static_cast<unsigned char>(read_text(png.output)[25]) == 0);

  RenderRequest bad = svg;
  bad.view = "diagonal";
  CHECK(exit_code_of([&] { return cmd_render(bad, log); }) == kExitUsage);
  bad = svg;
  bad.output = kDir / "s.jpg";
  CHECK(exit_code_of([&] { return cmd_render(bad, log); }) == kExitUsage);
  bad = svg;
  bad.depth_color = true;
  CHECK(exit_code_of([&] { return cmd_render(bad, log); }) == kExitUsage);
  bad = png;
  bad.input = kDir / "missing.json";
  CHECK(exit_code_of([&] { return cmd_render(bad, log); }) == kExitFailure);
}

TEST_CASE("binary exit codes") {
  Workspace ws;
  CHECK(run_binary("--help") == 0);
  CHECK(run_binary("no-such-command") == 2);
  CHECK(run_binary("structure --set stage1.lr=0 --out " + (kDir / "x").string()) == 2);
  CHECK(run_binary("structure --set bogus=1") == 2);
  CHECK(run_binary("structure --prompt cup --set n_curves=3 --set stage1.iters=3 --set stage1.image_size=32 --out " +
                   (kDir / "ok").string()) == 0);
  CHECK(run_binary("render " + (kDir / "ok" / "sketch.json").string() + " -o " + (kDir / "v.png").string() +
                   " --view sideways") == 2);
  CHECK(run_binary("render " + (kDir / "ok" / "sketch.json").string() + " -o " + (kDir / "v.svg").string() +
                   " --view top") == 0);
}
