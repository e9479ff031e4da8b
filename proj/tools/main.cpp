#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sketchanim/commands.hpp"
#include "sketchanim/error.hpp"

using namespace sketchanim;

namespace {

std::string config_help() {
  std::string out = "Config keys (key = value, one per line):\n";
  for (const auto& [key, help] : config_keys()) {
    out += "  " + key + std::string(key.size() < 24 ? 24 - key.size() : 1, ' ') +
           help + "\n";
  }
  return out;
}

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> settings;
  std::optional<std::uint64_t> seed;
  std::string provider;
  std::string out;
  std::string prompt;
  std::string motion_prompt;
  bool resume = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value config file")
        ->check(CLI::ExistingFile);
    app->add_option("--set", settings, "override one config key, key=value");
    app->add_option("--seed", seed, "run seed");
    app->add_option("--provider", provider,
                    "mock | mock:zero | target:<path> | remote:<url>");
    app->add_option("--out", out, "output directory");
    app->add_option("--prompt", prompt, "object description");
    app->add_flag("--resume", resume, "continue from <out>/checkpoint");
  }

  RunConfig build() const {
    RunConfig config;
    if (!config_path.empty()) load_config_file(config, config_path);
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + s + "'");
      }
      apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
    }
    if (seed) config.seed = *seed;
    if (!provider.empty()) config.provider = provider;
    if (!out.empty()) config.output_dir = out;
    if (!prompt.empty()) config.prompt = prompt;
    if (!motion_prompt.empty()) config.motion_prompt = motion_prompt;
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimize and animate 3D Bezier sketches"};
  app.require_subcommand(1);
  app.footer(config_help());

  CommonFlags structure_flags;
  auto* structure = app.add_subcommand("structure", "optimize a static 3D sketch");
  structure_flags.attach(structure);

  CommonFlags motion_flags;
  std::string sketch_path;
  auto* motion = app.add_subcommand("motion", "animate a static sketch");
  motion_flags.attach(motion);
  motion->add_option("--motion-prompt", motion_flags.motion_prompt,
                     "motion description");
  motion->add_option("sketch", sketch_path, "sketch.json from the structure stage")
      ->required()
      ->check(CLI::ExistingFile);

  RenderRequest render_req;
  auto* render = app.add_subcommand("render", "render a sketch or animation");
  render->add_option("input", render_req.input, "sketch.json or animation.json")
      ->required()
      ->check(CLI::ExistingFile);
  render->add_option("-o,--output", render_req.output, "output .png or .svg")
      ->required();
  render->add_option("--view", render_req.view,
                     "front, back, left, right, top, frontal or sagittal");
  render->add_option("--size", render_req.size, "image size in pixels");
  render->add_option("--sigma", render_req.raster.sigma, "stroke radius in pixels");
  render->add_option("--samples", render_req.raster.samples, "samples per curve");
  render->add_option("--frame", render_req.frame, "animation frame index");
  render->add_flag("--depth-color", render_req.depth_color,
                   "color strokes by camera depth");

  GradcheckOptions grad_opts;
  auto* gradcheck = app.add_subcommand("gradcheck",
                                       "compare analytic and numeric gradients");
  gradcheck->add_option("--seed", grad_opts.seed, "case seed");
  gradcheck->add_option("--cases", grad_opts.cases, "cases per check");
  gradcheck->add_option("--tolerance", grad_opts.raster_tolerance,
                        "rasterizer relative error tolerance");
  gradcheck->add_option("--loss-tolerance", grad_opts.loss_tolerance,
                        "loss and network relative error tolerance");
  gradcheck->add_flag("--inject-sign-flip", grad_opts.inject_sign_flip,
                      "negate the rasterizer gradient (self-test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (structure->parsed()) {
    return run_command(
        [&] {
          return cmd_structure(structure_flags.build(), structure_flags.resume,
                               std::cerr);
        },
        std::cerr);
  }
  if (motion->parsed()) {
    return run_command(
        [&] {
          return cmd_motion(motion_flags.build(), sketch_path,
                            motion_flags.resume, std::cerr);
        },
        std::cerr);
  }
  if (render->parsed()) {
    return run_command([&] { return cmd_render(render_req, std::cerr); },
                       std::cerr);
  }
  return run_command([&] { return cmd_gradcheck(grad_opts, std::cout); },
                     std::cerr);
}
