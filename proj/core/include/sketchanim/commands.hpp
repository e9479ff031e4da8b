#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "sketchanim/gradcheck.hpp"
#include "sketchanim/run_config.hpp"

namespace sketchanim {

/// Process exit codes used by the CLI.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Runs `fn`, reporting exceptions on `err` and mapping them to exit codes:
/// ConfigError -> kExitUsage, any other exception -> kExitFailure.
int run_command(const std::function<int()>& fn, std::ostream& err);

/// Structure stage. Writes sketch.json, preview_<view>.png, loss_trace.csv and
/// checkpoint/ into config.output_dir. With `resume`, continues from the
/// checkpoint directory instead of a fresh initialization.
int cmd_structure(const RunConfig& config, bool resume, std::ostream& log);

/// Animation stage for a static sketch. Writes animation.json,
/// frames/<plane>_<kkk>.png, motion_trace.csv and checkpoint/.
int cmd_motion(const RunConfig& config, const std::filesystem::path& sketch,
               bool resume, std::ostream& log);

struct RenderRequest {
  std::filesystem::path input;   // sketch or animation JSON
  std::filesystem::path output;  // .png or .svg
  // front | back | left | right | top | frontal | sagittal
  std::string view = "front";
  int size = kDefaultImageSize;
  RasterOptions raster;
  bool depth_color = false;
  int frame = 0;  // animation frame; ignored for static sketches
};

/// Unknown views, unsupported combinations and bad extensions are usage errors
/// (ConfigError).
int cmd_render(const RenderRequest& request, std::ostream& log);

/// Prints the JSON-lines report to `out`; kExitFailure if any check fails.
int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out);

}  // namespace sketchanim
