#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sketchanim/curves.hpp"
#include "sketchanim/guidance.hpp"
#include "sketchanim/motion.hpp"
#include "sketchanim/stage1.hpp"

namespace sketchanim {

/// Everything a CLI run needs. Loaded from a flat `key = value` file (see
/// config_keys()) and then overridden by command-line flags.
struct RunConfig {
  std::string prompt;
  std::string motion_prompt;
  std::uint64_t seed = 0;
  // mock | mock:zero | target:<path> | remote:<url>
  std::string provider = "mock";
  std::filesystem::path output_dir = "out";

  InitOptions init;
  Stage1Config stage1;
  Stage2Config stage2;

  /// Propagates prompt and seed into the stage configs.
  void sync();
  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Documented keys, in the order they are listed by `--help-config`.
const std::vector<std::pair<std::string, std::string>>& config_keys();

/// Throws ConfigError on unknown keys or unparsable values.
void apply_setting(RunConfig& config, std::string_view key,
                   std::string_view value);
/// Lines are `key = value`; blank lines and lines starting with '#' are
/// ignored.
void load_config_text(RunConfig& config, std::string_view text);
void load_config_file(RunConfig& config, const std::filesystem::path& path);

enum class GuidanceKind { image, video };

/// Builds the provider named by `config.provider`.
///
/// target:<path> accepts a sketch/animation JSON file whose renders become
/// the targets, or a directory of PNGs named <view>.png (image guidance) or
/// <plane>_<kkk>.png (video guidance).
std::unique_ptr<GuidanceProvider> make_provider(const RunConfig& config,
                                                GuidanceKind kind);

/// Target images for each canonical view of `reference`.
std::map<std::string, RasterImage> render_view_targets(
    const Sketch3D& reference, int image_size, const RasterOptions& options);
/// Target sequences for both planes of an animation.
std::map<std::string, std::vector<RasterImage>> render_plane_targets(
    const Sketch3D& base, const DisplacementField& field, int image_size,
    const RasterOptions& options);

}  // namespace sketchanim
