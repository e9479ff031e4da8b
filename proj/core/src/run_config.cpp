#include "sketchanim/run_config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "sketchanim/error.hpp"
#include "sketchanim/formats.hpp"
#include "sketchanim/image_io.hpp"
#include "sketchanim/remote_provider.hpp"

namespace sketchanim {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string v(value);
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string(key) + ": expected a number, got '" +
                    std::string(value) + "'");
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int out{};
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" +
                      std::string(value) + "'");
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

struct KeyEntry {
  std::string key;
  std::string help;
  Setter set;
};

#define SK_DOUBLE(field) \
  [](RunConfig& c, std::string_view v) { c.field = parse_double(#field, v); }
#define SK_INT(field)                                   \
  [](RunConfig& c, std::string_view v) {                \
    c.field = parse_int<decltype(c.field)>(#field, v);  \
  }

const std::vector<KeyEntry>& key_table() {
  static const std::vector<KeyEntry> table = {
      {"prompt", "object description", [](RunConfig& c, std::string_view v) { c.prompt = v; }},
      {"motion_prompt", "motion description for the animation stage",
       [](RunConfig& c, std::string_view v) { c.motion_prompt = v; }},
      {"seed", "run seed", SK_INT(seed)},
      {"provider", "mock | mock:zero | target:<path> | remote:<url>",
       [](RunConfig& c, std::string_view v) { c.provider = v; }},
      {"out", "output directory",
       [](RunConfig& c, std::string_view v) { c.output_dir = std::string(v); }},
      {"n_curves", "number of strokes (16)", SK_INT(init.n_curves)},
      {"init_radius", "initial ball radius (0.2)", SK_DOUBLE(init.radius)},
      {"init_min_step", "min control-point step at init (0.001)", SK_DOUBLE(init.min_step)},
      {"init_max_step", "max control-point step at init (0.01)", SK_DOUBLE(init.max_step)},
      {"stage1.iters", "structure iterations (4000)", SK_INT(stage1.iters)},
      {"stage1.lr", "structure learning rate (1.5e-3)", SK_DOUBLE(stage1.lr)},
      {"stage1.lambda_g", "geometric loss weight (0.05)", SK_DOUBLE(stage1.lambda_g)},
      {"stage1.top_view_prob", "probability of adding the top view (0.1)",
       SK_DOUBLE(stage1.top_view_prob)},
      {"stage1.image_size", "render size in pixels (512)", SK_INT(stage1.image_size)},
      {"stage1.sigma", "stroke kernel radius in pixels (2)", SK_DOUBLE(stage1.raster.sigma)},
      {"stage1.samples", "quadrature samples per curve (32)", SK_INT(stage1.raster.samples)},
      {"stage1.cfg", "image guidance CFG scale (7.5)", SK_DOUBLE(stage1.cfg_scale)},
      {"stage1.t_min", "lowest sampled timestep (0.02)", SK_DOUBLE(stage1.t_min)},
      {"stage1.t_max_start", "upper timestep bound at the start (0.8)", SK_DOUBLE(stage1.t_max_start)},
      {"stage1.t_max_end", "upper timestep bound at the end (0.6)", SK_DOUBLE(stage1.t_max_end)},
      {"stage1.checkpoint_every", "checkpoint period in iterations (500)",
       SK_INT(stage1.checkpoint_every)},
      {"stage2.iters", "motion iterations (1000)", SK_INT(stage2.iters)},
      {"stage2.lr", "motion learning rate (1e-4)", SK_DOUBLE(stage2.lr)},
      {"stage2.frames", "animation frames K (16)", SK_INT(stage2.frames)},
      {"stage2.lambda_s", "smoothness weight (0.1)", SK_DOUBLE(stage2.lambda_s)},
      {"stage2.beta", "motion amplitude ramp rate (5)", SK_DOUBLE(stage2.beta)},
      {"stage2.cfg", "video guidance CFG scale (30)", SK_DOUBLE(stage2.cfg_scale)},
      {"stage2.frame_size", "frame render size in pixels (256)", SK_INT(stage2.frame_size)},
      {"stage2.sigma", "stroke kernel radius in pixels (2)", SK_DOUBLE(stage2.raster.sigma)},
      {"stage2.samples", "quadrature samples per curve (32)", SK_INT(stage2.raster.samples)},
      {"stage2.hidden", "motion network hidden width (256)", SK_INT(stage2.model.hidden)},
      {"stage2.frequencies", "frame-phase encoding octaves (8)", SK_INT(stage2.model.frequencies)},
      {"stage2.t_min", "lowest sampled timestep (0.02)", SK_DOUBLE(stage2.t_min)},
      {"stage2.t_max_start", "upper timestep bound at the start (0.8)", SK_DOUBLE(stage2.t_max_start)},
      {"stage2.t_max_end", "upper timestep bound at the end (0.6)", SK_DOUBLE(stage2.t_max_end)},
      {"stage2.checkpoint_every", "checkpoint period in iterations (250)",
       SK_INT(stage2.checkpoint_every)},
  };
  return table;
}

#undef SK_DOUBLE
#undef SK_INT

}  // namespace

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const auto keys = [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : key_table()) out.emplace_back(k.key, k.help);
    return out;
  }();
  return keys;
}

void apply_setting(RunConfig& config, std::string_view key,
                   std::string_view value) {
  for (const auto& entry : key_table()) {
    if (entry.key == key) {
      try {
        entry.set(config, value);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void load_config_text(RunConfig& config, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    apply_setting(config, trim(std::string_view(t).substr(0, eq)),
                  trim(std::string_view(t).substr(eq + 1)));
  }
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError("config file '" + path.string() + "' does not exist");
  }
  load_config_text(config, read_text(path));
}

void RunConfig::sync() {
  init.seed = seed;
  stage1.seed = seed;
  stage2.seed = seed;
  stage2.model.seed = seed;
  stage1.prompt = prompt;
  stage2.prompt = prompt;
  stage2.motion_prompt = motion_prompt.empty() ? prompt : motion_prompt;
}

void RunConfig::validate() const {
  auto prefixed = [](const char* prefix, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(prefix) + e.what());
    }
  };
  if (init.n_curves < 1) throw ConfigError("n_curves must be >= 1");
  if (!(init.min_step > 0.0) || init.min_step > init.max_step) {
    throw ConfigError("init_min_step/init_max_step must satisfy 0 < min <= max");
  }
  if (!(init.radius >= 0.0)) throw ConfigError("init_radius must be >= 0");
  prefixed("stage1.", [&] { stage1.validate(); });
  prefixed("stage2.", [&] { stage2.validate(); });

  const auto colon = provider.find(':');
  const std::string kind = provider.substr(0, colon);
  const std::string arg =
      colon == std::string::npos ? std::string{} : provider.substr(colon + 1);
  if (kind == "mock") {
    if (!arg.empty() && arg != "zero") {
      throw ConfigError("provider: mock accepts only the 'zero' option");
    }
  } else if (kind == "target") {
    if (arg.empty()) throw ConfigError("provider: target needs a path");
    if (!std::filesystem::exists(arg)) {
      throw ConfigError("provider: target path '" + arg + "' does not exist");
    }
  } else if (kind == "remote") {
    if (arg.empty()) throw ConfigError("provider: remote needs a URL");
  } else {
    throw ConfigError("provider: expected mock, target:<path> or remote:<url>");
  }
}

std::map<std::string, RasterImage> render_view_targets(
    const Sketch3D& reference, int image_size, const RasterOptions& options) {
  std::map<std::string, RasterImage> targets;
  for (auto kind : {ViewKind::front, ViewKind::back, ViewKind::left,
                    ViewKind::right, ViewKind::top}) {
    const auto vp = Viewpoint::canonical(kind, kDefaultCameraDistance,
                                         kDefaultFovDeg, image_size);
    targets[std::string(to_string(kind))] =
        render_view(reference, vp, options).image;
  }
  return targets;
}

std::map<std::string, std::vector<RasterImage>> render_plane_targets(
    const Sketch3D& base, const DisplacementField& field, int image_size,
    const RasterOptions& options) {
  std::map<std::string, std::vector<RasterImage>> targets;
  for (auto plane : {Plane::frontal, Plane::sagittal}) {
    auto& seq = targets[std::string(to_string(plane))];
    for (int k = 0; k < field.frames(); ++k) {
      seq.push_back(
          render_frame(base, field, k, plane, image_size, options).image);
    }
  }
  return targets;
}

std::unique_ptr<GuidanceProvider> make_provider(const RunConfig& config,
                                                GuidanceKind kind) {
  const auto colon = config.provider.find(':');
  const std::string name = config.provider.substr(0, colon);
  const std::string arg = colon == std::string::npos
                              ? std::string{}
                              : config.provider.substr(colon + 1);
  if (name == "mock") {
    return std::make_unique<MockProvider>(arg == "zero" ? 0.0 : 0.05);
  }
  if (name == "remote") return std::make_unique<RemoteProvider>(arg);
  if (name != "target") {
    throw ConfigError("provider: unknown provider '" + config.provider + "'");
  }

  const std::filesystem::path path = arg;
  if (!std::filesystem::exists(path)) {
    throw ConfigError("provider: target path '" + arg + "' does not exist");
  }
  const auto read_target = [](const std::filesystem::path& file, int size) {
    RasterImage img = read_png_gray(file);
    if (img.width != size || img.height != size) {
      throw ConfigError("provider: " + file.string() + " is " +
                        std::to_string(img.width) + "x" +
                        std::to_string(img.height) + ", expected " +
                        std::to_string(size) + "x" + std::to_string(size));
    }
    return img;
  };
  if (kind == GuidanceKind::image) {
    if (std::filesystem::is_directory(path)) {
      std::map<std::string, RasterImage> targets;
      for (auto v : {ViewKind::front, ViewKind::back, ViewKind::left,
                     ViewKind::right, ViewKind::top}) {
        const auto file = path / (std::string(to_string(v)) + ".png");
        if (std::filesystem::exists(file)) {
          targets[std::string(to_string(v))] =
              read_target(file, config.stage1.image_size);
        }
      }
      return std::make_unique<TargetImageProvider>(std::move(targets));
    }
    const Sketch3D reference = is_animation_file(path)
                                   ? read_animation(path).base
                                   : read_sketch(path);
    return std::make_unique<TargetImageProvider>(render_view_targets(
        reference, config.stage1.image_size, config.stage1.raster));
  }

  if (std::filesystem::is_directory(path)) {
    std::map<std::string, std::vector<RasterImage>> targets;
    for (auto plane : {Plane::frontal, Plane::sagittal}) {
      auto& seq = targets[std::string(to_string(plane))];
      for (int k = 0; k < config.stage2.frames; ++k) {
        char name_buf[64];
        std::snprintf(name_buf, sizeof(name_buf), "%s_%03d.png",
                      std::string(to_string(plane)).c_str(), k);
        seq.push_back(read_target(path / name_buf, config.stage2.frame_size));
      }
    }
    return std::make_unique<TargetVideoProvider>(std::move(targets));
  }
  if (!is_animation_file(path)) {
    throw ConfigError("provider: video targets need an animation file or a "
                      "frame directory");
  }
  const Animation anim = read_animation(path);
  if (anim.field.frames() != config.stage2.frames) {
    throw ConfigError("provider: target animation has " +
                      std::to_string(anim.field.frames()) +
                      " frames but stage2.frames is " +
                      std::to_string(config.stage2.frames));
  }
  return std::make_unique<TargetVideoProvider>(render_plane_targets(
      anim.base, anim.field, config.stage2.frame_size, config.stage2.raster));
}

}  // namespace sketchanim
