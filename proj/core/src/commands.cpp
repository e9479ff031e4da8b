#include "sketchanim/commands.hpp"

#include <cstdio>
#include <ostream>

#include "sketchanim/error.hpp"
#include "sketchanim/formats.hpp"
#include "sketchanim/image_io.hpp"

namespace sketchanim {

namespace {

const std::vector<ViewKind> kPreviewViews = {ViewKind::front, ViewKind::back,
                                             ViewKind::left, ViewKind::right,
                                             ViewKind::top};

std::string frame_name(Plane plane, int k) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s_%03d.png",
                std::string(to_string(plane)).c_str(), k);
  return buf;
}

std::optional<Plane> parse_plane(const std::string& s) {
  if (s == "frontal") return Plane::frontal;
  if (s == "sagittal") return Plane::sagittal;
  return std::nullopt;
}

}  // namespace

int run_command(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const StageAborted& e) {
    err << "error: " << e.what() << "\n";
    if (!e.checkpoint().empty()) {
      err << "checkpoint kept in " << e.checkpoint().string() << "\n";
    }
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_structure(const RunConfig& input, bool resume, std::ostream& log) {
  RunConfig config = input;
  config.sync();
  config.validate();
  const auto out = config.output_dir;
  config.stage1.checkpoint_dir = out / "checkpoint";

  auto provider = make_provider(config, GuidanceKind::image);
  std::optional<Stage1Resume> state;
  if (resume) state = read_stage1_checkpoint(config.stage1.checkpoint_dir);
  const Sketch3D init = state ? state->sketch : init_sketch(config.init);
  if (state && state->sketch.curves.size() != std::size_t(config.init.n_curves)) {
    throw ConfigError("n_curves does not match the checkpoint");
  }
  log << "structure: " << config.stage1.iters << " iterations, "
      << init.curves.size() << " curves, provider " << provider->name()
      << "\n";

  Stage1Result result = optimize_structure(init, *provider, config.stage1,
                                           state ? &*state : nullptr);
  result.sketch.prompt = config.prompt;
  result.sketch.seed = config.seed;
  write_sketch(out / "sketch.json", result.sketch);

  std::vector<std::string> columns;
  for (auto v : kPreviewViews) {
    columns.emplace_back(to_string(v));
    const auto vp = Viewpoint::canonical(v, kDefaultCameraDistance,
                                         kDefaultFovDeg, config.stage1.image_size);
    write_png(out / ("preview_" + std::string(to_string(v)) + ".png"),
              render_view(result.sketch, vp, config.stage1.raster).image);
  }
  write_stage1_trace(out / "loss_trace.csv", result.trace, columns);
  write_stage1_checkpoint(config.stage1.checkpoint_dir, result.sketch,
                          result.adam, config.stage1.iters);
  if (result.degenerate_terms > 0) {
    log << "structure: skipped " << result.degenerate_terms
        << " geometric terms on zero-length segments\n";
  }
  log << "structure: wrote " << (out / "sketch.json").string() << "\n";
  return kExitOk;
}

int cmd_motion(const RunConfig& input, const std::filesystem::path& sketch_path,
               bool resume, std::ostream& log) {
  RunConfig config = input;
  config.sync();
  config.validate();
  const auto out = config.output_dir;
  config.stage2.checkpoint_dir = out / "checkpoint";

  const Sketch3D base = read_sketch(sketch_path);
  auto provider = make_provider(config, GuidanceKind::video);
  MotionModel model(static_cast<int>(base.curves.size()), config.stage2.model);
  std::optional<Stage2Resume> state;
  if (resume) state = read_stage2_checkpoint(config.stage2.checkpoint_dir, model);
  log << "motion: " << config.stage2.iters << " iterations, "
      << config.stage2.frames << " frames, provider " << provider->name()
      << "\n";

  Stage2Result result = optimize_motion(base, model, *provider, config.stage2,
                                        state ? &*state : nullptr);
  write_animation(out / "animation.json", Animation{base, result.field});
  for (auto plane : {Plane::frontal, Plane::sagittal}) {
    for (int k = 0; k < result.field.frames(); ++k) {
      write_png(out / "frames" / frame_name(plane, k),
                render_frame(base, result.field, k, plane,
                             config.stage2.frame_size, config.stage2.raster)
                    .image);
    }
  }
  write_stage2_trace(out / "motion_trace.csv", result.trace);
  write_stage2_checkpoint(config.stage2.checkpoint_dir, model, result.adam,
                          config.stage2.iters);
  log << "motion: wrote " << (out / "animation.json").string() << "\n";
  return kExitOk;
}

int cmd_render(const RenderRequest& req, std::ostream& log) {
  const auto ext = req.output.extension().string();
  if (ext != ".png" && ext != ".svg") {
    throw ConfigError("output must end in .png or .svg");
  }
  if (req.size <= 0) throw ConfigError("size must be positive");
  req.raster.validate();

  const auto plane = parse_plane(req.view);
  const auto kind = parse_view_kind(req.view);
  if (!plane && (!kind || *kind == ViewKind::custom)) {
    throw ConfigError("unknown view '" + req.view +
                      "' (front, back, left, right, top, frontal, sagittal)");
  }

  Sketch3D sketch;
  if (is_animation_file(req.input)) {
    const Animation anim = read_animation(req.input);
    if (req.frame < 0 || req.frame >= anim.field.frames()) {
      throw ConfigError("frame " + std::to_string(req.frame) +
                        " out of range for " +
                        std::to_string(anim.field.frames()) + " frames");
    }
    sketch = anim.field.apply(anim.base, req.frame);
  } else {
    sketch = read_sketch(req.input);
  }

  if (ext == ".svg") {
    if (req.depth_color) throw ConfigError("depth color needs PNG output");
    std::vector<Bezier2D> curves;
    for (const auto& c : sketch.curves) {
      if (plane) {
        const OrthoFrame frame{*plane, req.size};
        Bezier2D b;
        for (int j = 0; j < 4; ++j) b.control[j] = frame.to_pixel(c.control[j]);
        curves.push_back(b);
      } else {
        curves.push_back(project_curve(
            Viewpoint::canonical(*kind, kDefaultCameraDistance, kDefaultFovDeg,
                                 req.size),
            c));
      }
    }
    write_text(req.output,
               curves_to_svg(curves, req.size, req.size, req.raster.sigma));
  } else if (req.depth_color) {
    if (plane) throw ConfigError("depth color needs a camera view");
    write_png(req.output,
              render_depth_color(sketch,
                                 Viewpoint::canonical(*kind, kDefaultCameraDistance,
                                                      kDefaultFovDeg, req.size),
                                 req.raster));
  } else if (plane) {
    write_png(req.output,
              render_ortho(sketch, OrthoFrame{*plane, req.size}, req.raster).image);
  } else {
    write_png(req.output,
              render_view(sketch,
                          Viewpoint::canonical(*kind, kDefaultCameraDistance,
                                               kDefaultFovDeg, req.size),
                          req.raster)
                  .image);
  }
  log << "render: wrote " << req.output.string() << "\n";
  return kExitOk;
}

int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out) {
  const auto report = run_gradcheck(options);
  out << report.to_jsonl();
  return report.passed() ? kExitOk : kExitFailure;
}

}  // namespace sketchanim
