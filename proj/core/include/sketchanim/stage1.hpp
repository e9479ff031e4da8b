#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sketchanim/adam.hpp"
#include "sketchanim/curves.hpp"
#include "sketchanim/error.hpp"
#include "sketchanim/guidance.hpp"
#include "sketchanim/projection.hpp"
#include "sketchanim/rasterizer.hpp"

namespace sketchanim {

struct Stage1Config {
  int iters = 4000;
  double lr = 1.5e-3;
  double lambda_g = 0.05;
  std::vector<Viewpoint> views = cardinal_views();
  double top_view_prob = 0.1;
  RasterOptions raster;
  // Every view is rendered at this size regardless of its own image_size.
  int image_size = kDefaultImageSize;
  std::uint64_t seed = 0;
  double cfg_scale = kDefaultImageCfg;
  double t_min = 0.02;
  double t_max_start = 0.8;
  double t_max_end = 0.6;
  std::string prompt;
  int checkpoint_every = 500;
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints

  /// Throws ConfigError naming the offending field.
  void validate() const;
  TimestepSchedule schedule() const;
};

struct GeometricLoss {
  double value = 0.0;
  std::vector<double> grad;  // flat layout of as_flat_parameters
  int degenerate_terms = 0;  // joints skipped for a zero-length segment
};

/// Mean over curves of the squared change in unit direction across the two
/// interior joints of each curve.
GeometricLoss geometric_loss(const Sketch3D& sketch);

struct Stage1TraceRow {
  int iter = 0;
  double t = 0.0;
  // RMS of the returned pixel gradient per view, keyed by view name.
  std::vector<std::pair<std::string, double>> sds;
  double geometric = 0.0;
};

struct Stage1Result {
  Sketch3D sketch;
  std::vector<Stage1TraceRow> trace;
  AdamState adam;
  int degenerate_terms = 0;
};

struct Stage1Resume {
  Sketch3D sketch;
  AdamState adam;
  int next_iter = 0;
};

/// Multi-view structure optimization. Each iteration samples one timestep,
/// renders every configured view (plus the top view with probability
/// top_view_prob), asks the provider for image guidance with a
/// view-tagged prompt, backpropagates into the control points, adds the
/// weighted geometric gradient and takes one Adam step.
Stage1Result optimize_structure(const Sketch3D& init,
                                GuidanceProvider& provider,
                                const Stage1Config& config,
                                const Stage1Resume* resume = nullptr);

/// Checkpoint files inside `dir`: stage1_sketch.json and stage1_adam.bin.
void write_stage1_checkpoint(const std::filesystem::path& dir,
                             const Sketch3D& sketch, const AdamState& adam,
                             int next_iter);
Stage1Resume read_stage1_checkpoint(const std::filesystem::path& dir);

}  // namespace sketchanim
