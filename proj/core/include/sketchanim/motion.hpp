#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sketchanim/adam.hpp"
#include "sketchanim/curves.hpp"
#include "sketchanim/guidance.hpp"
#include "sketchanim/projection.hpp"
#include "sketchanim/rasterizer.hpp"

namespace sketchanim {

/// Per-frame additive offsets for every control point of a sketch.
class DisplacementField {
 public:
  DisplacementField() = default;
  DisplacementField(int frames, int curves);

  int frames() const { return frames_; }
  int curves() const { return curves_; }

  Point3& at(int k, int i, int j) { return offsets_[index(k, i, j)]; }
  const Point3& at(int k, int i, int j) const {
    return offsets_[index(k, i, j)];
  }
  std::span<Point3> data() { return offsets_; }
  std::span<const Point3> data() const { return offsets_; }

  /// base + offsets of frame k.
  Sketch3D apply(const Sketch3D& base, int k) const;

  friend bool operator==(const DisplacementField&,
                         const DisplacementField&) = default;

 private:
  std::size_t index(int k, int i, int j) const {
    return (std::size_t(k) * curves_ + i) * 4 + j;
  }

  int frames_ = 0;
  int curves_ = 0;
  std::vector<Point3> offsets_;
};

/// Two coordinates per control point of one plane, point (i, j) at entries
/// 2(4i + j) and 2(4i + j) + 1.
struct FlatViewVector {
  Plane plane = Plane::frontal;
  std::vector<double> values;
};

constexpr std::size_t flat_view_index(std::size_t curve, std::size_t point) {
  return 2 * (curve * 4 + point);
}

FlatViewVector flatten_view(const Sketch3D& sketch, Plane plane);
/// The plane coordinates of frame k's displacements.
FlatViewVector flatten_delta(const DisplacementField& field, int k,
                             Plane plane);

/// x from the frontal vector, z from the sagittal one, y as the mean of the
/// two. Throws ShapeError on mismatched lengths/frames or wrong planes.
DisplacementField reconstruct_3d(std::span<const FlatViewVector> front,
                                 std::span<const FlatViewVector> side);

/// Adjoint of reconstruct_3d: maps dL/d(field) to dL/d(front), dL/d(side).
void reconstruct_3d_backward(const DisplacementField& grad_field,
                             std::vector<FlatViewVector>& grad_front,
                             std::vector<FlatViewVector>& grad_side);

struct SmoothnessLoss {
  double value = 0.0;
  DisplacementField grad;
};

/// Sum over frames of squared frame-to-frame offset changes. Throws
/// ConfigError when the field has fewer than two frames.
SmoothnessLoss smoothness_loss(const DisplacementField& field);

/// alpha = 1 - exp(-beta * iter / total), for 0 <= iter <= total.
double motion_amplitude(int iter, int total, double beta);

struct MotionModelOptions {
  int hidden = 256;
  int frequencies = 8;
  std::uint64_t seed = 0;
};

/// Feed-forward displacement predictor shared across frames and planes.
///
/// Input: the static sketch's flat view vector, a sinusoidal encoding of the
/// frame phase k/K (sin and cos at `frequencies` octaves), and a learned
/// 2-vector embedding of the plane. Two tanh hidden layers feed a linear
/// output layer that starts at zero, so an untrained model predicts no motion.
class MotionModel {
 public:
  MotionModel(int curves, const MotionModelOptions& options = {});

  int curves() const { return curves_; }
  std::size_t input_size() const { return input_size_; }
  std::size_t output_size() const { return output_size_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  struct Cache {
    Plane plane = Plane::frontal;
    std::vector<double> input;
    std::vector<double> h1;
    std::vector<double> h2;
  };

  /// Displacement flat vector for frame k of K in `base`'s plane.
  std::vector<double> forward(const FlatViewVector& base, int k, int frames,
                              Cache* cache = nullptr) const;
  /// Accumulates dL/d(parameters) into `grad` given dL/d(output).
  void backward(const Cache& cache, std::span<const double> grad_output,
                std::span<double> grad) const;

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::vector<double> encode_input(const FlatViewVector& base, int k,
                                   int frames) const;

  int curves_;
  MotionModelOptions options_;
  std::size_t input_size_;
  std::size_t output_size_;
  // Offsets into params_.
  std::size_t w1_, b1_, w2_, b2_, w3_, b3_, emb_;
  std::vector<double> params_;
};

struct Stage2Config {
  int iters = 1000;
  double lr = 1e-4;
  int frames = 16;
  double lambda_s = 0.1;
  double beta = 5.0;
  double cfg_scale = kDefaultVideoCfg;
  int frame_size = 256;
  RasterOptions raster;
  std::uint64_t seed = 0;
  std::string prompt;
  std::string motion_prompt;
  double t_min = 0.02;
  double t_max_start = 0.8;
  double t_max_end = 0.6;
  int checkpoint_every = 250;
  std::filesystem::path checkpoint_dir;
  MotionModelOptions model;

  void validate() const;
  TimestepSchedule schedule() const;
};

struct Stage2TraceRow {
  int iter = 0;
  double t = 0.0;
  double alpha = 0.0;
  double sds_frontal = 0.0;
  double sds_sagittal = 0.0;
  double smoothness = 0.0;
};

struct Stage2Result {
  DisplacementField field;
  std::vector<Stage2TraceRow> trace;
  AdamState adam;
};

struct Stage2Resume {
  AdamState adam;  // the model passed to optimize_motion carries the weights
  int next_iter = 0;
};

/// Displacements the model predicts for all frames at amplitude alpha.
/// Frame 0 is always zero.
DisplacementField predict_field(const MotionModel& model, const Sketch3D& base,
                                int frames, double alpha);

/// Animation-stage optimization: only the model's weights change; `base` is
/// read-only. Each iteration renders the K displaced frames on both planes,
/// requests video guidance under the motion prompt, adds the weighted
/// smoothness gradient and takes one Adam step on the model.
/// On guidance failure throws StageAborted after writing stage2_model.bin and
/// stage2_adam.bin to checkpoint_dir (when set).
Stage2Result optimize_motion(const Sketch3D& base, MotionModel& model,
                             GuidanceProvider& provider,
                             const Stage2Config& config,
                             const Stage2Resume* resume = nullptr);

void write_stage2_checkpoint(const std::filesystem::path& dir,
                             const MotionModel& model, const AdamState& adam,
                             int next_iter);
/// Loads weights into `model` and returns the optimizer state.
Stage2Resume read_stage2_checkpoint(const std::filesystem::path& dir,
                                    MotionModel& model);

/// Renders frame k of an animation on one plane.
RasterResult render_frame(const Sketch3D& base, const DisplacementField& field,
                          int k, Plane plane, int image_size,
                          const RasterOptions& options = {});

}  // namespace sketchanim
