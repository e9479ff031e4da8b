#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sketchanim/projection.hpp"
#include "sketchanim/rasterizer.hpp"

namespace sketchanim {

inline constexpr double kDefaultImageCfg = 7.5;
inline constexpr double kDefaultVideoCfg = 30.0;

/// "A front view of {base}" etc.
std::string compose_view_prompt(ViewKind view, const std::string& base);

struct PromptContext {
  std::string base_prompt;
  std::optional<ViewKind> view_tag;
  std::optional<std::string> motion_prompt;
  double cfg_scale = kDefaultImageCfg;

  /// Text sent to the model: the motion prompt when present, otherwise the
  /// view-composed prompt, otherwise the base prompt.
  std::string text() const;
};

/// Upper bound of the sampled diffusion time decays linearly over the run;
/// the lower bound stays fixed.
struct TimestepSchedule {
  double t_min = 0.02;
  double t_max_start = 0.8;
  double t_max_end = 0.6;
  int total_iters = 1;

  void validate() const;
  /// Throws ConfigError when iter is outside [0, total_iters).
  double t_max(int iter) const;
};

/// t ~ Uniform[t_min, t_max(iter)).
double sample_timestep(const TimestepSchedule& schedule, int iter,
                       std::mt19937_64& rng);

/// w(t) of the distillation objective.
using SdsWeightFn = std::function<double(double)>;

double sds_weight(double t);  // constant 1
SdsWeightFn constant_sds_weight(double value = 1.0);
SdsWeightFn one_minus_t_sds_weight();

struct GuidanceRequest {
  std::vector<RasterImage> frames;
  PromptContext prompt;
  double timestep = 0.5;
  std::uint64_t seed = 0;
  // Which camera/plane the frames come from ("front", "frontal", ...). Local
  // target providers key on it; remote providers only see the prompt.
  std::string view;
};

struct GuidanceResponse {
  std::vector<std::vector<double>> grads;  // one H*W array per frame
  double weight = 1.0;
};

/// Source of pixel-space distillation gradients. Implementations must be safe
/// to call from several threads at once.
class GuidanceProvider {
 public:
  virtual ~GuidanceProvider() = default;
  virtual std::string name() const = 0;
  virtual GuidanceResponse image_sds(const GuidanceRequest& request) = 0;
  virtual GuidanceResponse video_sds(const GuidanceRequest& request) = 0;
};

/// Single-frame guidance with request and response validation.
GuidanceResponse image_guidance(GuidanceProvider& provider,
                                const GuidanceRequest& request);
/// Multi-frame guidance (K >= 2) with request and response validation.
GuidanceResponse video_guidance(GuidanceProvider& provider,
                                const GuidanceRequest& request);

/// Seeded pseudo-random gradients. Scale 0 yields all-zero responses.
class MockProvider : public GuidanceProvider {
 public:
  explicit MockProvider(double scale = 0.05,
                        SdsWeightFn weight = constant_sds_weight());

  std::string name() const override { return "mock"; }
  GuidanceResponse image_sds(const GuidanceRequest& request) override;
  GuidanceResponse video_sds(const GuidanceRequest& request) override;

 private:
  GuidanceResponse respond(const GuidanceRequest& request) const;

  double scale_;
  SdsWeightFn weight_;
};

/// grads = w(t) * (frame - target), the gradient of the per-view squared
/// error to a fixed image.
class TargetImageProvider : public GuidanceProvider {
 public:
  explicit TargetImageProvider(std::map<std::string, RasterImage> targets,
                               SdsWeightFn weight = constant_sds_weight());

  std::string name() const override { return "target-image"; }
  GuidanceResponse image_sds(const GuidanceRequest& request) override;
  GuidanceResponse video_sds(const GuidanceRequest& request) override;

  const std::map<std::string, RasterImage>& targets() const { return targets_; }

 private:
  std::map<std::string, RasterImage> targets_;
  SdsWeightFn weight_;
};

/// Frame-wise version of TargetImageProvider.
class TargetVideoProvider : public GuidanceProvider {
 public:
  explicit TargetVideoProvider(
      std::map<std::string, std::vector<RasterImage>> targets,
      SdsWeightFn weight = constant_sds_weight());

  std::string name() const override { return "target-video"; }
  GuidanceResponse image_sds(const GuidanceRequest& request) override;
  GuidanceResponse video_sds(const GuidanceRequest& request) override;

 private:
  std::map<std::string, std::vector<RasterImage>> targets_;
  SdsWeightFn weight_;
};

/// Euclidean distance between two equally sized images.
double l2_distance(const RasterImage& a, const RasterImage& b);
/// Root mean square of a gradient array; used as the per-view loss proxy.
double rms(const std::vector<double>& values);

}  // namespace sketchanim
