#include "sketchanim/guidance.hpp"

#include <cmath>
#include <string>

#include "sketchanim/error.hpp"
#include "sketchanim/seeding.hpp"

namespace sketchanim {

std::string compose_view_prompt(ViewKind view, const std::string& base) {
  return "A " + std::string(to_string(view)) + " view of " + base;
}

std::string PromptContext::text() const {
  if (motion_prompt) return *motion_prompt;
  if (view_tag) return compose_view_prompt(*view_tag, base_prompt);
  return base_prompt;
}

void TimestepSchedule::validate() const {
  if (!(t_min > 0.0 && t_min < t_max_end && t_max_end <= t_max_start &&
        t_max_start < 1.0)) {
    throw ConfigError(
        "timestep schedule must satisfy 0 < t_min < t_max_end <= t_max_start "
        "< 1");
  }
  if (total_iters < 1) throw ConfigError("total_iters must be at least 1");
}

double TimestepSchedule::t_max(int iter) const {
  if (iter < 0 || iter >= total_iters) {
    throw ConfigError("iteration " + std::to_string(iter) +
                      " outside schedule of " + std::to_string(total_iters));
  }
  if (total_iters == 1) return t_max_start;
  const double frac = double(iter) / double(total_iters - 1);
  return t_max_start + frac * (t_max_end - t_max_start);
}

double sample_timestep(const TimestepSchedule& schedule, int iter,
                       std::mt19937_64& rng) {
  schedule.validate();
  std::uniform_real_distribution<double> dist(schedule.t_min,
                                              schedule.t_max(iter));
  return dist(rng);
}

double sds_weight(double /*t*/) { return 1.0; }

SdsWeightFn constant_sds_weight(double value) {
  return [value](double) { return value; };
}

SdsWeightFn one_minus_t_sds_weight() {
  return [](double t) { return 1.0 - t; };
}

namespace {

void check_request(const GuidanceRequest& request) {
  if (request.frames.empty()) throw ProtocolError("request carries no frames");
  const auto& first = request.frames.front();
  for (const auto& f : request.frames) {
    if (f.width != first.width || f.height != first.height ||
        f.pixel_count() != std::size_t(f.width) * f.height) {
      throw ProtocolError("request frames differ in size");
    }
  }
  if (!(request.timestep > 0.0 && request.timestep < 1.0)) {
    throw ProtocolError("timestep must lie in (0, 1)");
  }
  if (!(request.prompt.cfg_scale > 0.0)) {
    throw ProtocolError("cfg_scale must be positive");
  }
}

void check_response(const GuidanceRequest& request,
                    const GuidanceResponse& response) {
  if (response.grads.size() != request.frames.size()) {
    throw ProtocolError("response has " +
                        std::to_string(response.grads.size()) +
                        " gradient frames, request had " +
                        std::to_string(request.frames.size()));
  }
  for (std::size_t k = 0; k < response.grads.size(); ++k) {
    if (response.grads[k].size() != request.frames[k].pixel_count()) {
      throw ProtocolError("gradient frame " + std::to_string(k) +
                          " does not match the request image size");
    }
    for (double g : response.grads[k]) {
      if (!std::isfinite(g)) {
        throw ProtocolError("gradient frame " + std::to_string(k) +
                            " contains a non-finite value");
      }
    }
  }
  if (!std::isfinite(response.weight)) {
    throw ProtocolError("response weight is not finite");
  }
}

std::vector<double> residual(const RasterImage& frame,
                             const RasterImage& target, double weight) {
  if (frame.width != target.width || frame.height != target.height) {
    throw ProtocolError("frame and target sizes differ");
  }
  std::vector<double> g(frame.pixel_count());
  for (std::size_t p = 0; p < g.size(); ++p) {
    g[p] = weight * (frame.intensity[p] - target.intensity[p]);
  }
  return g;
}

}  // namespace

GuidanceResponse image_guidance(GuidanceProvider& provider,
                                const GuidanceRequest& request) {
  check_request(request);
  if (request.frames.size() != 1) {
    throw ProtocolError("image guidance takes exactly one frame");
  }
  auto response = provider.image_sds(request);
  check_response(request, response);
  return response;
}

GuidanceResponse video_guidance(GuidanceProvider& provider,
                                const GuidanceRequest& request) {
  check_request(request);
  if (request.frames.size() < 2) {
    throw ProtocolError("video guidance needs at least two frames");
  }
  auto response = provider.video_sds(request);
  check_response(request, response);
  return response;
}

MockProvider::MockProvider(double scale, SdsWeightFn weight)
    : scale_(scale), weight_(std::move(weight)) {}

GuidanceResponse MockProvider::respond(const GuidanceRequest& request) const {
  GuidanceResponse response;
  response.weight = weight_(request.timestep);
  for (std::size_t k = 0; k < request.frames.size(); ++k) {
    std::vector<double> g(request.frames[k].pixel_count(), 0.0);
    if (scale_ != 0.0) {
      std::mt19937_64 rng(derive_seed(request.seed, {k}));
      std::normal_distribution<double> gauss(0.0, scale_);
      for (double& v : g) v = response.weight * gauss(rng);
    }
    response.grads.push_back(std::move(g));
  }
  return response;
}

GuidanceResponse MockProvider::image_sds(const GuidanceRequest& request) {
  return respond(request);
}

GuidanceResponse MockProvider::video_sds(const GuidanceRequest& request) {
  return respond(request);
}

TargetImageProvider::TargetImageProvider(
    std::map<std::string, RasterImage> targets, SdsWeightFn weight)
    : targets_(std::move(targets)), weight_(std::move(weight)) {}

GuidanceResponse TargetImageProvider::image_sds(
    const GuidanceRequest& request) {
  const auto it = targets_.find(request.view);
  if (it == targets_.end()) {
    throw ProtocolError("no target image for view '" + request.view + "'");
  }
  GuidanceResponse response;
  response.weight = weight_(request.timestep);
  for (const auto& frame : request.frames) {
    response.grads.push_back(residual(frame, it->second, response.weight));
  }
  return response;
}

GuidanceResponse TargetImageProvider::video_sds(const GuidanceRequest&) {
  throw ProtocolError("target-image provider does not serve video guidance");
}

TargetVideoProvider::TargetVideoProvider(
    std::map<std::string, std::vector<RasterImage>> targets,
    SdsWeightFn weight)
    : targets_(std::move(targets)), weight_(std::move(weight)) {}

GuidanceResponse TargetVideoProvider::image_sds(const GuidanceRequest&) {
  throw ProtocolError("target-video provider does not serve image guidance");
}

GuidanceResponse TargetVideoProvider::video_sds(
    const GuidanceRequest& request) {
  const auto it = targets_.find(request.view);
  if (it == targets_.end()) {
    throw ProtocolError("no target sequence for view '" + request.view + "'");
  }
  if (it->second.size() != request.frames.size()) {
    throw ProtocolError("target sequence for '" + request.view + "' has " +
                        std::to_string(it->second.size()) + " frames, got " +
                        std::to_string(request.frames.size()));
  }
  GuidanceResponse response;
  response.weight = weight_(request.timestep);
  for (std::size_t k = 0; k < request.frames.size(); ++k) {
    response.grads.push_back(
        residual(request.frames[k], it->second[k], response.weight));
  }
  return response;
}

double l2_distance(const RasterImage& a, const RasterImage& b) {
  if (a.pixel_count() != b.pixel_count()) {
    throw ShapeError("images differ in size");
  }
  double sum = 0.0;
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    const double d = a.intensity[p] - b.intensity[p];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double rms(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum / double(values.size()));
}

}  // namespace sketchanim
