#include "sketchanim/stage1.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <future>
#include <random>
#include <sstream>
#include <tuple>

#include "sketchanim/formats.hpp"
#include "sketchanim/seeding.hpp"

namespace sketchanim {

void Stage1Config::validate() const {
  if (iters < 1) throw ConfigError("iters must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(lambda_g >= 0.0)) throw ConfigError("lambda_g must be >= 0");
  if (!(top_view_prob >= 0.0 && top_view_prob <= 1.0)) {
    throw ConfigError("top_view_prob must lie in [0, 1]");
  }
  if (views.empty()) throw ConfigError("views must not be empty");
  if (image_size <= 0) throw ConfigError("image_size must be positive");
  if (!(cfg_scale > 0.0)) throw ConfigError("cfg_scale must be > 0");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  raster.validate();
  schedule().validate();
  for (const auto& v : views) v.validate();
}

TimestepSchedule Stage1Config::schedule() const {
  return {t_min, t_max_start, t_max_end, iters};
}

GeometricLoss geometric_loss(const Sketch3D& sketch) {
  GeometricLoss out;
  out.grad.assign(sketch.curves.size() * kFloatsPerCurve, 0.0);
  if (sketch.curves.empty()) return out;
  const double inv_n = 1.0 / double(sketch.curves.size());

  for (std::size_t i = 0; i < sketch.curves.size(); ++i) {
    const auto& p = sketch.curves[i].control;
    std::array<Point3, 3> seg;
    std::array<double, 3> len;
    std::array<Point3, 3> unit;
    for (int s = 0; s < 3; ++s) {
      seg[s] = p[s + 1] - p[s];
      len[s] = norm(seg[s]);
      unit[s] = len[s] > 0.0 ? seg[s] * (1.0 / len[s]) : Point3{};
    }
    // Joint j sits between segment j-1 and segment j (j = 1, 2).
    for (int j = 1; j <= 2; ++j) {
      const int a = j - 1;
      const int b = j;
      if (!(len[a] > 0.0) || !(len[b] > 0.0)) {
        ++out.degenerate_terms;
        continue;
      }
      const Point3 diff = unit[b] - unit[a];
      out.value += inv_n * dot(diff, diff);
      // d/du_b = 2 diff, d/du_a = -2 diff; du/de = (I - u u^T) / |e|.
      const Point3 g = 2.0 * inv_n * diff;
      const Point3 g_b = (g - unit[b] * dot(unit[b], g)) * (1.0 / len[b]);
      const Point3 g_a = (-g - unit[a] * dot(unit[a], -g)) * (1.0 / len[a]);
      // segment s = p[s+1] - p[s]
      auto add = [&](int point, const Point3& v) {
        out.grad[flat_index(i, point, 0)] += v.x;
        out.grad[flat_index(i, point, 1)] += v.y;
        out.grad[flat_index(i, point, 2)] += v.z;
      };
      add(b + 1, g_b);
      add(b, -g_b);
      add(a + 1, g_a);
      add(a, -g_a);
    }
  }
  return out;
}

namespace {

struct ViewJob {
  Viewpoint vp;
  std::string name;
  std::uint64_t key = 0;
};

std::string view_name(const Viewpoint& vp) {
  if (vp.kind != ViewKind::custom) return std::string(to_string(vp.kind));
  std::ostringstream os;
  os << "custom_" << vp.azimuth_deg << "_" << vp.elevation_deg;
  return os.str();
}

ViewJob make_job(Viewpoint vp, int image_size) {
  vp.image_size = image_size;
  ViewJob job{vp, view_name(vp), 0};
  job.key = derive_seed(std::bit_cast<std::uint64_t>(vp.azimuth_deg),
                        {std::bit_cast<std::uint64_t>(vp.elevation_deg),
                         std::bit_cast<std::uint64_t>(vp.distance),
                         std::bit_cast<std::uint64_t>(vp.fov_deg)});
  return job;
}

bool job_order(const ViewJob& a, const ViewJob& b) {
  return std::tie(a.vp.azimuth_deg, a.vp.elevation_deg, a.vp.distance,
                  a.vp.fov_deg) < std::tie(b.vp.azimuth_deg,
                                           b.vp.elevation_deg, b.vp.distance,
                                           b.vp.fov_deg);
}

struct ViewOutcome {
  std::vector<double> grad;
  double sds_rms = 0.0;
};

}  // namespace

Stage1Result optimize_structure(const Sketch3D& init,
                                GuidanceProvider& provider,
                                const Stage1Config& config,
                                const Stage1Resume* resume) {
  config.validate();
  validate(init);

  Stage1Result result;
  result.sketch = resume ? resume->sketch : init;
  std::vector<double> params = as_flat_parameters(result.sketch);
  result.adam = resume ? resume->adam : AdamState(params.size());
  if (result.adam.m.size() != params.size()) {
    throw ShapeError("resume state does not match the sketch size");
  }
  const int first_iter = resume ? resume->next_iter : 0;
  const auto schedule = config.schedule();

  std::vector<ViewJob> base_jobs;
  for (const auto& vp : config.views) {
    base_jobs.push_back(make_job(vp, config.image_size));
  }
  const ViewJob top_job = make_job(
      Viewpoint::canonical(ViewKind::top, kDefaultCameraDistance,
                           kDefaultFovDeg),
      config.image_size);

  for (int iter = first_iter; iter < config.iters; ++iter) {
    std::mt19937_64 rng(derive_seed(config.seed, {std::uint64_t(iter)}));
    const double t = sample_timestep(schedule, iter, rng);
    std::bernoulli_distribution top_coin(config.top_view_prob);
    std::vector<ViewJob> jobs = base_jobs;
    if (top_coin(rng)) jobs.push_back(top_job);
    std::stable_sort(jobs.begin(), jobs.end(), job_order);

    const Sketch3D current = from_flat_parameters(params, &result.sketch);
    std::vector<std::future<ViewOutcome>> pending;
    pending.reserve(jobs.size());
    for (const auto& job : jobs) {
      pending.push_back(std::async(std::launch::async, [&, job] {
        const auto render = render_view(current, job.vp, config.raster);
        GuidanceRequest request;
        request.frames = {render.image};
        request.prompt.base_prompt = config.prompt;
        if (job.vp.kind != ViewKind::custom) request.prompt.view_tag = job.vp.kind;
        request.prompt.cfg_scale = config.cfg_scale;
        request.timestep = t;
        request.seed =
            derive_seed(config.seed, {std::uint64_t(iter), job.key});
        request.view = job.name;
        const auto response = image_guidance(provider, request);
        return ViewOutcome{backward(render.tape, response.grads.front()),
                           rms(response.grads.front())};
      }));
    }

    std::vector<ViewOutcome> outcomes;
    std::exception_ptr failure;
    for (auto& f : pending) {
      try {
        outcomes.push_back(f.get());
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) {
      std::filesystem::path ckpt;
      if (!config.checkpoint_dir.empty()) {
        ckpt = config.checkpoint_dir;
        write_stage1_checkpoint(ckpt, current, result.adam, iter);
      }
      try {
        std::rethrow_exception(failure);
      } catch (const TransportError& e) {
        throw StageAborted(std::string("structure optimization aborted at iteration ") +
                               std::to_string(iter) + ": " + e.what(),
                           ckpt);
      } catch (const ProtocolError& e) {
        throw StageAborted(std::string("structure optimization aborted at iteration ") +
                               std::to_string(iter) + ": " + e.what(),
                           ckpt);
      }
    }

    Stage1TraceRow row;
    row.iter = iter;
    row.t = t;
    std::vector<double> total(params.size(), 0.0);
    for (std::size_t v = 0; v < jobs.size(); ++v) {
      for (std::size_t k = 0; k < total.size(); ++k) {
        total[k] += outcomes[v].grad[k];
      }
      row.sds.emplace_back(jobs[v].name, outcomes[v].sds_rms);
    }
    const auto geo = geometric_loss(current);
    result.degenerate_terms += geo.degenerate_terms;
    row.geometric = geo.value;
    if (config.lambda_g != 0.0) {
      for (std::size_t k = 0; k < total.size(); ++k) {
        total[k] += config.lambda_g * geo.grad[k];
      }
    }
    for (double g : total) {
      if (!std::isfinite(g)) {
        throw Error("non-finite gradient at iteration " + std::to_string(iter));
      }
    }
    result.adam.update(params, total, config.lr);
    result.trace.push_back(std::move(row));

    if (!config.checkpoint_dir.empty() &&
        (iter + 1) % config.checkpoint_every == 0) {
      write_stage1_checkpoint(config.checkpoint_dir,
                              from_flat_parameters(params, &result.sketch),
                              result.adam, iter + 1);
    }
  }

  result.sketch = from_flat_parameters(params, &result.sketch);
  return result;
}

void write_stage1_checkpoint(const std::filesystem::path& dir,
                             const Sketch3D& sketch, const AdamState& adam,
                             int next_iter) {
  std::filesystem::create_directories(dir);
  write_sketch(dir / "stage1_sketch.json", sketch);
  write_adam(dir / "stage1_adam.bin", adam, std::uint64_t(next_iter));
}

Stage1Resume read_stage1_checkpoint(const std::filesystem::path& dir) {
  Stage1Resume resume;
  resume.sketch = read_sketch(dir / "stage1_sketch.json");
  std::uint64_t tag = 0;
  resume.adam = read_adam(dir / "stage1_adam.bin", &tag);
  resume.next_iter = static_cast<int>(tag);
  return resume;
}

}  // namespace sketchanim
