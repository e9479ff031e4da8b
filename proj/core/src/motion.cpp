#include "sketchanim/motion.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <numbers>
#include <random>

#include "sketchanim/error.hpp"
#include "sketchanim/seeding.hpp"

namespace sketchanim {

DisplacementField::DisplacementField(int frames, int curves)
    : frames_(frames),
      curves_(curves),
      offsets_(std::size_t(frames) * curves * 4) {
  if (frames < 1 || curves < 1) {
    throw ShapeError("displacement field needs >= 1 frame and >= 1 curve");
  }
}

Sketch3D DisplacementField::apply(const Sketch3D& base, int k) const {
  if (int(base.curves.size()) != curves_) {
    throw ShapeError("field has " + std::to_string(curves_) +
                     " curves, sketch has " +
                     std::to_string(base.curves.size()));
  }
  if (k < 0 || k >= frames_) throw ShapeError("frame index out of range");
  Sketch3D out = base;
  for (int i = 0; i < curves_; ++i) {
    for (int j = 0; j < 4; ++j) out.curves[i].control[j] += at(k, i, j);
  }
  return out;
}

FlatViewVector flatten_view(const Sketch3D& sketch, Plane plane) {
  FlatViewVector out{plane, std::vector<double>(sketch.curves.size() * 8)};
  for (std::size_t i = 0; i < sketch.curves.size(); ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const auto ab = ortho_project(plane, sketch.curves[i].control[j]);
      out.values[flat_view_index(i, j)] = ab[0];
      out.values[flat_view_index(i, j) + 1] = ab[1];
    }
  }
  return out;
}

FlatViewVector flatten_delta(const DisplacementField& field, int k,
                             Plane plane) {
  FlatViewVector out{plane, std::vector<double>(std::size_t(field.curves()) * 8)};
  for (int i = 0; i < field.curves(); ++i) {
    for (int j = 0; j < 4; ++j) {
      const auto ab = ortho_project(plane, field.at(k, i, j));
      out.values[flat_view_index(i, j)] = ab[0];
      out.values[flat_view_index(i, j) + 1] = ab[1];
    }
  }
  return out;
}

DisplacementField reconstruct_3d(std::span<const FlatViewVector> front,
                                 std::span<const FlatViewVector> side) {
  if (front.empty() || front.size() != side.size()) {
    throw ShapeError("front and side sequences need the same non-zero length");
  }
  const std::size_t len = front.front().values.size();
  if (len == 0 || len % 8 != 0) {
    throw ShapeError("flat view vectors must hold 8 values per curve");
  }
  for (std::size_t k = 0; k < front.size(); ++k) {
    if (front[k].plane != Plane::frontal || side[k].plane != Plane::sagittal) {
      throw ShapeError("reconstruct_3d expects frontal then sagittal vectors");
    }
    if (front[k].values.size() != len || side[k].values.size() != len) {
      throw ShapeError("flat view vectors differ in length at frame " +
                       std::to_string(k));
    }
  }
  const int curves = static_cast<int>(len / 8);
  DisplacementField field(static_cast<int>(front.size()), curves);
  for (int k = 0; k < field.frames(); ++k) {
    const auto& f = front[k].values;
    const auto& s = side[k].values;
    for (int i = 0; i < curves; ++i) {
      for (int j = 0; j < 4; ++j) {
        const std::size_t m = flat_view_index(i, j);
        field.at(k, i, j) = {f[m], (f[m + 1] + s[m]) / 2.0, s[m + 1]};
      }
    }
  }
  return field;
}

void reconstruct_3d_backward(const DisplacementField& grad_field,
                             std::vector<FlatViewVector>& grad_front,
                             std::vector<FlatViewVector>& grad_side) {
  const std::size_t len = std::size_t(grad_field.curves()) * 8;
  grad_front.assign(grad_field.frames(),
                    FlatViewVector{Plane::frontal, std::vector<double>(len)});
  grad_side.assign(grad_field.frames(),
                   FlatViewVector{Plane::sagittal, std::vector<double>(len)});
  for (int k = 0; k < grad_field.frames(); ++k) {
    auto& f = grad_front[k].values;
    auto& s = grad_side[k].values;
    for (int i = 0; i < grad_field.curves(); ++i) {
      for (int j = 0; j < 4; ++j) {
        const std::size_t m = flat_view_index(i, j);
        const Point3& g = grad_field.at(k, i, j);
        f[m] = g.x;
        f[m + 1] = 0.5 * g.y;
        s[m] = 0.5 * g.y;
        s[m + 1] = g.z;
      }
    }
  }
}

SmoothnessLoss smoothness_loss(const DisplacementField& field) {
  if (field.frames() < 2) {
    throw ConfigError("smoothness loss needs at least two frames");
  }
  SmoothnessLoss out{0.0, DisplacementField(field.frames(), field.curves())};
  for (int k = 0; k + 1 < field.frames(); ++k) {
    for (int i = 0; i < field.curves(); ++i) {
      for (int j = 0; j < 4; ++j) {
        const Point3 d = field.at(k + 1, i, j) - field.at(k, i, j);
        out.value += dot(d, d);
        out.grad.at(k + 1, i, j) += 2.0 * d;
        out.grad.at(k, i, j) -= 2.0 * d;
      }
    }
  }
  return out;
}

double motion_amplitude(int iter, int total, double beta) {
  if (total < 1 || iter < 0 || iter > total) {
    throw ConfigError("motion_amplitude needs 0 <= iter <= total, total >= 1");
  }
  return 1.0 - std::exp(-beta * double(iter) / double(total));
}

// ---------------------------------------------------------------------------
// MotionModel

MotionModel::MotionModel(int curves, const MotionModelOptions& options)
    : curves_(curves), options_(options) {
  if (curves < 1) throw ShapeError("motion model needs at least one curve");
  if (options.hidden < 1 || options.frequencies < 0) {
    throw ConfigError("motion model needs hidden >= 1 and frequencies >= 0");
  }
  const std::size_t h = options.hidden;
  output_size_ = std::size_t(curves) * 8;
  input_size_ = output_size_ + 2 * std::size_t(options.frequencies) + 2;
  w1_ = 0;
  b1_ = w1_ + h * input_size_;
  w2_ = b1_ + h;
  b2_ = w2_ + h * h;
  w3_ = b2_ + h;
  b3_ = w3_ + output_size_ * h;
  emb_ = b3_ + output_size_;
  params_.assign(emb_ + 4, 0.0);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> g1(0.0, 1.0 / std::sqrt(double(input_size_)));
  std::normal_distribution<double> g2(0.0, 1.0 / std::sqrt(double(h)));
  std::normal_distribution<double> ge(0.0, 1.0);
  for (std::size_t k = w1_; k < b1_; ++k) params_[k] = g1(rng);
  for (std::size_t k = w2_; k < b2_; ++k) params_[k] = g2(rng);
  for (std::size_t k = emb_; k < emb_ + 4; ++k) params_[k] = ge(rng);
  // W3 and b3 stay zero.
}

std::vector<double> MotionModel::encode_input(const FlatViewVector& base,
                                              int k, int frames) const {
  if (base.values.size() != output_size_) {
    throw ShapeError("flat view vector length does not match the model");
  }
  if (frames < 1 || k < 0 || k >= frames) {
    throw ShapeError("frame index out of range");
  }
  std::vector<double> x(input_size_);
  std::copy(base.values.begin(), base.values.end(), x.begin());
  const double phase = double(k) / double(frames);
  std::size_t at = output_size_;
  for (int f = 0; f < options_.frequencies; ++f) {
    const double a = std::ldexp(std::numbers::pi * phase, f);
    x[at++] = std::sin(a);
    x[at++] = std::cos(a);
  }
  const std::size_t e = emb_ + (base.plane == Plane::frontal ? 0 : 2);
  x[at++] = params_[e];
  x[at++] = params_[e + 1];
  return x;
}

namespace {

// y = W x + b with W row-major (rows x cols).
void affine(std::span<const double> w, std::span<const double> b,
            std::span<const double> x, std::span<double> y) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < y.size(); ++r) {
    const double* row = w.data() + r * cols;
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

}  // namespace

std::vector<double> MotionModel::forward(const FlatViewVector& base, int k,
                                         int frames, Cache* cache) const {
  const std::size_t h = options_.hidden;
  std::span<const double> p(params_);
  auto x = encode_input(base, k, frames);
  std::vector<double> h1(h), h2(h), y(output_size_);
  affine(p.subspan(w1_, h * input_size_), p.subspan(b1_, h), x, h1);
  for (auto& v : h1) v = std::tanh(v);
  affine(p.subspan(w2_, h * h), p.subspan(b2_, h), h1, h2);
  for (auto& v : h2) v = std::tanh(v);
  affine(p.subspan(w3_, output_size_ * h), p.subspan(b3_, output_size_), h2, y);
  if (cache != nullptr) {
    cache->plane = base.plane;
    cache->input = std::move(x);
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
  }
  return y;
}

void MotionModel::backward(const Cache& cache,
                           std::span<const double> grad_output,
                           std::span<double> grad) const {
  if (grad_output.size() != output_size_ || grad.size() != params_.size()) {
    throw ShapeError("motion model backward received mismatched buffers");
  }
  const std::size_t h = options_.hidden;
  const double* w2 = params_.data() + w2_;
  const double* w3 = params_.data() + w3_;
  const double* w1 = params_.data() + w1_;

  std::vector<double> g2(h, 0.0);
  for (std::size_t r = 0; r < output_size_; ++r) {
    const double gy = grad_output[r];
    if (gy == 0.0) continue;
    grad[b3_ + r] += gy;
    double* gw = grad.data() + w3_ + r * h;
    const double* row = w3 + r * h;
    for (std::size_t c = 0; c < h; ++c) {
      gw[c] += gy * cache.h2[c];
      g2[c] += gy * row[c];
    }
  }
  for (std::size_t c = 0; c < h; ++c) g2[c] *= 1.0 - cache.h2[c] * cache.h2[c];

  std::vector<double> g1(h, 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    const double ga = g2[r];
    if (ga == 0.0) continue;
    grad[b2_ + r] += ga;
    double* gw = grad.data() + w2_ + r * h;
    const double* row = w2 + r * h;
    for (std::size_t c = 0; c < h; ++c) {
      gw[c] += ga * cache.h1[c];
      g1[c] += ga * row[c];
    }
  }
  for (std::size_t c = 0; c < h; ++c) g1[c] *= 1.0 - cache.h1[c] * cache.h1[c];

  const std::size_t e = emb_ + (cache.plane == Plane::frontal ? 0 : 2);
  const std::size_t emb_col = input_size_ - 2;
  for (std::size_t r = 0; r < h; ++r) {
    const double ga = g1[r];
    if (ga == 0.0) continue;
    grad[b1_ + r] += ga;
    double* gw = grad.data() + w1_ + r * input_size_;
    for (std::size_t c = 0; c < input_size_; ++c) gw[c] += ga * cache.input[c];
    const double* row = w1 + r * input_size_;
    grad[e] += ga * row[emb_col];
    grad[e + 1] += ga * row[emb_col + 1];
  }
}

namespace {

constexpr char kModelMagic[8] = {'S', 'K', 'M', 'L', 'P', '0', '0', '1'};

}  // namespace

void MotionModel::save(const std::filesystem::path& path) const {
  static_assert(std::endian::native == std::endian::little);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kModelMagic, sizeof(kModelMagic));
  const std::uint64_t header[4] = {std::uint64_t(curves_),
                                   std::uint64_t(options_.hidden),
                                   std::uint64_t(options_.frequencies),
                                   params_.size()};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(params_.data()),
            std::streamsize(params_.size() * sizeof(double)));
  if (!out) throw IoError("failed writing " + path.string());
}

void MotionModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[8];
  std::uint64_t header[4];
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw IoError(path.string() + " is not a motion model file");
  }
  if (header[0] != std::uint64_t(curves_) ||
      header[1] != std::uint64_t(options_.hidden) ||
      header[2] != std::uint64_t(options_.frequencies) ||
      header[3] != params_.size()) {
    throw ShapeError("motion model file does not match this architecture");
  }
  in.read(reinterpret_cast<char*>(params_.data()),
          std::streamsize(params_.size() * sizeof(double)));
  if (!in) throw IoError("truncated motion model file");
}

// ---------------------------------------------------------------------------
// Optimization

void Stage2Config::validate() const {
  if (iters < 1) throw ConfigError("iters must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (frames < 2) throw ConfigError("frames must be >= 2");
  if (!(lambda_s > 0.0)) throw ConfigError("lambda_s must be > 0");
  if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
  if (!(cfg_scale > 0.0)) throw ConfigError("cfg_scale must be > 0");
  if (frame_size <= 0) throw ConfigError("frame_size must be positive");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  raster.validate();
  schedule().validate();
}

TimestepSchedule Stage2Config::schedule() const {
  return {t_min, t_max_start, t_max_end, iters};
}

DisplacementField predict_field(const MotionModel& model, const Sketch3D& base,
                                int frames, double alpha) {
  const auto base_front = flatten_view(base, Plane::frontal);
  const auto base_side = flatten_view(base, Plane::sagittal);
  const std::size_t len = base_front.values.size();
  std::vector<FlatViewVector> front(
      frames, FlatViewVector{Plane::frontal, std::vector<double>(len)});
  std::vector<FlatViewVector> side(
      frames, FlatViewVector{Plane::sagittal, std::vector<double>(len)});
  for (int k = 1; k < frames; ++k) {
    front[k].values = model.forward(base_front, k, frames);
    side[k].values = model.forward(base_side, k, frames);
    for (auto& v : front[k].values) v *= alpha;
    for (auto& v : side[k].values) v *= alpha;
  }
  return reconstruct_3d(front, side);
}

RasterResult render_frame(const Sketch3D& base, const DisplacementField& field,
                          int k, Plane plane, int image_size,
                          const RasterOptions& options) {
  return render_ortho(field.apply(base, k), OrthoFrame{plane, image_size},
                      options);
}

namespace {

struct PlaneOutcome {
  std::vector<std::vector<double>> frame_grads;  // flat 3D per frame
  double sds_rms = 0.0;
};

}  // namespace

Stage2Result optimize_motion(const Sketch3D& base, MotionModel& model,
                             GuidanceProvider& provider,
                             const Stage2Config& config,
                             const Stage2Resume* resume) {
  config.validate();
  validate(base);
  if (model.curves() != int(base.curves.size())) {
    throw ShapeError("motion model was built for " +
                     std::to_string(model.curves()) + " curves, sketch has " +
                     std::to_string(base.curves.size()));
  }
  const int K = config.frames;
  const int N = model.curves();
  const auto schedule = config.schedule();
  const std::array<FlatViewVector, 2> base_views = {
      flatten_view(base, Plane::frontal), flatten_view(base, Plane::sagittal)};
  const std::array<Plane, 2> planes = {Plane::frontal, Plane::sagittal};

  Stage2Result result;
  result.adam = resume ? resume->adam : AdamState(model.parameter_count());
  if (result.adam.m.size() != model.parameter_count()) {
    throw ShapeError("resume state does not match the motion model");
  }
  const int first_iter = resume ? resume->next_iter : 0;
  std::vector<double> param_grad(model.parameter_count());

  for (int iter = first_iter; iter < config.iters; ++iter) {
    std::mt19937_64 rng(derive_seed(config.seed, {std::uint64_t(iter)}));
    const double t = sample_timestep(schedule, iter, rng);
    const double alpha = motion_amplitude(iter, config.iters, config.beta);

    // Forward: per-plane flat displacements, frame 0 pinned to zero.
    std::array<std::vector<FlatViewVector>, 2> deltas;
    std::array<std::vector<MotionModel::Cache>, 2> caches;
    for (int p = 0; p < 2; ++p) {
      deltas[p].assign(K, FlatViewVector{planes[p], std::vector<double>(
                                                        base_views[p].values.size())});
      caches[p].resize(K);
      for (int k = 1; k < K; ++k) {
        deltas[p][k].values = model.forward(base_views[p], k, K, &caches[p][k]);
        for (auto& v : deltas[p][k].values) v *= alpha;
      }
    }
    const DisplacementField field = reconstruct_3d(deltas[0], deltas[1]);

    std::array<std::future<PlaneOutcome>, 2> pending;
    for (int p = 0; p < 2; ++p) {
      pending[p] = std::async(std::launch::async, [&, p] {
        std::vector<RasterResult> renders;
        GuidanceRequest request;
        for (int k = 0; k < K; ++k) {
          renders.push_back(render_frame(base, field, k, planes[p],
                                         config.frame_size, config.raster));
          request.frames.push_back(renders.back().image);
        }
        request.prompt.base_prompt = config.prompt;
        request.prompt.motion_prompt = config.motion_prompt;
        request.prompt.cfg_scale = config.cfg_scale;
        request.timestep = t;
        request.seed = derive_seed(config.seed,
                                   {std::uint64_t(iter), std::uint64_t(p + 1)});
        request.view = std::string(to_string(planes[p]));
        const auto response = video_guidance(provider, request);
        PlaneOutcome out;
        double sq = 0.0;
        std::size_t count = 0;
        for (int k = 0; k < K; ++k) {
          out.frame_grads.push_back(backward(renders[k].tape, response.grads[k]));
          for (double g : response.grads[k]) sq += g * g;
          count += response.grads[k].size();
        }
        out.sds_rms = count ? std::sqrt(sq / double(count)) : 0.0;
        return out;
      });
    }
    std::array<PlaneOutcome, 2> outcomes;
    std::exception_ptr failure;
    for (int p = 0; p < 2; ++p) {
      try {
        outcomes[p] = pending[p].get();
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) {
      std::filesystem::path ckpt;
      if (!config.checkpoint_dir.empty()) {
        ckpt = config.checkpoint_dir;
        write_stage2_checkpoint(ckpt, model, result.adam, iter);
      }
      try {
        std::rethrow_exception(failure);
      } catch (const TransportError& e) {
        throw StageAborted("motion optimization aborted at iteration " +
                               std::to_string(iter) + ": " + e.what(),
                           ckpt);
      } catch (const ProtocolError& e) {
        throw StageAborted("motion optimization aborted at iteration " +
                               std::to_string(iter) + ": " + e.what(),
                           ckpt);
      }
    }

    // dL/d(field): guidance from both planes plus smoothness.
    const auto smooth = smoothness_loss(field);
    DisplacementField grad_field(K, N);
    for (int k = 0; k < K; ++k) {
      for (int i = 0; i < N; ++i) {
        for (int j = 0; j < 4; ++j) {
          Point3 g = config.lambda_s * smooth.grad.at(k, i, j);
          for (int p = 0; p < 2; ++p) {
            const auto& fg = outcomes[p].frame_grads[k];
            g += Point3{fg[flat_index(i, j, 0)], fg[flat_index(i, j, 1)],
                        fg[flat_index(i, j, 2)]};
          }
          grad_field.at(k, i, j) = g;
        }
      }
    }
    std::vector<FlatViewVector> grad_front, grad_side;
    reconstruct_3d_backward(grad_field, grad_front, grad_side);
    const std::array<const std::vector<FlatViewVector>*, 2> grad_planes = {
        &grad_front, &grad_side};

    std::fill(param_grad.begin(), param_grad.end(), 0.0);
    if (alpha != 0.0) {
      std::vector<double> g_out;
      for (int p = 0; p < 2; ++p) {
        for (int k = 1; k < K; ++k) {
          g_out = (*grad_planes[p])[k].values;
          for (auto& v : g_out) v *= alpha;
          model.backward(caches[p][k], g_out, param_grad);
        }
      }
    }
    for (double g : param_grad) {
      if (!std::isfinite(g)) {
        throw Error("non-finite gradient at motion iteration " +
                    std::to_string(iter));
      }
    }
    result.adam.update(model.parameters(), param_grad, config.lr);
    result.trace.push_back({iter, t, alpha, outcomes[0].sds_rms,
                            outcomes[1].sds_rms, smooth.value});

    if (!config.checkpoint_dir.empty() &&
        (iter + 1) % config.checkpoint_every == 0) {
      write_stage2_checkpoint(config.checkpoint_dir, model, result.adam,
                              iter + 1);
    }
  }

  result.field = predict_field(
      model, base, K, motion_amplitude(config.iters, config.iters, config.beta));
  return result;
}

void write_stage2_checkpoint(const std::filesystem::path& dir,
                             const MotionModel& model, const AdamState& adam,
                             int next_iter) {
  std::filesystem::create_directories(dir);
  model.save(dir / "stage2_model.bin");
  write_adam(dir / "stage2_adam.bin", adam, std::uint64_t(next_iter));
}

Stage2Resume read_stage2_checkpoint(const std::filesystem::path& dir,
                                    MotionModel& model) {
  model.load(dir / "stage2_model.bin");
  Stage2Resume resume;
  std::uint64_t tag = 0;
  resume.adam = read_adam(dir / "stage2_adam.bin", &tag);
  resume.next_iter = static_cast<int>(tag);
  return resume;
}

}  // namespace sketchanim
