#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace sketchanim {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  /// One bias-corrected Adam update of `params` in place. Throws ShapeError
  /// if the sizes disagree.
  void update(std::span<double> params, std::span<const double> grads,
              double lr);
};

/// Binary checkpoint: magic "SKADAM01", u64 step, u64 tag, u64 n, then n m
/// values and n v values, all little-endian float64. `tag` carries the next
/// iteration index for resumable runs.
void write_adam(const std::filesystem::path& path, const AdamState& state,
                std::uint64_t tag);
AdamState read_adam(const std::filesystem::path& path, std::uint64_t* tag);

}  // namespace sketchanim
