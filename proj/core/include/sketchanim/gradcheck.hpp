#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sketchanim {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int cases = 50;
  double raster_tolerance = 1e-3;
  double loss_tolerance = 1e-4;
  // Negates the rasterizer's analytic gradient. Used to confirm the check
  // actually detects a broken backward pass.
  bool inject_sign_flip = false;
};

struct GradcheckResult {
  std::string name;
  int cases = 0;
  int components = 0;  // gradient entries compared
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradcheckResult> checks;
  double seconds = 0.0;
  bool passed() const;
  /// One JSON object per line, then a summary line.
  std::string to_jsonl() const;
};

/// Compares every analytic backward pass against central finite differences:
/// rasterizer (through the perspective projection), geometric loss,
/// smoothness loss, displacement reconstruction and the motion network.
///
/// Relative error of one entry is |a - n| / max(|n|, 1e-3 * max|n|) where the
/// max runs over the entries of the same case.
GradcheckReport run_gradcheck(const GradcheckOptions& options = {});

}  // namespace sketchanim
