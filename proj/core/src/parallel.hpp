#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace sketchanim::detail {

// Splits [0, n) into a fixed number of contiguous chunks and runs fn(chunk,
// begin, end) for each. The chunking depends only on n, so per-chunk results
// reduced in chunk order are identical whether or not threads are used.
template <typename Fn>
void for_each_chunk(std::size_t n, std::size_t chunks, Fn&& fn) {
  chunks = std::max<std::size_t>(1, std::min(chunks, n));
  auto bounds = [&](std::size_t c) {
    return std::pair{n * c / chunks, n * (c + 1) / chunks};
  };
  const unsigned hw = std::thread::hardware_concurrency();
  if (hw <= 1 || chunks == 1 || n < 64) {
    for (std::size_t c = 0; c < chunks; ++c) {
      const auto [b, e] = bounds(c);
      fn(c, b, e);
    }
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    workers.emplace_back([&, c] {
      const auto [b, e] = bounds(c);
      fn(c, b, e);
    });
  }
}

inline constexpr std::size_t kRowChunks = 8;

}  // namespace sketchanim::detail
