#include "sketchanim/adam.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sketchanim/error.hpp"

namespace sketchanim {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

void AdamState::update(std::span<double> params, std::span<const double> grads,
                       double lr) {
  if (params.size() != m.size() || grads.size() != m.size()) {
    throw ShapeError("Adam state has " + std::to_string(m.size()) +
                     " slots, got " + std::to_string(params.size()) +
                     " params and " + std::to_string(grads.size()) + " grads");
  }
  ++step;
  const double c1 = 1.0 - std::pow(beta1, double(step));
  const double c2 = 1.0 - std::pow(beta2, double(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

namespace {

constexpr char kMagic[8] = {'S', 'K', 'A', 'D', 'A', 'M', '0', '1'};

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated Adam checkpoint");
  return value;
}

}  // namespace

void write_adam(const std::filesystem::path& path, const AdamState& state,
                std::uint64_t tag) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, state.step);
  put<std::uint64_t>(out, tag);
  put<std::uint64_t>(out, state.m.size());
  for (double x : state.m) put(out, x);
  for (double x : state.v) put(out, x);
  if (!out) throw IoError("failed writing " + path.string());
}

AdamState read_adam(const std::filesystem::path& path, std::uint64_t* tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path.string() + " is not an Adam checkpoint");
  }
  AdamState state;
  state.step = get<std::uint64_t>(in);
  const auto t = get<std::uint64_t>(in);
  if (tag != nullptr) *tag = t;
  const auto n = get<std::uint64_t>(in);
  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto remaining = static_cast<std::uint64_t>(in.tellg() - here);
  in.seekg(here);
  if (n > remaining / (2 * sizeof(double))) throw IoError("truncated Adam checkpoint");
  state.m.resize(n);
  state.v.resize(n);
  for (auto& x : state.m) x = get<double>(in);
  for (auto& x : state.v) x = get<double>(in);
  return state;
}

}  // namespace sketchanim
