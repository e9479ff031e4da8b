#include "sketchanim/remote_provider.hpp"

#include <array>
#include <bit>
#include <chrono>
#include <cstring>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "sketchanim/error.hpp"

namespace sketchanim {

namespace wire {

namespace {

using nlohmann::json;

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

static_assert(std::endian::native == std::endian::little,
              "wire encoding assumes a little-endian host");

json encode_image(std::span<const double> values, int h, int w) {
  std::vector<std::uint8_t> bytes(values.size() * sizeof(float));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = static_cast<float>(values[i]);
    std::memcpy(bytes.data() + i * sizeof(float), &f, sizeof(float));
  }
  return json{{"h", h}, {"w", w}, {"data", base64_encode(bytes)}};
}

WireImage decode_image(const json& j) {
  if (!j.is_object() || !j.contains("h") || !j.contains("w") ||
      !j.contains("data") || !j["h"].is_number_integer() ||
      !j["w"].is_number_integer() || !j["data"].is_string()) {
    throw ProtocolError("image must be {\"h\": int, \"w\": int, \"data\": str}");
  }
  WireImage image;
  image.h = j["h"].get<int>();
  image.w = j["w"].get<int>();
  if (image.h <= 0 || image.w <= 0) {
    throw ProtocolError("image dimensions must be positive");
  }
  const auto bytes = base64_decode(j["data"].get<std::string>());
  const std::size_t n = std::size_t(image.h) * image.w;
  if (bytes.size() != n * sizeof(float)) {
    throw ProtocolError("image payload has " + std::to_string(bytes.size()) +
                        " bytes, expected " + std::to_string(n * 4));
  }
  image.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + i * sizeof(float), sizeof(float));
    image.data[i] = f;
  }
  return image;
}

json parse(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
}

json request_header(const GuidanceRequest& request) {
  return json{{"prompt", request.prompt.text()},
              {"cfg", request.prompt.cfg_scale},
              {"t", request.timestep},
              {"seed", request.seed}};
}

std::vector<double> checked_grad(const WireImage& image,
                                 const RasterImage& frame) {
  if (image.h != frame.height || image.w != frame.width) {
    throw ProtocolError("gradient shape does not match the request image");
  }
  return image.data;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (std::uint32_t(bytes[i]) << 16) |
                            (std::uint32_t(bytes[i + 1]) << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i < bytes.size()) {
    std::uint32_t v = std::uint32_t(bytes[i]) << 16;
    if (i + 1 < bytes.size()) v |= std::uint32_t(bytes[i + 1]) << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> lut;
  lut.fill(-1);
  for (int k = 0; k < 64; ++k) lut[static_cast<unsigned char>(kAlphabet[k])] = k;

  if (text.size() % 4 != 0) throw ProtocolError("base64 length not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      int d;
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        ++pad;
        d = 0;
      } else {
        if (pad > 0) throw ProtocolError("base64 padding in the middle");
        d = lut[static_cast<unsigned char>(c)];
        if (d < 0) throw ProtocolError("invalid base64 character");
      }
      v = (v << 6) | std::uint32_t(d);
    }
    out.push_back(std::uint8_t(v >> 16));
    if (pad < 2) out.push_back(std::uint8_t(v >> 8));
    if (pad < 1) out.push_back(std::uint8_t(v));
  }
  return out;
}

std::string encode_image_request(const GuidanceRequest& request) {
  if (request.frames.size() != 1) {
    throw ProtocolError("image request needs exactly one frame");
  }
  json j = request_header(request);
  const auto& f = request.frames.front();
  j["image"] = encode_image(f.intensity, f.height, f.width);
  return j.dump();
}

std::string encode_video_request(const GuidanceRequest& request) {
  json j = request_header(request);
  j["frames"] = json::array();
  for (const auto& f : request.frames) {
    j["frames"].push_back(encode_image(f.intensity, f.height, f.width));
  }
  return j.dump();
}

WireRequest decode_request(std::string_view body, bool video) {
  const json j = parse(body);
  if (!j.is_object() || !j.contains("prompt") || !j["prompt"].is_string() ||
      !j.contains("cfg") || !j["cfg"].is_number() || !j.contains("t") ||
      !j["t"].is_number() || !j.contains("seed") ||
      !j["seed"].is_number_integer()) {
    throw ProtocolError("request needs prompt, cfg, t and seed");
  }
  WireRequest request;
  request.prompt = j["prompt"].get<std::string>();
  request.cfg = j["cfg"].get<double>();
  request.t = j["t"].get<double>();
  request.seed = j["seed"].get<std::uint64_t>();
  if (video) {
    if (!j.contains("frames") || !j["frames"].is_array() ||
        j["frames"].empty()) {
      throw ProtocolError("video request needs a non-empty frames array");
    }
    for (const auto& f : j["frames"]) request.frames.push_back(decode_image(f));
    for (const auto& f : request.frames) {
      if (f.h != request.frames.front().h || f.w != request.frames.front().w) {
        throw ProtocolError("video frames differ in size");
      }
    }
  } else {
    if (!j.contains("image")) throw ProtocolError("image request needs image");
    request.frames.push_back(decode_image(j["image"]));
  }
  return request;
}

std::string encode_response(const GuidanceResponse& response, int h, int w,
                            bool video) {
  json j{{"weight", response.weight}};
  if (video) {
    j["grads"] = json::array();
    for (const auto& g : response.grads) j["grads"].push_back(encode_image(g, h, w));
  } else {
    if (response.grads.size() != 1) {
      throw ProtocolError("image response needs exactly one gradient");
    }
    j["grad"] = encode_image(response.grads.front(), h, w);
  }
  return j.dump();
}

GuidanceResponse decode_response(std::string_view body,
                                 const GuidanceRequest& request, bool video) {
  const json j = parse(body);
  if (!j.is_object() || !j.contains("weight") || !j["weight"].is_number()) {
    throw ProtocolError("response needs a numeric weight");
  }
  GuidanceResponse response;
  response.weight = j["weight"].get<double>();
  if (video) {
    if (!j.contains("grads") || !j["grads"].is_array()) {
      throw ProtocolError("video response needs a grads array");
    }
    if (j["grads"].size() != request.frames.size()) {
      throw ProtocolError("video response frame count mismatch");
    }
    for (std::size_t k = 0; k < request.frames.size(); ++k) {
      response.grads.push_back(
          checked_grad(decode_image(j["grads"][k]), request.frames[k]));
    }
  } else {
    if (!j.contains("grad")) throw ProtocolError("image response needs grad");
    response.grads.push_back(
        checked_grad(decode_image(j["grad"]), request.frames.front()));
  }
  return response;
}

std::string encode_health(const HealthInfo& health) {
  return json{{"status", health.status},
              {"image_model", health.image_model},
              {"video_model", health.video_model}}
      .dump();
}

HealthInfo decode_health(std::string_view body) {
  const json j = parse(body);
  if (!j.is_object() || !j.contains("status") || !j["status"].is_string()) {
    throw ProtocolError("health response needs a status string");
  }
  HealthInfo h;
  h.status = j["status"].get<std::string>();
  h.image_model = j.value("image_model", "");
  h.video_model = j.value("video_model", "");
  return h;
}

}  // namespace wire

RemoteProvider::RemoteProvider(std::string url, RemoteOptions options)
    : url_(std::move(url)), options_(options) {
  if (options_.max_attempts < 1) {
    throw ConfigError("remote provider needs at least one attempt");
  }
}

std::string RemoteProvider::post(const std::string& path,
                                 const std::string& body) const {
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    if (attempt > 0 && options_.retry_backoff_ms > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(attempt * options_.retry_backoff_ms));
    }
    httplib::Client client(url_);
    if (!client.is_valid()) throw ConfigError("invalid provider URL " + url_);
    client.set_connection_timeout(options_.connect_timeout_s, 0);
    client.set_read_timeout(options_.read_timeout_s, 0);
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    throw ProtocolError("provider rejected request to " + path + ": HTTP " +
                        std::to_string(res->status) + " " + res->body);
  }
  throw TransportError("provider " + url_ + path + " unavailable after " +
                       std::to_string(options_.max_attempts) +
                       " attempts: " + last_error);
}

GuidanceResponse RemoteProvider::image_sds(const GuidanceRequest& request) {
  const auto body = post("/v1/image_sds", wire::encode_image_request(request));
  return wire::decode_response(body, request, false);
}

GuidanceResponse RemoteProvider::video_sds(const GuidanceRequest& request) {
  const auto body = post("/v1/video_sds", wire::encode_video_request(request));
  return wire::decode_response(body, request, true);
}

wire::HealthInfo RemoteProvider::health() const {
  httplib::Client client(url_);
  if (!client.is_valid()) throw ConfigError("invalid provider URL " + url_);
  client.set_connection_timeout(options_.connect_timeout_s, 0);
  auto res = client.Get("/v1/health");
  if (!res) {
    throw TransportError("provider " + url_ + " unreachable: " +
                         httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError("provider " + url_ + " not ready: HTTP " +
                         std::to_string(res->status));
  }
  return wire::decode_health(res->body);
}

}  // namespace sketchanim
