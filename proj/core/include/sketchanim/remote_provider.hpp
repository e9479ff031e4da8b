#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sketchanim/guidance.hpp"

namespace sketchanim {

// Wire format shared with the guidance service.
//
//   POST /v1/image_sds  {"prompt", "cfg", "t", "seed", "image"}
//                       -> {"grad", "weight"}
//   POST /v1/video_sds  {"prompt", "cfg", "t", "seed", "frames": [image...]}
//                       -> {"grads": [image...], "weight"}
//   GET  /v1/health     -> {"status", "image_model", "video_model"}
//
// An image is {"h": int, "w": int, "data": base64(float32 LE, row-major)}.
namespace wire {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ProtocolError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

struct WireImage {
  int h = 0;
  int w = 0;
  std::vector<double> data;  // values are float32-rounded
};

struct WireRequest {
  std::string prompt;
  double cfg = 0.0;
  double t = 0.0;
  std::uint64_t seed = 0;
  std::vector<WireImage> frames;  // a single entry for image requests
};

struct HealthInfo {
  std::string status;
  std::string image_model;
  std::string video_model;
};

std::string encode_image_request(const GuidanceRequest& request);
std::string encode_video_request(const GuidanceRequest& request);
/// Parses either request shape; throws ProtocolError on schema violations.
WireRequest decode_request(std::string_view body, bool video);

std::string encode_response(const GuidanceResponse& response, int h, int w,
                            bool video);
/// Parses a response and checks it against the request frames.
GuidanceResponse decode_response(std::string_view body,
                                 const GuidanceRequest& request, bool video);

std::string encode_health(const HealthInfo& health);
HealthInfo decode_health(std::string_view body);

}  // namespace wire

struct RemoteOptions {
  int max_attempts = 3;
  int connect_timeout_s = 10;
  int read_timeout_s = 600;
  // Wait before retry n is n * retry_backoff_ms.
  int retry_backoff_ms = 500;
};

/// HTTP client for the guidance service. Requests are idempotent (the seed
/// fixes the noise), so transport failures are retried as-is.
class RemoteProvider : public GuidanceProvider {
 public:
  /// `url` is scheme://host[:port], e.g. http://127.0.0.1:8000.
  explicit RemoteProvider(std::string url, RemoteOptions options = {});

  std::string name() const override { return "remote:" + url_; }
  GuidanceResponse image_sds(const GuidanceRequest& request) override;
  GuidanceResponse video_sds(const GuidanceRequest& request) override;

  /// Throws TransportError when the service is unreachable or not ready.
  wire::HealthInfo health() const;

 private:
  std::string post(const std::string& path, const std::string& body) const;

  std::string url_;
  RemoteOptions options_;
};

}  // namespace sketchanim
