#pragma once

#include "ddrgs/checkpoint.hpp"

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ddrgs {

inline constexpr int kMaxRenderSide = 1024;

enum class PreviewMode { ldr, hdr_preview };

/// Body of POST /api/render.
///
/// {"extrinsics": [16 numbers, row-major world-to-camera],
///  "exposure_time": seconds (> 0; required for "ldr"),
///  "mode": "ldr" | "hdr_preview",        (default "ldr")
///  "width": int, "height": int}          (default: the scene's image size, at most 1024)
struct RenderRequest {
  Mat4 extrinsics = Mat4::Identity();
  double exposure_time = 1.0;
  PreviewMode mode = PreviewMode::ldr;
  int width = 0;
  int height = 0;
};

struct FieldError {
  std::string field;
  std::string message;
};

/// Either a request or the complete list of problems with the body.
struct ParsedRenderRequest {
  std::optional<RenderRequest> request;
  std::vector<FieldError> errors;
};

/// `default_width` / `default_height` fill absent size fields.
ParsedRenderRequest parse_render_request(const std::string& body, int default_width, int default_height);

/// JSON error document {"error": summary, "fields": [{"field", "message"}...]}.
std::string field_errors_json(const std::string& summary, const std::vector<FieldError>& errors);

/// Caps the number of renders running at once.
class RenderGate {
 public:
  explicit RenderGate(int limit);
  void acquire();
  void release();
  [[nodiscard]] int limit() const { return limit_; }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int limit_;
  int active_ = 0;
};

/// Read-only view of a checkpoint that answers meta and render queries.
/// Thread-safe: the scene is never modified after construction.
class RenderService {
 public:
  /// `max_concurrent` <= 0 picks max(1, hardware threads / 2).
  explicit RenderService(Checkpoint ckpt, int max_concurrent = 0);

  [[nodiscard]] const DdrScene& scene() const { return ckpt_.scene; }
  [[nodiscard]] int image_width() const { return width_; }
  [[nodiscard]] int image_height() const { return height_; }
  [[nodiscard]] int max_concurrent() const { return gate_->limit(); }

  /// {"image_size": {"width", "height"}, "exposure_range": {"min", "max"},
  ///  "n_gaussians", "sh_degree", "fov_y_deg", "presets": [{"id", "extrinsics", "exposure_time"}]}
  [[nodiscard]] std::string meta_json() const;

  /// The camera a request renders with: the training intrinsics rescaled to
  /// the requested size, or a 50 degree field of view when the checkpoint
  /// carries no cameras.
  [[nodiscard]] Camera request_camera(const RenderRequest& req) const;

  /// 8-bit RGB PNG. "ldr" is the tone-mapped render at the exposure;
  /// "hdr_preview" is the mu-law compressed, min-max normalized HDR render.
  [[nodiscard]] std::vector<std::uint8_t> render_png(const RenderRequest& req) const;

 private:
  Checkpoint ckpt_;
  int width_ = 256;
  int height_ = 256;
  std::unique_ptr<RenderGate> gate_;
};

/// Image shown for an hdr_preview request, before quantization.
Image hdr_preview_image(const Image& hdr, double mu = 5000.0);

/// HTTP front end: GET /healthz, GET /api/meta, POST /api/render.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<const RenderService> service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ddrgs
