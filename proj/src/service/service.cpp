#include "ddrgs/service.hpp"

#include "ddrgs/image_io.hpp"
#include "ddrgs/losses.hpp"
#include "ddrgs/rasterizer.hpp"

#include "httplib.h"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace ddrgs {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Request parsing

namespace {

std::string type_name(const json& v) {
  return v.is_null() ? "null" : std::string(v.type_name());
}

}  // namespace

ParsedRenderRequest parse_render_request(const std::string& body, int default_width, int default_height) {
  ParsedRenderRequest out;
  auto& errors = out.errors;
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    errors.push_back({"<body>", std::string("malformed JSON: ") + e.what()});
    return out;
  }
  if (!j.is_object()) {
    errors.push_back({"<body>", "expected a JSON object, got " + type_name(j)});
    return out;
  }

  static const char* const known[] = {"extrinsics", "exposure_time", "mode", "width", "height"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      errors.push_back({key, "unknown field"});
    }
  }

  RenderRequest req;

  if (!j.contains("mode")) {
    req.mode = PreviewMode::ldr;
  } else if (!j["mode"].is_string()) {
    errors.push_back({"mode", "expected a string, got " + type_name(j["mode"])});
  } else if (j["mode"] == "ldr") {
    req.mode = PreviewMode::ldr;
  } else if (j["mode"] == "hdr_preview") {
    req.mode = PreviewMode::hdr_preview;
  } else {
    errors.push_back({"mode", "must be \"ldr\" or \"hdr_preview\", got \"" + j["mode"].get<std::string>() + "\""});
  }

  bool have_extrinsics = false;
  if (!j.contains("extrinsics")) {
    errors.push_back({"extrinsics", "required"});
  } else if (const json& e = j["extrinsics"]; !e.is_array() || e.size() != 16) {
    errors.push_back({"extrinsics", "expected an array of 16 numbers (row-major 4x4)"});
  } else {
    have_extrinsics = true;
    for (std::size_t k = 0; k < 16; ++k) {
      if (!e[k].is_number()) {
        errors.push_back({"extrinsics[" + std::to_string(k) + "]", "expected a number, got " + type_name(e[k])});
        have_extrinsics = false;
        continue;
      }
      req.extrinsics(static_cast<Eigen::Index>(k / 4), static_cast<Eigen::Index>(k % 4)) = e[k].get<double>();
    }
  }
  if (have_extrinsics) {
    Camera probe;
    probe.extrinsics = req.extrinsics;
    probe.intrinsics = Camera::pinhole(1.0, 1.0, 0.5, 0.5);
    probe.width = probe.height = 1;
    probe.id = "request";
    try {
      probe.validate();
    } catch (const DomainError& ex) {
      std::string msg = ex.what();
      const auto colon = msg.find(": ");
      errors.push_back({"extrinsics", colon == std::string::npos ? msg : msg.substr(colon + 2)});
    }
  }

  if (!j.contains("exposure_time")) {
    if (req.mode == PreviewMode::ldr) errors.push_back({"exposure_time", "required for mode \"ldr\""});
  } else if (!j["exposure_time"].is_number()) {
    errors.push_back({"exposure_time", "expected a number, got " + type_name(j["exposure_time"])});
  } else {
    req.exposure_time = j["exposure_time"].get<double>();
    if (!(req.exposure_time > 0.0) || !std::isfinite(req.exposure_time)) {
      errors.push_back({"exposure_time", "must be a finite number of seconds > 0"});
    }
  }

  const auto size_field = [&](const char* name, int fallback, int& dst) {
    if (!j.contains(name)) {
      dst = std::clamp(fallback, 1, kMaxRenderSide);
      return;
    }
    const json& v = j[name];
    if (!v.is_number_integer()) {
      errors.push_back({name, "expected an integer, got " + type_name(v)});
      return;
    }
    const auto n = v.get<long long>();
    if (n < 1 || n > kMaxRenderSide) {
      errors.push_back({name, "must be in [1, " + std::to_string(kMaxRenderSide) + "], got " + std::to_string(n)});
      return;
    }
    dst = static_cast<int>(n);
  };
  size_field("width", default_width, req.width);
  size_field("height", default_height, req.height);

  if (errors.empty()) out.request = req;
  return out;
}

std::string field_errors_json(const std::string& summary, const std::vector<FieldError>& errors) {
  json fields = json::array();
  for (const auto& e : errors) fields.push_back({{"field", e.field}, {"message", e.message}});
  return json{{"error", summary}, {"fields", fields}}.dump();
}

// ---------------------------------------------------------------------------
// Concurrency gate

RenderGate::RenderGate(int limit) : limit_(std::max(1, limit)) {}

void RenderGate::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return active_ < limit_; });
  ++active_;
}

void RenderGate::release() {
  {
    std::lock_guard lock(mu_);
    --active_;
  }
  cv_.notify_one();
}

namespace {

struct GateHold {
  explicit GateHold(RenderGate& g) : gate(g) { gate.acquire(); }
  ~GateHold() { gate.release(); }
  GateHold(const GateHold&) = delete;
  GateHold& operator=(const GateHold&) = delete;
  RenderGate& gate;
};

}  // namespace

// ---------------------------------------------------------------------------
// Service

RenderService::RenderService(Checkpoint ckpt, int max_concurrent) : ckpt_(std::move(ckpt)) {
  ckpt_.scene.validate();
  for (const auto& c : ckpt_.cameras) c.validate();
  if (!ckpt_.cameras.empty()) {
    width_ = ckpt_.cameras.front().width;
    height_ = ckpt_.cameras.front().height;
  }
  if (max_concurrent <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    max_concurrent = std::max(1, static_cast<int>(hw / 2));
  }
  gate_ = std::make_unique<RenderGate>(max_concurrent);
}

std::string RenderService::meta_json() const {
  json presets = json::array();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : ckpt_.cameras) {
    std::vector<double> e;
    for (int r = 0; r < 4; ++r)
      for (int k = 0; k < 4; ++k) e.push_back(c.extrinsics(r, k));
    presets.push_back({{"id", c.id}, {"extrinsics", e}, {"exposure_time", c.exposure_time}});
    lo = std::min(lo, c.exposure_time);
    hi = std::max(hi, c.exposure_time);
  }
  json range = ckpt_.cameras.empty() ? json{{"min", nullptr}, {"max", nullptr}} : json{{"min", lo}, {"max", hi}};
  const Camera ref = request_camera({Mat4::Identity(), 1.0, PreviewMode::ldr, width_, height_});
  const double fov_y = 2.0 * std::atan(0.5 * height_ / ref.fy()) * 180.0 / std::numbers::pi;
  return json{{"image_size", {{"width", width_}, {"height", height_}}},
              {"exposure_range", range},
              {"n_gaussians", ckpt_.scene.size()},
              {"sh_degree", ckpt_.scene.sh_degree},
              {"fov_y_deg", fov_y},
              {"presets", presets}}
      .dump();
}

Camera RenderService::request_camera(const RenderRequest& req) const {
  Camera cam;
  cam.width = req.width;
  cam.height = req.height;
  cam.extrinsics = req.extrinsics;
  cam.exposure_time = req.exposure_time;
  cam.id = "request";
  if (!ckpt_.cameras.empty()) {
    const Camera& ref = ckpt_.cameras.front();
    const double sx = static_cast<double>(req.width) / ref.width;
    const double sy = static_cast<double>(req.height) / ref.height;
    cam.intrinsics = Camera::pinhole(ref.fx() * sx, ref.fy() * sy, ref.cx() * sx, ref.cy() * sy);
  } else {
    const double f = 0.5 * req.height / std::tan(0.5 * 50.0 * std::numbers::pi / 180.0);
    cam.intrinsics = Camera::pinhole(f, f, 0.5 * req.width, 0.5 * req.height);
  }
  return cam;
}

Image hdr_preview_image(const Image& hdr, double mu) {
  return mu_law(minmax_normalize(hdr, 1e-8, HdrNormalization::global), mu);
}

std::vector<std::uint8_t> RenderService::render_png(const RenderRequest& req) const {
  const Camera cam = request_camera(req);
  GateHold hold(*gate_);
  RasterConfig rc;
  rc.tone_domain = ckpt_.tone_domain;
  const DualImage r = rasterize_dual(ckpt_.scene, cam, req.exposure_time, rc);
  return encode_png(req.mode == PreviewMode::ldr ? r.ldr.pixels : hdr_preview_image(r.hdr.pixels));
}

// ---------------------------------------------------------------------------
// HTTP

struct HttpServer::Impl {
  std::shared_ptr<const RenderService> service;
  httplib::Server server;
};

HttpServer::HttpServer(std::shared_ptr<const RenderService> service) : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto& sv = impl_->server;
  const auto svc = impl_->service;

  sv.set_payload_max_length(1 << 20);
  sv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  sv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok\n", "text/plain"); });

  sv.Get("/api/meta", [svc](const httplib::Request&, httplib::Response& res) {
    res.set_content(svc->meta_json(), "application/json");
  });

  sv.Options("/api/render", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  sv.Post("/api/render", [svc](const httplib::Request& req, httplib::Response& res) {
    const ParsedRenderRequest parsed = parse_render_request(req.body, svc->image_width(), svc->image_height());
    if (!parsed.request) {
      res.status = 400;
      res.set_content(field_errors_json("invalid render request", parsed.errors), "application/json");
      return;
    }
    const auto png = svc->render_png(*parsed.request);
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  });

  sv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "unknown error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(json{{"error", "render failed"}, {"detail", what}}.dump(), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& sv = impl_->server;
  if (port == 0) {
    const int p = sv.bind_to_any_port(host);
    if (p < 0) throw std::runtime_error("serve: cannot bind " + host);
    return p;
  }
  if (!sv.bind_to_port(host, port)) throw std::runtime_error("serve: cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace ddrgs
