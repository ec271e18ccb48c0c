#include "ddrgs/cli.hpp"

#include "ddrgs/checkpoint.hpp"
#include "ddrgs/colmap.hpp"
#include "ddrgs/fd_check.hpp"
#include "ddrgs/fixture.hpp"
#include "ddrgs/image_io.hpp"
#include "ddrgs/metrics.hpp"
#include "ddrgs/parallel.hpp"
#include "ddrgs/rasterizer.hpp"
#include "ddrgs/service.hpp"
#include "ddrgs/trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <pthread.h>

namespace ddrgs {

using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, /*force_flush=*/true);
  auto log = std::make_shared<spdlog::logger>("ddrgs", sink);
  log->set_pattern("[%H:%M:%S] [%^%l%$] %v");
  log->set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("DDR_LOG")) {
    const auto parsed = spdlog::level::from_str(lvl);
    // from_str maps unknown names to "off"; only honour it when asked for.
    if (parsed != spdlog::level::off || std::string(lvl) == "off") log->set_level(parsed);
  }
  return log;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dashed(std::string s) {
  for (char& c : s)
    if (c == '_') c = '-';
  return s;
}

// Converts a flag's text to the JSON type of the field it overrides.
json flag_value(const json& like, const std::string& flag, const std::string& raw) {
  const auto bad = [&](const char* what) { return UsageError("--" + flag + ": expected " + what + ", got '" + raw + "'"); };
  if (like.is_boolean()) {
    if (raw == "true" || raw == "1" || raw == "on") return true;
    if (raw == "false" || raw == "0" || raw == "off") return false;
    throw bad("true or false");
  }
  if (like.is_array()) {
    json arr = json::array();
    std::stringstream ss(raw);
    for (std::string item; std::getline(ss, item, ',');) {
      try {
        std::size_t used = 0;
        arr.push_back(std::stod(item, &used));
        if (used != item.size()) throw bad("a comma-separated list of numbers");
      } catch (const std::logic_error&) {
        throw bad("a comma-separated list of numbers");
      }
    }
    return arr;
  }
  if (like.is_number_integer()) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(raw, &used);
      if (used != raw.size()) throw bad("an integer");
      if (like.is_number_unsigned() && v < 0) throw bad("a non-negative integer");
      return v;
    } catch (const std::logic_error&) {
      throw bad("an integer");
    }
  }
  if (like.is_number()) {
    try {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (used != raw.size()) throw bad("a number");
      return v;
    } catch (const std::logic_error&) {
      throw bad("a number");
    }
  }
  return raw;
}

// One CLI option per TrainConfig field, derived from its JSON form so the two
// cannot drift apart: "lr_sh" -> --lr-sh, "loss.gamma_hdr" -> --loss-gamma-hdr.
class TrainFlags {
 public:
  void attach(CLI::App& app) {
    const json defaults = json::parse(train_config_to_json(TrainConfig{}));
    for (const auto& [key, value] : defaults.items()) {
      if (value.is_object()) {
        for (const auto& [sub, v] : value.items()) add(app, key + "_" + sub, json::json_pointer("/" + key + "/" + sub), v);
      } else {
        add(app, key, json::json_pointer("/" + key), value);
      }
    }
    iters_ = app.add_option("--iters", iters_raw_, "Alias of --iterations")->excludes(options_.at("iterations").opt);
    gamma_ = app.add_option("--gamma", gamma_raw_, "Alias of --loss-gamma-hdr (default 0.6 with HDR targets, else 0)")
                 ->excludes(options_.at("loss_gamma_hdr").opt);
  }

  /// Overrides from the command line, as a config JSON object.
  [[nodiscard]] json overrides() const {
    json out = json::object();
    for (const auto& [name, f] : options_) {
      if (f.opt->count() == 0) continue;
      out[f.pointer] = flag_value(f.like, dashed(name), f.raw);
    }
    if (iters_->count()) out["/iterations"_json_pointer] = flag_value(json(1), "iters", iters_raw_);
    if (gamma_->count()) out["/loss/gamma_hdr"_json_pointer] = flag_value(json(1.0), "gamma", gamma_raw_);
    return out;
  }

 private:
  struct Flag {
    json::json_pointer pointer;
    json like;
    std::string raw;
    CLI::Option* opt = nullptr;
  };

  void add(CLI::App& app, const std::string& name, json::json_pointer ptr, const json& like) {
    Flag& f = options_[name];
    f.pointer = std::move(ptr);
    f.like = like;
    std::string desc = "TrainConfig " + f.pointer.to_string().substr(1) + " (default " + like.dump() + ")";
    f.opt = app.add_option("--" + dashed(name), f.raw, desc);
  }

  std::map<std::string, Flag> options_;
  std::string iters_raw_, gamma_raw_;
  CLI::Option* iters_ = nullptr;
  CLI::Option* gamma_ = nullptr;
};

bool json_has(const json& j, const json::json_pointer& p) { return j.contains(p); }

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data, out, log, config;
  int threads = 0;
  TrainFlags flags;
};

int cmd_train(TrainArgs& a, std::ostream& out, spdlog::logger& log) {
  TrainConfig cfg;
  json file_cfg = json::object();
  if (!a.config.empty()) {
    const std::string text = read_text(a.config);
    apply_train_config_json(cfg, text);
    file_cfg = json::parse(text);
  }
  const json flags = a.flags.overrides();
  apply_train_config_json(cfg, flags.dump());
  cfg.validate();

  const Dataset data = load_dataset(a.data);
  const auto gamma_ptr = "/loss/gamma_hdr"_json_pointer;
  if (!json_has(file_cfg, gamma_ptr) && !json_has(flags, gamma_ptr)) {
    cfg.loss.gamma_hdr = default_gamma_hdr(data);
    log.info("gamma_hdr not given; using {} ({} HDR targets)", cfg.loss.gamma_hdr,
             cfg.loss.gamma_hdr > 0.0 ? "dataset has" : "dataset lacks");
  }

  const std::filesystem::path out_path = a.out;
  const std::filesystem::path log_path =
      a.log.empty() ? std::filesystem::path(out_path).replace_extension(".metrics.ndjson") : std::filesystem::path(a.log);
  std::ofstream metrics(log_path);
  if (!metrics) throw std::runtime_error("cannot write " + log_path.string());

  log.info("training {} iterations on {} ({} views)", cfg.iterations, a.data, data.manifest.views.size());
  TrainHooks hooks;
  hooks.warn = [&](const std::string& w) { log.warn("{}", w); };
  hooks.on_log = [&](const LogRecord& r) {
    metrics << r.to_json() << '\n';
    metrics.flush();
    if (r.psnr_ldr) {
      log.info("iter {:>6}  loss {:.5f}  gaussians {}  held-out LDR {:.2f} dB  HDR {:.2f} dB", r.iter, r.loss_p,
               r.n_gaussians, *r.psnr_ldr, r.psnr_hdr.value_or(0.0));
    } else {
      log.debug("iter {:>6}  loss {:.5f}  gaussians {}", r.iter, r.loss_p, r.n_gaussians);
    }
  };
  TrainResult res = train(data, cfg, hooks);

  Checkpoint ck;
  ck.scene = std::move(res.scene);
  ck.tone_domain = cfg.tone_domain;
  for (std::size_t i : data.manifest.indices(Split::train)) ck.cameras.push_back(data.manifest.camera(i));
  save_checkpoint(ck, out_path);
  const auto digest = checkpoint_digest(read_file_bytes(out_path));
  out << "checkpoint " << out_path.string() << " sha256 " << digest << "\n";
  out << "metrics " << log_path.string() << "\n";
  log.info("wrote {} ({} gaussians)", out_path.string(), ck.scene.size());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// render

struct RenderArgs {
  std::string ckpt, camera, mode = "ldr", out;
  std::optional<double> exposure;
  std::optional<int> width, height;
};

Camera resolve_camera(const RenderArgs& a, const RenderService& svc, const Checkpoint& ck) {
  RenderRequest req;
  std::optional<Mat34> explicit_k;
  const std::string& spec = a.camera;
  const bool is_index = !spec.empty() && spec.find_first_not_of("0123456789") == std::string::npos;
  if (is_index) {
    const std::size_t i = std::stoul(spec);
    if (i >= ck.cameras.size()) {
      throw UsageError("--camera " + spec + ": checkpoint has " + std::to_string(ck.cameras.size()) + " camera presets");
    }
    req.extrinsics = ck.cameras[i].extrinsics;
    req.width = ck.cameras[i].width;
    req.height = ck.cameras[i].height;
  } else {
    const std::string text = spec.starts_with("{") ? spec : read_text(spec);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw UsageError(std::string("--camera: invalid JSON: ") + e.what());
    }
    json body = j;
    json k;
    if (body.is_object() && body.contains("intrinsics")) {
      k = body["intrinsics"];
      body.erase("intrinsics");
    }
    body["exposure_time"] = 1.0;
    const auto parsed = parse_render_request(body.dump(), svc.image_width(), svc.image_height());
    if (!parsed.request) {
      std::string msg = "--camera:";
      for (const auto& e : parsed.errors) msg += " " + e.field + ": " + e.message + ";";
      throw UsageError(msg);
    }
    req = *parsed.request;
    if (!k.is_null()) {
      try {
        explicit_k = Camera::pinhole(k.at("fx").get<double>(), k.at("fy").get<double>(), k.at("cx").get<double>(),
                                     k.at("cy").get<double>());
      } catch (const json::exception&) {
        throw UsageError("--camera: intrinsics needs numeric fx, fy, cx, cy");
      }
    }
  }
  if (a.width) req.width = *a.width;
  if (a.height) req.height = *a.height;
  Camera cam = svc.request_camera(req);
  if (explicit_k) cam.intrinsics = *explicit_k;
  return cam;
}

int cmd_render(const RenderArgs& a, std::ostream& out, spdlog::logger& log) {
  const bool want_ldr = a.mode == "ldr" || a.mode == "both";
  const bool want_hdr = a.mode == "hdr" || a.mode == "both";
  if (want_ldr && !a.exposure) throw UsageError("--exposure is required for --mode " + a.mode);
  if (a.mode == "hdr" && a.exposure) log.debug("--mode hdr ignores --exposure");

  Checkpoint ck = load_checkpoint(a.ckpt);
  const RenderService svc(ck, 1);
  Camera cam = resolve_camera(a, svc, ck);
  cam.exposure_time = a.exposure.value_or(1.0);
  cam.validate();
  RasterConfig rc;
  rc.tone_domain = ck.tone_domain;
  const DualImage r = rasterize_dual(ck.scene, cam, cam.exposure_time, rc);

  std::filesystem::path base = a.out;
  if (a.mode == "both") {
    const auto ext = base.extension().string();
    if (ext == ".png" || ext == ".pfm" || ext == ".PNG" || ext == ".PFM") base.replace_extension();
  }
  const auto target = [&](const char* ext) {
    return a.mode == "both" ? std::filesystem::path(base.string() + ext) : base;
  };
  if (want_ldr) {
    write_png(r.ldr.pixels, target(".png"));
    out << "ldr " << target(".png").string() << "\n";
  }
  if (want_hdr) {
    write_pfm(r.hdr.pixels, target(".pfm"));
    out << "hdr " << target(".pfm").string() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string ckpt, data, report;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, spdlog::logger& log) {
  const Checkpoint ck = load_checkpoint(a.ckpt);
  const Dataset data = load_dataset(a.data);
  EvalOptions opt;
  opt.raster.tone_domain = ck.tone_domain;
  std::vector<SplitReport> reports;
  for (Split s : {Split::train, Split::test}) reports.push_back(evaluate_split(ck.scene, data, s, opt));
  out << format_report_table(reports);
  if (!a.report.empty()) {
    std::ofstream f(a.report);
    if (!f) throw std::runtime_error("cannot write " + a.report);
    f << format_report_json(reports) << "\n";
    log.info("wrote {}", a.report);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// serve

struct ServeArgs {
  std::string ckpt, host = "127.0.0.1";
  int port = 8080;
  int max_concurrent = 0;
};

int cmd_serve(const ServeArgs& a, std::ostream& out, spdlog::logger& log) {
  auto svc = std::make_shared<const RenderService>(load_checkpoint(a.ckpt), a.max_concurrent);

  // Route SIGINT/SIGTERM to a watcher thread; the server threads inherit the mask.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &stop_signals, &previous);

  HttpServer server(svc);
  const int port = server.bind(a.host, a.port);
  out << "listening on http://" << a.host << ":" << port << std::endl;
  log.info("serving {} gaussians at {}x{}, at most {} concurrent renders", svc->scene().size(), svc->image_width(),
           svc->image_height(), svc->max_concurrent());

  std::thread watcher([&] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    log.info("signal {}; shutting down", sig);
    server.stop();
  });
  server.serve();
  // serve() can also return on its own (socket failure); wake the watcher.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fixture

struct FixtureArgs {
  std::string out;
  FixtureSpec spec;
  bool no_gt_fit = false;
};

int cmd_fixture(FixtureArgs& a, std::ostream& out, spdlog::logger& log) {
  a.spec.fit_gt_tone_mapper = !a.no_gt_fit;
  const Fixture fx = generate_fixture(a.spec, a.out);
  out << "fixture " << a.out << ": " << fx.manifest.views.size() << " views, " << fx.ground_truth.scene.size()
      << " gaussians\n";
  log.info("train exposures {}, held-out exposures {}", json(a.spec.train_exposures).dump(), json(a.spec.exposures).dump());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fd-check

struct FdArgs {
  int gaussians = 20, size = 32, sh_degree = 3, views = 2;
  double gamma = 0.6;
  std::uint64_t seed = 0;
  FdOptions opt;
  bool as_json = false;
};

int cmd_fd_check(const FdArgs& a, std::ostream& out, spdlog::logger&) {
  const FdProblem p = make_fd_problem(a.gaussians, a.size, a.seed, a.sh_degree, a.views);
  LossConfig cfg;
  cfg.gamma_hdr = a.gamma;
  const auto batch = p.batch();
  const FdReport rep = finite_difference_check(p.scene, batch, cfg, {}, a.opt);
  out << (a.as_json ? rep.to_json() + "\n" : rep.to_text());
  return rep.passed ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// ingest-colmap

struct IngestArgs {
  std::string sparse, exposures, images = "images", out;
  std::optional<double> exposure;
  int test_every = 0;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, spdlog::logger& log) {
  const SparseReconstruction rec = ingest_colmap(a.sparse);
  std::map<std::string, double> by_name;
  if (!a.exposures.empty()) {
    json j;
    try {
      j = json::parse(read_text(a.exposures));
      by_name = j.get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
      throw UsageError("--exposures: expected a JSON object of image name -> seconds (" + std::string(e.what()) + ")");
    }
  } else if (a.exposure) {
    for (const auto& im : rec.images) by_name[im.name] = *a.exposure;
  } else {
    throw UsageError("one of --exposures or --exposure is required");
  }
  const DatasetManifest m = manifest_from_reconstruction(rec, by_name, a.images, a.test_every);
  write_manifest(m, a.out);
  out << "manifest " << a.out << ": " << m.views.size() << " views, " << m.sparse_points.size() << " points\n";
  log.info("train {} / test {}", m.indices(Split::train).size(), m.indices(Split::test).size());
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  auto log = make_logger(err);

  CLI::App app{"Dual-dynamic-range Gaussian splatting: train, render, evaluate and serve HDR/LDR scenes.", "ddrgs"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads for rendering (0 = OpenMP default)")->check(CLI::NonNegativeNumber);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Optimize a scene on a dataset");
  train_cmd->add_option("--data", ta.data, "Dataset directory or manifest.json")->required();
  train_cmd->add_option("--out", ta.out, "Output checkpoint")->required();
  train_cmd->add_option("--log", ta.log, "Metrics NDJSON (default: <out>.metrics.ndjson)");
  train_cmd->add_option("--config", ta.config, "JSON file of TrainConfig fields; flags override it");
  ta.flags.attach(*train_cmd);

  RenderArgs ra;
  auto* render_cmd = app.add_subcommand("render", "Render a checkpoint from one camera");
  render_cmd->add_option("--ckpt", ra.ckpt, "Checkpoint")->required();
  render_cmd->add_option("--camera", ra.camera, "Preset index, JSON file, or inline JSON {extrinsics, width?, height?, intrinsics?}")
      ->required();
  render_cmd->add_option("--exposure", ra.exposure, "Exposure time in seconds (ldr/both)")->check(CLI::PositiveNumber);
  render_cmd->add_option("--mode", ra.mode, "ldr, hdr or both")->check(CLI::IsMember({"ldr", "hdr", "both"}));
  render_cmd->add_option("--width", ra.width, "Override width")->check(CLI::Range(1, kMaxRenderSide * 8));
  render_cmd->add_option("--height", ra.height, "Override height")->check(CLI::Range(1, kMaxRenderSide * 8));
  render_cmd->add_option("--out", ra.out, "Output path (PNG for ldr, PFM for hdr, stem for both)")->required();

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on every split");
  eval_cmd->add_option("--ckpt", ea.ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--data", ea.data, "Dataset directory or manifest.json")->required();
  eval_cmd->add_option("--report", ea.report, "Write the JSON report here");

  ServeArgs sa;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP render service");
  serve_cmd->add_option("--ckpt", sa.ckpt, "Checkpoint")->required();
  serve_cmd->add_option("--host", sa.host, "Bind address");
  serve_cmd->add_option("--port", sa.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--max-concurrent", sa.max_concurrent, "Simultaneous renders (0 = cores / 2)")
      ->check(CLI::NonNegativeNumber);

  FixtureArgs fa;
  auto* fixture_cmd = app.add_subcommand("fixture", "Generate the synthetic multi-exposure dataset");
  fixture_cmd->add_option("--out", fa.out, "Output directory")->required();
  fixture_cmd->add_option("--seed", fa.spec.seed, "Random seed");
  fixture_cmd->add_option("--gaussians", fa.spec.n_gaussians, "Ground-truth gaussians")->check(CLI::PositiveNumber);
  fixture_cmd->add_option("--size", fa.spec.image_size, "Image side in pixels")->check(CLI::PositiveNumber);
  fixture_cmd->add_option("--train", fa.spec.n_train, "Training views")->check(CLI::PositiveNumber);
  fixture_cmd->add_option("--test", fa.spec.n_test, "Held-out poses")->check(CLI::NonNegativeNumber);
  fixture_cmd->add_option("--exposures", fa.spec.exposures, "All exposure times")->delimiter(',');
  fixture_cmd->add_option("--train-exposures", fa.spec.train_exposures, "Training exposure times")->delimiter(',');
  fixture_cmd->add_flag("--no-gt-fit", fa.no_gt_fit, "Skip fitting the stored ground-truth tone mapper");

  FdArgs da;
  auto* fd_cmd = app.add_subcommand("fd-check", "Finite-difference gradient check on a random scene");
  fd_cmd->add_option("--gaussians", da.gaussians, "Gaussians")->check(CLI::PositiveNumber);
  fd_cmd->add_option("--size", da.size, "Image side")->check(CLI::PositiveNumber);
  fd_cmd->add_option("--views", da.views, "Views in the batch")->check(CLI::PositiveNumber);
  fd_cmd->add_option("--sh-degree", da.sh_degree, "SH degree")->check(CLI::Range(0, kMaxShDegree));
  fd_cmd->add_option("--gamma", da.gamma, "HDR constraint weight")->check(CLI::NonNegativeNumber);
  fd_cmd->add_option("--seed", da.seed, "Scene seed");
  fd_cmd->add_option("--tolerance", da.opt.tolerance, "Relative tolerance")->check(CLI::PositiveNumber);
  fd_cmd->add_option("--step", da.opt.step, "Central-difference step")->check(CLI::PositiveNumber);
  fd_cmd->add_option("--samples", da.opt.min_samples, "Minimum sampled parameters")->check(CLI::PositiveNumber);
  fd_cmd->add_flag("--json", da.as_json, "JSON report");

  IngestArgs ia;
  auto* ingest_cmd = app.add_subcommand("ingest-colmap", "Manifest from a text sparse reconstruction");
  ingest_cmd->add_option("--sparse", ia.sparse, "Directory with cameras.txt, images.txt, points3D.txt")->required();
  auto* per_image = ingest_cmd->add_option("--exposures", ia.exposures, "JSON object: image name -> seconds");
  ingest_cmd->add_option("--exposure", ia.exposure, "One exposure for every image")
      ->check(CLI::PositiveNumber)
      ->excludes(per_image);
  ingest_cmd->add_option("--images", ia.images, "Image directory recorded in the manifest");
  ingest_cmd->add_option("--test-every", ia.test_every, "Hold out every N-th image (0 = none)")
      ->check(CLI::NonNegativeNumber);
  ingest_cmd->add_option("--out", ia.out, "Manifest path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* ctx = &app;
    for (auto* sub : app.get_subcommands()) ctx = sub;
    err << ctx->help();
    return kExitUsage;
  }
  if (threads > 0) set_num_threads(threads);

  try {
    if (*train_cmd) return cmd_train(ta, out, *log);
    if (*render_cmd) return cmd_render(ra, out, *log);
    if (*eval_cmd) return cmd_eval(ea, out, *log);
    if (*serve_cmd) return cmd_serve(sa, out, *log);
    if (*fixture_cmd) return cmd_fixture(fa, out, *log);
    if (*fd_cmd) return cmd_fd_check(da, out, *log);
    if (*ingest_cmd) return cmd_ingest(ia, out, *log);
  } catch (const UsageError& e) {
    log->error("{}", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    log->error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ddrgs
