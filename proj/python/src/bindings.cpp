#include "ddrgs/checkpoint.hpp"
#include "ddrgs/fd_check.hpp"
#include "ddrgs/fixture.hpp"
#include "ddrgs/image_io.hpp"
#include "ddrgs/losses.hpp"
#include "ddrgs/metrics.hpp"
#include "ddrgs/rasterizer.hpp"
#include "ddrgs/ssim.hpp"
#include "ddrgs/trainer.hpp"

#include "json.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <numbers>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace ddrgs;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Image& img) {
  Array out({img.height, img.width, 3});
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

Image from_numpy(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw StructuralError("image: expected an (H, W, 3) array");
  Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + img.size(), img.data.begin());
  return img;
}

ToneDomain parse_domain(const std::string& s) {
  if (s == "log") return ToneDomain::log;
  if (s == "linear") return ToneDomain::linear;
  throw ConfigError("tone domain must be \"log\" or \"linear\", got \"" + s + "\"");
}

std::string domain_name(ToneDomain d) { return d == ToneDomain::log ? "log" : "linear"; }

py::tuple render(const DdrScene& scene, const Camera& cam, double exposure_time, const std::string& domain) {
  RasterConfig rc;
  rc.tone_domain = parse_domain(domain);
  DualImage r;
  {
    py::gil_scoped_release release;
    r = rasterize_dual(scene, cam, exposure_time, rc);
  }
  return py::make_tuple(to_numpy(r.hdr.pixels), to_numpy(r.ldr.pixels));
}

Checkpoint train_dataset(const std::filesystem::path& data_path, const std::string& config_json,
                         const std::function<void(const std::string&)>& on_log) {
  TrainConfig cfg;
  apply_train_config_json(cfg, config_json);
  const Dataset data = load_dataset(data_path);
  if (!nlohmann::json::parse(config_json).contains("/loss/gamma_hdr"_json_pointer)) {
    cfg.loss.gamma_hdr = default_gamma_hdr(data);
  }
  TrainHooks hooks;
  if (on_log) {
    hooks.on_log = [&](const LogRecord& r) {
      py::gil_scoped_acquire acquire;
      on_log(r.to_json());
    };
  }
  Checkpoint ck;
  {
    py::gil_scoped_release release;
    TrainResult res = train(data, cfg, hooks);
    ck.scene = std::move(res.scene);
  }
  ck.tone_domain = cfg.tone_domain;
  for (std::size_t i : data.manifest.indices(Split::train)) ck.cameras.push_back(data.manifest.camera(i));
  return ck;
}

std::string evaluate(const Checkpoint& ck, const std::filesystem::path& data_path) {
  const Dataset data = load_dataset(data_path);
  EvalOptions opt;
  opt.raster.tone_domain = ck.tone_domain;
  std::vector<SplitReport> reports;
  py::gil_scoped_release release;
  for (Split s : {Split::train, Split::test}) reports.push_back(evaluate_split(ck.scene, data, s, opt));
  return format_report_json(reports);
}

}  // namespace

PYBIND11_MODULE(_ddrgs, m) {
  m.doc() = "Dual-dynamic-range Gaussian splatting core";

  // Python-side exception hierarchy mirrors the C++ one.
  py::register_exception<StructuralError>(m, "StructuralError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_RuntimeError);
  py::register_exception<IntegrityError>(m, "IntegrityError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<Camera>(m, "Camera")
      .def(py::init([](const Mat4& extrinsics, double fx, double fy, double cx, double cy, int width, int height,
                       double exposure_time, std::string id) {
             Camera c;
             c.extrinsics = extrinsics;
             c.intrinsics = Camera::pinhole(fx, fy, cx, cy);
             c.width = width;
             c.height = height;
             c.exposure_time = exposure_time;
             c.id = std::move(id);
             c.validate();
             return c;
           }),
           "extrinsics"_a, "fx"_a, "fy"_a, "cx"_a, "cy"_a, "width"_a, "height"_a, "exposure_time"_a = 1.0,
           "id"_a = "camera")
      .def_static(
          "look_at",
          [](const Vec3& eye, const Vec3& target, int width, int height, double fov_y_deg, double exposure_time) {
            Camera c;
            c.extrinsics = look_at(eye, target, Vec3(0.0, 1.0, 0.0));
            const double f = 0.5 * height / std::tan(0.5 * fov_y_deg * std::numbers::pi / 180.0);
            c.intrinsics = Camera::pinhole(f, f, 0.5 * width, 0.5 * height);
            c.width = width;
            c.height = height;
            c.exposure_time = exposure_time;
            c.id = "look_at";
            c.validate();
            return c;
          },
          "eye"_a, "target"_a, "width"_a, "height"_a, "fov_y_deg"_a = 50.0, "exposure_time"_a = 1.0)
      .def_readwrite("extrinsics", &Camera::extrinsics)
      .def_readwrite("width", &Camera::width)
      .def_readwrite("height", &Camera::height)
      .def_readwrite("exposure_time", &Camera::exposure_time)
      .def_readwrite("id", &Camera::id)
      .def_property_readonly("fx", &Camera::fx)
      .def_property_readonly("fy", &Camera::fy)
      .def_property_readonly("cx", &Camera::cx)
      .def_property_readonly("cy", &Camera::cy)
      .def("__repr__", [](const Camera& c) {
        return "<Camera '" + c.id + "' " + std::to_string(c.width) + "x" + std::to_string(c.height) + ">";
      });

  py::class_<DdrScene>(m, "Scene")
      .def("__len__", &DdrScene::size)
      .def_readonly("sh_degree", &DdrScene::sh_degree)
      .def_readonly("sh_bias", &DdrScene::sh_bias)
      .def_property_readonly("positions",
                             [](const DdrScene& s) {
                               Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> p(s.size(), 3);
                               for (std::size_t i = 0; i < s.size(); ++i) p.row(static_cast<Eigen::Index>(i)) = s.gaussians[i].position;
                               return p;
                             })
      .def_property_readonly("opacities",
                             [](const DdrScene& s) {
                               Eigen::VectorXd o(s.size());
                               for (std::size_t i = 0; i < s.size(); ++i) o[static_cast<Eigen::Index>(i)] = sigmoid(s.gaussians[i].opacity_logit);
                               return o;
                             })
      .def(
          "tone_map",
          [](const DdrScene& s, const Vec3& hdr, double exposure_time) {
            return tone_map(s.tone_mapper, hdr, exposure_time, s.sh_bias);
          },
          "hdr_color"_a, "exposure_time"_a)
      .def("validate", [](const DdrScene& s) { s.validate(); });

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_readonly("scene", &Checkpoint::scene)
      .def_readonly("cameras", &Checkpoint::cameras)
      .def_property_readonly("tone_domain", [](const Checkpoint& c) { return domain_name(c.tone_domain); })
      .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(c, p); }, "path"_a)
      .def(
          "render",
          [](const Checkpoint& c, const Camera& cam, double exposure_time) {
            return render(c.scene, cam, exposure_time, domain_name(c.tone_domain));
          },
          "camera"_a, "exposure_time"_a, "Returns (hdr, ldr) as (H, W, 3) float arrays.");

  m.def("load_checkpoint", &load_checkpoint, "path"_a);
  m.def(
      "checkpoint_digest", [](const std::filesystem::path& p) { return checkpoint_digest(read_file_bytes(p)); },
      "path"_a, "SHA-256 of a checkpoint's payload");
  m.def("render", &render, "scene"_a, "camera"_a, "exposure_time"_a, "tone_domain"_a = "log",
        "Render (hdr, ldr) images as (H, W, 3) float arrays.");

  m.def(
      "psnr", [](const Array& a, const Array& b, double peak) { return psnr(from_numpy(a), from_numpy(b), peak); },
      "a"_a, "b"_a, "peak"_a = 1.0);
  m.def(
      "ssim", [](const Array& a, const Array& b) { return ssim(from_numpy(a), from_numpy(b)); }, "a"_a, "b"_a);
  m.def(
      "mu_law", [](const Array& x, double mu) { return to_numpy(mu_law(from_numpy(x), mu)); }, "x"_a,
      "mu"_a = 5000.0);

  m.def("default_train_config", [] { return train_config_to_json(TrainConfig{}); },
        "Default training configuration as a JSON string.");
  m.def("train", &train_dataset, "data"_a, "config_json"_a = "{}", "on_log"_a = nullptr,
        "Train on a dataset directory; returns a Checkpoint holding the training cameras.");
  m.def("evaluate", &evaluate, "checkpoint"_a, "data"_a, "Per-split report as a JSON string.");

  m.def(
      "generate_fixture",
      [](const std::filesystem::path& out, int n_gaussians, int image_size, int n_train, int n_test,
         std::uint64_t seed, bool fit_gt_tone_mapper) {
        FixtureSpec spec;
        spec.n_gaussians = n_gaussians;
        spec.image_size = image_size;
        spec.n_train = n_train;
        spec.n_test = n_test;
        spec.seed = seed;
        spec.fit_gt_tone_mapper = fit_gt_tone_mapper;
        py::gil_scoped_release release;
        return generate_fixture(spec, out).manifest.views.size();
      },
      "out"_a, "n_gaussians"_a = 200, "image_size"_a = 64, "n_train"_a = 20, "n_test"_a = 10, "seed"_a = 0,
      "fit_gt_tone_mapper"_a = true, "Write the synthetic dataset; returns the number of views.");

  m.def(
      "fd_check",
      [](int n_gaussians, int size, std::uint64_t seed, double gamma, int min_samples) {
        const FdProblem p = make_fd_problem(n_gaussians, size, seed);
        LossConfig cfg;
        cfg.gamma_hdr = gamma;
        FdOptions opt;
        opt.min_samples = min_samples;
        const auto batch = p.batch();
        py::gil_scoped_release release;
        return finite_difference_check(p.scene, batch, cfg, {}, opt).to_json();
      },
      "n_gaussians"_a = 20, "size"_a = 32, "seed"_a = 0, "gamma"_a = 0.6, "min_samples"_a = 200,
      "Finite-difference gradient check report as a JSON string.");
}
