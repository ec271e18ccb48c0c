#include "ddrgs/dataset.hpp"

#include "ddrgs/image_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ddrgs {

using nlohmann::json;

std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

Camera DatasetManifest::camera(std::size_t view) const {
  const auto& v = views.at(view);
  Camera cam;
  cam.extrinsics = v.extrinsics;
  cam.intrinsics = Camera::pinhole(intrinsics.fx, intrinsics.fy, intrinsics.cx, intrinsics.cy);
  cam.width = intrinsics.width;
  cam.height = intrinsics.height;
  cam.exposure_time = v.exposure_time;
  cam.id = v.name;
  return cam;
}

std::vector<std::size_t> DatasetManifest::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < views.size(); ++i)
    if (views[i].split == s) out.push_back(i);
  return out;
}

bool DatasetManifest::has_hdr_targets() const {
  return std::any_of(views.begin(), views.end(), [](const auto& v) { return v.hdr_image.has_value(); });
}

void DatasetManifest::validate() const {
  const auto fail = [](const std::string& msg) { throw ConfigError("manifest: " + msg); };
  const auto& k = intrinsics;
  if (!(k.fx > 0 && k.fy > 0) || !std::isfinite(k.cx) || !std::isfinite(k.cy)) fail("intrinsics must be finite with positive focal lengths");
  if (k.width <= 0 || k.height <= 0) fail("image size must be positive");
  if (exposure_set.empty()) fail("exposure_set is empty");
  for (double t : exposure_set)
    if (!(t > 0.0) || !std::isfinite(t)) fail("exposure_set entries must be positive");
  if (indices(Split::train).empty()) fail("no training views");
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& v = views[i];
    const std::string who = "view " + std::to_string(i) + " ('" + v.name + "')";
    if (!(v.exposure_time > 0.0) || !std::isfinite(v.exposure_time)) {
      fail(who + ": exposure_time must be > 0 (got " + std::to_string(v.exposure_time) + ")");
    }
    if (v.split == Split::train &&
        std::find(exposure_set.begin(), exposure_set.end(), v.exposure_time) == exposure_set.end()) {
      fail(who + ": training exposure " + std::to_string(v.exposure_time) + " is not in exposure_set");
    }
    if (v.image.empty()) fail(who + ": missing image path");
    try {
      camera(i).validate();
    } catch (const std::exception& e) {
      fail(who + ": " + e.what());
    }
  }
  for (const auto& p : sparse_points)
    if (!p.allFinite()) fail("non-finite sparse point");
}

namespace {

// 1-based line of a byte offset, for parse diagnostics.
std::size_t line_of(const std::string& text, std::size_t byte) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + std::min(byte, text.size()), '\n'));
}

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(origin + ":" + std::to_string(line_of(text, e.byte)) + ": JSON parse error: " + e.what());
  }
  if (!j.is_object()) throw FormatError(origin + ": manifest must be a JSON object");
  if (j.value("format", std::string{}) != "ddrgs-manifest") throw FormatError(origin + ": 'format' must be \"ddrgs-manifest\"");
  if (j.value("version", 0) != 1) throw FormatError(origin + ": unsupported manifest version");

  DatasetManifest m;
  const json& k = j.at("intrinsics");
  const std::string kw = origin + ": intrinsics";
  m.intrinsics = {field<double>(k, "fx", kw), field<double>(k, "fy", kw), field<double>(k, "cx", kw),
                  field<double>(k, "cy", kw), field<int>(k, "width", kw),  field<int>(k, "height", kw)};
  m.exposure_set = field<std::vector<double>>(j, "exposure_set", origin);
  m.sfm_exposure = j.value("sfm_exposure", 0.0);
  if (!j.contains("views") || !j["views"].is_array()) throw FormatError(origin + ": 'views' must be an array");
  for (std::size_t i = 0; i < j["views"].size(); ++i) {
    const json& v = j["views"][i];
    const std::string w = origin + ": views[" + std::to_string(i) + "]";
    ManifestView mv;
    mv.name = field<std::string>(v, "name", w);
    mv.image = field<std::string>(v, "image", w);
    const auto e = field<std::vector<double>>(v, "extrinsics", w);
    if (e.size() != 16) throw FormatError(w + ": extrinsics must have 16 entries (row-major 4x4)");
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) mv.extrinsics(r, c) = e[static_cast<std::size_t>(r * 4 + c)];
    mv.exposure_time = field<double>(v, "exposure_time", w);
    const auto split = field<std::string>(v, "split", w);
    if (split == "train") {
      mv.split = Split::train;
    } else if (split == "test") {
      mv.split = Split::test;
    } else {
      throw FormatError(w + ": split must be \"train\" or \"test\"");
    }
    if (v.contains("hdr_image")) mv.hdr_image = field<std::string>(v, "hdr_image", w);
    m.views.push_back(std::move(mv));
  }
  if (j.contains("sparse_points")) {
    for (const auto& p : j["sparse_points"]) {
      if (!p.is_array() || p.size() != 3) throw FormatError(origin + ": sparse points must be [x, y, z]");
      m.sparse_points.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    }
  }
  m.validate();
  return m;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["format"] = "ddrgs-manifest";
  j["version"] = 1;
  const auto& k = m.intrinsics;
  j["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
  j["exposure_set"] = m.exposure_set;
  j["sfm_exposure"] = m.sfm_exposure;
  j["views"] = json::array();
  for (const auto& v : m.views) {
    std::vector<double> e(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) e[static_cast<std::size_t>(r * 4 + c)] = v.extrinsics(r, c);
    json jv = {{"name", v.name},
               {"image", v.image},
               {"extrinsics", e},
               {"exposure_time", v.exposure_time},
               {"split", std::string(to_string(v.split))}};
    if (v.hdr_image) jv["hdr_image"] = *v.hdr_image;
    j["views"].push_back(std::move(jv));
  }
  j["sparse_points"] = json::array();
  for (const auto& p : m.sparse_points) j["sparse_points"].push_back({p.x(), p.y(), p.z()});
  return j.dump(1) + "\n";
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  DatasetManifest m = parse_manifest(ss.str(), path.string());
  const auto root = path.parent_path();
  for (std::size_t i = 0; i < m.views.size(); ++i) {
    const auto& v = m.views[i];
    const auto check = [&](const std::string& rel) {
      if (!std::filesystem::exists(root / rel)) {
        throw ConfigError(path.string() + ": view " + std::to_string(i) + " ('" + v.name + "') references missing file " + rel);
      }
    };
    check(v.image);
    if (v.hdr_image) check(*v.hdr_image);
  }
  return m;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  m.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write manifest " + path.string());
  out << manifest_to_json(m);
}

Dataset load_dataset(const std::filesystem::path& path) {
  const auto file = std::filesystem::is_directory(path) ? path / "manifest.json" : path;
  Dataset d;
  d.manifest = load_manifest(file);
  d.root = file.parent_path();
  const auto& k = d.manifest.intrinsics;
  for (const auto& v : d.manifest.views) {
    Image ldr = read_png(d.root / v.image);
    if (ldr.width != k.width || ldr.height != k.height) {
      throw ConfigError(v.image + ": image size does not match manifest intrinsics");
    }
    d.ldr.push_back(std::move(ldr));
    if (v.hdr_image) {
      Image hdr = read_pfm(d.root / *v.hdr_image);
      if (hdr.width != k.width || hdr.height != k.height) {
        throw ConfigError(*v.hdr_image + ": image size does not match manifest intrinsics");
      }
      d.hdr.emplace_back(std::move(hdr));
    } else {
      d.hdr.emplace_back(std::nullopt);
    }
  }
  return d;
}

}  // namespace ddrgs
