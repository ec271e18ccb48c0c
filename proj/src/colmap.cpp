#include "ddrgs/colmap.hpp"

#include <Eigen/Geometry>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ddrgs {

namespace {

// Non-comment, non-empty lines with their 1-based line numbers.
std::vector<std::pair<int, std::string>> data_lines(const std::filesystem::path& path, bool keep_empty = false) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::pair<int, std::string>> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') continue;
    if (line.find_first_not_of(" \t") == std::string::npos && !keep_empty) continue;
    out.emplace_back(n, line);
  }
  return out;
}

[[noreturn]] void parse_fail(const std::filesystem::path& p, int line, const std::string& msg) {
  throw FormatError(p.filename().string() + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

SparseReconstruction ingest_colmap(const std::filesystem::path& dir) {
  SparseReconstruction rec;

  const auto cam_path = dir / "cameras.txt";
  for (const auto& [ln, text] : data_lines(cam_path)) {
    std::istringstream is(text);
    int id, w, h;
    std::string model;
    if (!(is >> id >> model >> w >> h)) parse_fail(cam_path, ln, "expected CAMERA_ID MODEL WIDTH HEIGHT PARAMS");
    std::vector<double> params;
    double p;
    while (is >> p) params.push_back(p);
    if (!is.eof()) parse_fail(cam_path, ln, "non-numeric camera parameter");
    Intrinsics k;
    k.width = w;
    k.height = h;
    if (model == "PINHOLE") {
      if (params.size() != 4) parse_fail(cam_path, ln, "PINHOLE expects fx fy cx cy");
      k.fx = params[0];
      k.fy = params[1];
      k.cx = params[2];
      k.cy = params[3];
    } else if (model == "SIMPLE_PINHOLE") {
      if (params.size() != 3) parse_fail(cam_path, ln, "SIMPLE_PINHOLE expects f cx cy");
      k.fx = k.fy = params[0];
      k.cx = params[1];
      k.cy = params[2];
    } else {
      parse_fail(cam_path, ln, "unsupported camera model " + model + " (only PINHOLE and SIMPLE_PINHOLE)");
    }
    if (!rec.cameras.emplace(id, k).second) parse_fail(cam_path, ln, "duplicate camera id");
  }

  // Image rows alternate with 2D-point rows, which may be empty.
  const auto img_path = dir / "images.txt";
  const auto lines = data_lines(img_path, true);
  std::size_t i = 0;
  while (i < lines.size()) {
    const auto& [ln, text] = lines[i];
    if (text.find_first_not_of(" \t") == std::string::npos) {
      ++i;
      continue;
    }
    std::istringstream is(text);
    SparseReconstruction::Posed im;
    double qw, qx, qy, qz, tx, ty, tz;
    if (!(is >> im.id >> qw >> qx >> qy >> qz >> tx >> ty >> tz >> im.camera_id >> im.name)) {
      parse_fail(img_path, ln, "expected IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME");
    }
    if (!rec.cameras.count(im.camera_id)) parse_fail(img_path, ln, "unknown camera id " + std::to_string(im.camera_id));
    Eigen::Quaterniond q(qw, qx, qy, qz);
    if (std::abs(q.norm() - 1.0) > 1e-6) parse_fail(img_path, ln, "quaternion is not unit length");
    q.normalize();
    im.extrinsics.topLeftCorner<3, 3>() = q.toRotationMatrix();
    im.extrinsics.topRightCorner<3, 1>() = Vec3(tx, ty, tz);
    rec.images.push_back(std::move(im));
    i += 2;  // skip the POINTS2D row
  }

  const auto pts_path = dir / "points3D.txt";
  for (const auto& [ln, text] : data_lines(pts_path)) {
    std::istringstream is(text);
    long long id;
    double x, y, z;
    if (!(is >> id >> x >> y >> z)) parse_fail(pts_path, ln, "expected POINT3D_ID X Y Z ...");
    rec.points.emplace_back(x, y, z);
  }
  return rec;
}

void export_colmap(const SparseReconstruction& rec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + (dir / name).string());
    out.precision(17);
    return out;
  };
  {
    auto out = open("cameras.txt");
    out << "# CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]\n";
    for (const auto& [id, k] : rec.cameras) {
      out << id << " PINHOLE " << k.width << ' ' << k.height << ' ' << k.fx << ' ' << k.fy << ' ' << k.cx << ' '
          << k.cy << '\n';
    }
  }
  {
    auto out = open("images.txt");
    out << "# IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME\n# POINTS2D[] as (X, Y, POINT3D_ID)\n";
    for (const auto& im : rec.images) {
      const Eigen::Quaterniond q(Mat3(im.extrinsics.topLeftCorner<3, 3>()));
      const Vec3 t = im.extrinsics.topRightCorner<3, 1>();
      out << im.id << ' ' << q.w() << ' ' << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << t.x() << ' ' << t.y()
          << ' ' << t.z() << ' ' << im.camera_id << ' ' << im.name << "\n\n";
    }
  }
  {
    auto out = open("points3D.txt");
    out << "# POINT3D_ID X Y Z R G B ERROR TRACK[]\n";
    for (std::size_t i = 0; i < rec.points.size(); ++i) {
      const auto& p = rec.points[i];
      out << i + 1 << ' ' << p.x() << ' ' << p.y() << ' ' << p.z() << " 128 128 128 0\n";
    }
  }
}

DatasetManifest manifest_from_reconstruction(const SparseReconstruction& rec,
                                             const std::map<std::string, double>& exposure_by_name,
                                             const std::string& image_dir, int test_every) {
  std::set<int> used;
  for (const auto& im : rec.images) used.insert(im.camera_id);
  if (used.size() != 1) throw ConfigError("reconstruction must use exactly one shared camera");
  DatasetManifest m;
  m.intrinsics = rec.cameras.at(*used.begin());
  std::set<double> train_exposures;
  for (std::size_t i = 0; i < rec.images.size(); ++i) {
    const auto& im = rec.images[i];
    const auto it = exposure_by_name.find(im.name);
    if (it == exposure_by_name.end()) throw ConfigError("no exposure time given for image " + im.name);
    ManifestView v;
    v.name = im.name;
    v.image = image_dir.empty() ? im.name : image_dir + "/" + im.name;
    v.extrinsics = im.extrinsics;
    v.exposure_time = it->second;
    v.split = (test_every > 0 && i % static_cast<std::size_t>(test_every) == 0) ? Split::test : Split::train;
    if (v.split == Split::train) train_exposures.insert(v.exposure_time);
    m.views.push_back(std::move(v));
  }
  m.exposure_set.assign(train_exposures.begin(), train_exposures.end());
  m.sparse_points = rec.points;
  m.validate();
  return m;
}

}  // namespace ddrgs
