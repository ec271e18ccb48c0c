#pragma once

#include "ddrgs/scene.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ddrgs {

enum class Split { train, test };
std::string_view to_string(Split s);

struct Intrinsics {
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  [[nodiscard]] bool operator==(const Intrinsics&) const = default;
};

struct ManifestView {
  std::string name;
  std::string image;                   // LDR PNG, relative to the manifest directory
  Mat4 extrinsics = Mat4::Identity();  // world to camera
  double exposure_time = 1.0;          // seconds
  Split split = Split::train;
  std::optional<std::string> hdr_image;  // PFM, synthetic scenes only
};

/// JSON dataset description. All views share one set of intrinsics.
///
/// {
///   "format": "ddrgs-manifest", "version": 1,
///   "intrinsics": {"fx", "fy", "cx", "cy", "width", "height"},
///   "exposure_set": [seconds...],     // exposures training views are drawn from
///   "sfm_exposure": seconds,          // provenance of the sparse points
///   "views": [{"name", "image", "extrinsics": [16 row-major], "exposure_time",
///              "split": "train"|"test", "hdr_image"?}],
///   "sparse_points": [[x, y, z], ...]
/// }
///
/// Extrinsics map world to camera; the camera looks down +z with +y pointing
/// down the image and +x to the right.
struct DatasetManifest {
  Intrinsics intrinsics;
  std::vector<double> exposure_set;
  double sfm_exposure = 0.0;
  std::vector<ManifestView> views;
  std::vector<Vec3> sparse_points;

  [[nodiscard]] Camera camera(std::size_t view) const;
  [[nodiscard]] std::vector<std::size_t> indices(Split s) const;
  [[nodiscard]] bool has_hdr_targets() const;
  /// Checks the in-memory invariants; file existence is checked by load_manifest.
  void validate() const;
};

DatasetManifest parse_manifest(const std::string& json_text, const std::string& origin = "<memory>");
std::string manifest_to_json(const DatasetManifest& m);

DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);

/// Manifest plus decoded images.
struct Dataset {
  DatasetManifest manifest;
  std::filesystem::path root;
  std::vector<Image> ldr;
  std::vector<std::optional<Image>> hdr;
};

/// Accepts the manifest file or the directory holding "manifest.json".
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace ddrgs
