#pragma once

#include "ddrgs/dataset.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ddrgs {

/// Contents of a text-format sparse reconstruction (cameras.txt, images.txt,
/// points3D.txt). Only PINHOLE and SIMPLE_PINHOLE cameras are accepted.
struct SparseReconstruction {
  struct Posed {
    int id = 0;
    int camera_id = 0;
    std::string name;
    Mat4 extrinsics = Mat4::Identity();  // world to camera, from (qw qx qy qz tx ty tz)
  };
  std::map<int, Intrinsics> cameras;
  std::vector<Posed> images;  // in file order
  std::vector<Vec3> points;
};

SparseReconstruction ingest_colmap(const std::filesystem::path& sparse_dir);

/// Writes the three tables with 17 significant digits. Rotations go through
/// unit quaternions, so poses round-trip to ~1e-15.
void export_colmap(const SparseReconstruction& rec, const std::filesystem::path& sparse_dir);

/// Manifest skeleton from a reconstruction: one shared camera required,
/// exposures looked up by image name, every `test_every`-th image held out
/// (0 disables held-out views).
DatasetManifest manifest_from_reconstruction(const SparseReconstruction& rec,
                                             const std::map<std::string, double>& exposure_by_name,
                                             const std::string& image_dir, int test_every = 0);

}  // namespace ddrgs
