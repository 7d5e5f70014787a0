#pragma once

#include <optional>
#include <string>

#include "roitr/geom.hpp"
#include "roitr/matcher.hpp"
#include "roitr/metrics.hpp"

namespace roitr {

struct LoadedCloud {
    Tensor points;                  // n x 3
    std::optional<Tensor> normals;  // n x 3 when the file carries them
};

// Text format: one point per line, "x y z [nx ny nz]", '#' comments.
// ".ply" files go through the ASCII PLY reader instead.
LoadedCloud load_cloud(const std::string& path);
void save_cloud(const std::string& path, const Tensor& points, const Tensor* normals);

LoadedCloud load_cloud_text(const std::string& path);
LoadedCloud load_cloud_ply(const std::string& path);

struct CorrespondenceHeader {
    std::string cloud_a;
    std::string cloud_b;
    std::string config_hash;
    std::string resolution = "point";
};

// One "u v confidence" line per pair, preceded by a '#'-prefixed JSON
// header carrying the cloud paths and config hash.
void save_correspondences(const std::string& path, const CorrespondenceSet& corr,
                          const CorrespondenceHeader& header);
std::pair<CorrespondenceSet, CorrespondenceHeader> load_correspondences(const std::string& path);

// Ground-truth JSON: rigid transform (row-major R, t) or per-point flow,
// plus exact index pairs.
void save_ground_truth(const std::string& path, const GroundTruth& gt);
GroundTruth load_ground_truth(const std::string& path);

}  // namespace roitr
