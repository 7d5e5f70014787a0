#pragma once

#include <cstdint>
#include <vector>

#include "roitr/config.hpp"
#include "roitr/geom.hpp"
#include "roitr/tensor.hpp"

namespace roitr {

enum class CorrespondenceResolution { kSuperpoint, kPoint };

struct Correspondence {
    int64_t index_p = 0;
    int64_t index_q = 0;
    double confidence = 0.0;
};

struct CorrespondenceSet {
    std::vector<Correspondence> pairs;
    CorrespondenceResolution resolution = CorrespondenceResolution::kPoint;
};

// S(i, j) = exp(-||x_i - y_j||^2) on unit-normalized feature rows;
// larger means more similar.
Tensor gaussian_correlation(const Tensor& features_p, const Tensor& features_q);

// Product of the row-normalized and column-normalized matrices.
Tensor dual_normalize(const Tensor& similarity);

// Globally largest k entries, ties by (row, col); confidences rescaled
// into [0, 1] by the maximum entry.
CorrespondenceSet top_k_superpoint_matches(const Tensor& normalized, int64_t k);

// Log-domain Sinkhorn on the slack-augmented score matrix. Real rows and
// columns carry unit mass; each slack bin absorbs the opposite side's
// total. Returns the (n+1) x (m+1) assignment in probability space.
Tensor sinkhorn(const Tensor& scores, double slack_alpha, int64_t iters);

// Matches two point groups: scaled dot-product scores, Sinkhorn, then
// mutual top-k entries above the confidence floor. Indices are local to
// the groups.
CorrespondenceSet point_match_group(const Tensor& group_p, const Tensor& group_q,
                                    int64_t mutual_top_k, double min_confidence,
                                    double slack_alpha, int64_t sinkhorn_iters);

struct CoarseToFineInput {
    const Tensor* superpoint_features_p;  // n' x c, already globally enhanced
    const Tensor* superpoint_features_q;
    const Tensor* superpoints_p;  // n' x 3
    const Tensor* superpoints_q;
    const PointCloudTriplet* points_p;  // decoded triplet
    const PointCloudTriplet* points_q;
};

// Superpoint matching followed by per-group point matching; duplicate
// point pairs keep their highest confidence.
CorrespondenceSet coarse_to_fine(const CoarseToFineInput& input, const MatchConfig& cfg,
                                 MatchMode mode, double slack_alpha);

}  // namespace roitr
