#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "roitr/config.hpp"
#include "roitr/geom.hpp"
#include "roitr/matcher.hpp"

namespace roitr {

// Rigid pairs carry a transform; deformable pairs a per-point flow field
// over the source cloud. Both carry exact ground-truth correspondences.
struct GroundTruth {
    std::optional<RigidTransform> transform;
    std::optional<Tensor> flow;  // n x 3
    std::vector<IndexPair> pairs;

    void validate() const;
};

struct InlierRatioResult {
    double value = 0.0;
    bool empty_input = false;  // warning flag: no correspondences given
};

InlierRatioResult inlier_ratio(const CorrespondenceSet& corr, const Tensor& points_p,
                               const Tensor& points_q, const RigidTransform& gt, double tau_1);

// Fraction of pairs whose inlier ratio strictly exceeds tau_2.
double feature_matching_recall(const std::vector<double>& per_pair_ir, double tau_2);

// Weighted least-squares rigid alignment via SVD with determinant
// correction; minimizes sum w ||R src + t - dst||^2.
RigidTransform kabsch(const Tensor& src, const Tensor& dst, const std::vector<double>& weights);

struct RansacResult {
    RigidTransform transform;
    std::vector<bool> inlier_mask;
    int64_t inlier_count = 0;
};

// Seeded 3-point hypothesize-and-verify with a final Kabsch refit on the
// best consensus set. Deterministic given the seed.
RansacResult ransac_registration(const CorrespondenceSet& corr, const Tensor& points_p,
                                 const Tensor& points_q, double inlier_dist, int64_t max_iters,
                                 uint64_t seed);

enum class RmseVariant { kCorrespondence, kTransformDiscrepancy };

// Variant 1: RMSE of estimated-transform residuals over ground-truth
// correspondences. Variant 2: RMSE between the estimated and true
// transforms over the source points (sqrt-of-mean by default; set
// literal_prefactor for the (1/n)*sqrt(sum) form).
double registration_rmse(const RigidTransform& estimate, const GroundTruth& gt,
                         const Tensor& points_p, const Tensor& points_q, RmseVariant variant,
                         bool literal_prefactor = false);

double registration_recall(const std::vector<double>& per_pair_rmse, double tau_3);

// Non-rigid recall: putative flows interpolated onto ground-truth sources
// with inverse-distance weights over the k nearest putative points.
// Duplicate putative pairs are ignored.
double nfmr(const CorrespondenceSet& putative, const std::vector<IndexPair>& gt_pairs,
            const Tensor& points_p, const Tensor& points_q, const MetricsConfig& cfg,
            bool* empty_warning = nullptr);

}  // namespace roitr
