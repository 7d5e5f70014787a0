#pragma once

#include <cstdint>
#include <vector>

#include "roitr/config.hpp"
#include "roitr/geom.hpp"
#include "roitr/tensor.hpp"

namespace roitr {

// Fraction of points in group_p with at least one ground-truth partner
// inside group_q.
double overlap_ratio(const std::vector<int64_t>& group_p, const std::vector<int64_t>& group_q,
                     const std::vector<IndexPair>& gt_pairs);

// Overlap matrix between every node group pair, evaluated in one pass.
Tensor overlap_matrix(const std::vector<std::vector<int64_t>>& groups_p,
                      const std::vector<std::vector<int64_t>>& groups_q,
                      const std::vector<IndexPair>& gt_pairs);

// Overlap-weighted circle loss on unit-normalized feature rows, averaged
// over both frames. Positive pairs have overlap > tau_r, negative pairs
// overlap == 0; per-sample weights are clamped at zero.
double circle_loss(const Tensor& features_p, const Tensor& features_q, const Tensor& overlap,
                   const LossConfig& cfg);

// Negative log-likelihood of a Sinkhorn assignment: matched entries plus
// both slack columns for unmatched points.
double point_nll_loss(const Tensor& assignment, const std::vector<IndexPair>& matched,
                      const std::vector<int64_t>& unmatched_p,
                      const std::vector<int64_t>& unmatched_q);

double total_loss(double superpoint_loss, double point_loss, double lambda);

}  // namespace roitr
