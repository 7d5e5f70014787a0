#include "roitr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "roitr/linalg.hpp"

namespace roitr {

double overlap_ratio(const std::vector<int64_t>& group_p, const std::vector<int64_t>& group_q,
                     const std::vector<IndexPair>& gt_pairs) {
    if (group_p.empty()) throw ShapeError("overlap_ratio: empty anchor group");
    const std::set<int64_t> q_members(group_q.begin(), group_q.end());
    std::set<int64_t> covered;
    for (const auto& [u, v] : gt_pairs)
        if (q_members.count(v)) covered.insert(u);
    int64_t hits = 0;
    for (int64_t u : group_p)
        if (covered.count(u)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(group_p.size());
}

Tensor overlap_matrix(const std::vector<std::vector<int64_t>>& groups_p,
                      const std::vector<std::vector<int64_t>>& groups_q,
                      const std::vector<IndexPair>& gt_pairs) {
    const int64_t np = static_cast<int64_t>(groups_p.size());
    const int64_t nq = static_cast<int64_t>(groups_q.size());
    Tensor out({np, nq});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < np; ++i) {
        if (groups_p[static_cast<size_t>(i)].empty()) continue;  // row stays zero
        for (int64_t j = 0; j < nq; ++j)
            out(i, j) = overlap_ratio(groups_p[static_cast<size_t>(i)],
                                      groups_q[static_cast<size_t>(j)], gt_pairs);
    }
    return out;
}

namespace {

void check_unit_rows(const Tensor& f, const char* which) {
    for (int64_t i = 0; i < f.dim(0); ++i) {
        const double n2 = kern::dot(f.row(i), f.row(i), f.dim(1));
        if (std::abs(n2 - 1.0) > 2e-6)
            throw NumericError(std::string("circle_loss: ") + which + " row " +
                               std::to_string(i) + " is not unit-normalized");
    }
}

// One frame's half of the loss; `row_major` selects whether anchors run
// over rows (P side) or columns (Q side) of the overlap matrix.
double circle_loss_one_side(const Tensor& fa, const Tensor& fb, const Tensor& overlap,
                            bool anchors_are_rows, const LossConfig& cfg) {
    const int64_t na = fa.dim(0), nb = fb.dim(0), c = fa.dim(1);
    double total = 0.0;
    for (int64_t i = 0; i < na; ++i) {
        double pos_sum = 0.0, neg_sum = 0.0;
        bool has_pos = false, has_neg = false;
        for (int64_t j = 0; j < nb; ++j) {
            const double r = anchors_are_rows ? overlap(i, j) : overlap(j, i);
            double d2 = 0.0;
            for (int64_t k = 0; k < c; ++k) {
                const double diff = fa(i, k) - fb(j, k);
                d2 += diff * diff;
            }
            const double d = std::sqrt(d2);
            if (r > cfg.tau_r) {
                const double beta = std::max(0.0, cfg.gamma * (d - cfg.delta_e));
                pos_sum += std::exp(r * beta * (d - cfg.delta_e));
                has_pos = true;
            } else if (r == 0.0) {
                const double beta = std::max(0.0, cfg.gamma * (cfg.delta_f - d));
                neg_sum += std::exp(beta * (cfg.delta_f - d));
                has_neg = true;
            }
        }
        if (has_pos && has_neg) total += std::log1p(pos_sum * neg_sum);
    }
    return total / static_cast<double>(na);
}

}  // namespace

double circle_loss(const Tensor& features_p, const Tensor& features_q, const Tensor& overlap,
                   const LossConfig& cfg) {
    if (overlap.dim(0) != features_p.dim(0) || overlap.dim(1) != features_q.dim(0))
        throw ShapeError("circle_loss: overlap matrix shape mismatch");
    check_unit_rows(features_p, "P features");
    check_unit_rows(features_q, "Q features");
    const double loss_p = circle_loss_one_side(features_p, features_q, overlap, true, cfg);
    const double loss_q = circle_loss_one_side(features_q, features_p, overlap, false, cfg);
    return 0.5 * (loss_p + loss_q);
}

double point_nll_loss(const Tensor& assignment, const std::vector<IndexPair>& matched,
                      const std::vector<int64_t>& unmatched_p,
                      const std::vector<int64_t>& unmatched_q) {
    const int64_t rows = assignment.dim(0), cols = assignment.dim(1);
    const int64_t slack_row = rows - 1, slack_col = cols - 1;
    auto prob = [&](int64_t i, int64_t j) {
        if (i < 0 || i >= rows || j < 0 || j >= cols)
            throw ShapeError("point_nll_loss: index out of range");
        const double p = assignment(i, j);
        if (!(p > 0.0))
            throw NumericError("point_nll_loss: zero probability at (" + std::to_string(i) +
                               ", " + std::to_string(j) + ")");
        return p;
    };
    double loss = 0.0;
    for (const auto& [u, v] : matched) loss -= std::log(prob(u, v));
    for (int64_t u : unmatched_p) loss -= std::log(prob(u, slack_col));
    for (int64_t v : unmatched_q) loss -= std::log(prob(slack_row, v));
    return loss;
}

double total_loss(double superpoint_loss, double point_loss, double lambda) {
    if (!std::isfinite(superpoint_loss) || !std::isfinite(point_loss))
        throw NumericError("total_loss: non-finite inputs");
    return superpoint_loss + lambda * point_loss;
}

}  // namespace roitr
