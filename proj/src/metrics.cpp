#include "roitr/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace roitr {

void GroundTruth::validate() const {
    if (transform.has_value() == flow.has_value())
        throw ShapeError("ground truth: exactly one of transform/flow must be present");
    if (transform && !transform->is_orthonormal())
        throw NumericError("ground truth: transform is not a proper rotation");
}

InlierRatioResult inlier_ratio(const CorrespondenceSet& corr, const Tensor& points_p,
                               const Tensor& points_q, const RigidTransform& gt, double tau_1) {
    InlierRatioResult result;
    if (corr.pairs.empty()) {
        result.empty_input = true;
        return result;
    }
    int64_t inliers = 0;
    for (const auto& pr : corr.pairs) {
        const Vec3 moved = gt.apply(point_at(points_p, pr.index_p));
        if ((moved - point_at(points_q, pr.index_q)).norm() < tau_1) ++inliers;
    }
    result.value = static_cast<double>(inliers) / static_cast<double>(corr.pairs.size());
    return result;
}

double feature_matching_recall(const std::vector<double>& per_pair_ir, double tau_2) {
    if (per_pair_ir.empty()) throw ShapeError("feature_matching_recall: empty input");
    int64_t hits = 0;
    for (double ir : per_pair_ir)
        if (ir > tau_2) ++hits;
    return static_cast<double>(hits) / static_cast<double>(per_pair_ir.size());
}

RigidTransform kabsch(const Tensor& src, const Tensor& dst, const std::vector<double>& weights) {
    const int64_t n = src.dim(0);
    if (n < 3) throw ShapeError("kabsch: need at least 3 points");
    if (dst.dim(0) != n || static_cast<int64_t>(weights.size()) != n)
        throw ShapeError("kabsch: size mismatch");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ShapeError("kabsch: negative weight");
        wsum += w;
    }
    if (wsum <= 0.0) throw ShapeError("kabsch: weights sum to zero");

    Eigen::Vector3d centroid_src = Eigen::Vector3d::Zero();
    Eigen::Vector3d centroid_dst = Eigen::Vector3d::Zero();
    for (int64_t i = 0; i < n; ++i) {
        centroid_src += weights[static_cast<size_t>(i)] *
                        Eigen::Vector3d(src(i, 0), src(i, 1), src(i, 2));
        centroid_dst += weights[static_cast<size_t>(i)] *
                        Eigen::Vector3d(dst(i, 0), dst(i, 1), dst(i, 2));
    }
    centroid_src /= wsum;
    centroid_dst /= wsum;

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int64_t i = 0; i < n; ++i) {
        const Eigen::Vector3d a =
            Eigen::Vector3d(src(i, 0), src(i, 1), src(i, 2)) - centroid_src;
        const Eigen::Vector3d b =
            Eigen::Vector3d(dst(i, 0), dst(i, 1), dst(i, 2)) - centroid_dst;
        cov += weights[static_cast<size_t>(i)] * a * b.transpose();
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues()(1) < 1e-12 * std::max(1.0, svd.singularValues()(0)))
        throw NumericError("kabsch: rank-deficient configuration");
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Eigen::Matrix3d rot = svd.matrixV() * d * svd.matrixU().transpose();
    const Eigen::Vector3d trans = centroid_dst - rot * centroid_src;

    RigidTransform out = RigidTransform::identity();
    for (int64_t i = 0; i < 3; ++i) {
        for (int64_t j = 0; j < 3; ++j) out.rotation(i, j) = rot(i, j);
        out.translation[i] = trans(i);
    }
    return out;
}

RansacResult ransac_registration(const CorrespondenceSet& corr, const Tensor& points_p,
                                 const Tensor& points_q, double inlier_dist, int64_t max_iters,
                                 uint64_t seed) {
    const int64_t n = static_cast<int64_t>(corr.pairs.size());
    if (n < 3) throw ShapeError("ransac_registration: need at least 3 correspondences");

    Tensor src({n, 3}), dst({n, 3});
    for (int64_t i = 0; i < n; ++i) {
        set_point(src, i, point_at(points_p, corr.pairs[static_cast<size_t>(i)].index_p));
        set_point(dst, i, point_at(points_q, corr.pairs[static_cast<size_t>(i)].index_q));
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int64_t> pick(0, n - 1);
    const std::vector<double> unit3(3, 1.0);
    Tensor s3({3, 3}), d3({3, 3});

    int64_t best_count = 0;
    std::vector<bool> best_mask;
    const int64_t iters = (n == 3) ? 1 : max_iters;
    for (int64_t it = 0; it < iters; ++it) {
        int64_t a = pick(rng), b = pick(rng), c = pick(rng);
        if (n > 3 && (a == b || a == c || b == c)) continue;
        if (n == 3) (a = 0, b = 1, c = 2);
        for (int64_t j = 0; j < 3; ++j) {
            s3(0, j) = src(a, j);
            s3(1, j) = src(b, j);
            s3(2, j) = src(c, j);
            d3(0, j) = dst(a, j);
            d3(1, j) = dst(b, j);
            d3(2, j) = dst(c, j);
        }
        RigidTransform hyp;
        try {
            hyp = kabsch(s3, d3, unit3);
        } catch (const NumericError&) {
            continue;  // collinear sample
        }
        int64_t count = 0;
        for (int64_t i = 0; i < n; ++i) {
            const Vec3 moved = hyp.apply(point_at(src, i));
            if ((moved - point_at(dst, i)).norm() < inlier_dist) ++count;
        }
        if (count > best_count) {
            best_count = count;
            best_mask.assign(static_cast<size_t>(n), false);
            for (int64_t i = 0; i < n; ++i) {
                const Vec3 moved = hyp.apply(point_at(src, i));
                best_mask[static_cast<size_t>(i)] =
                    (moved - point_at(dst, i)).norm() < inlier_dist;
            }
        }
    }
    if (best_count < 3)
        throw NumericError("ransac_registration: no hypothesis reached 3 inliers");

    Tensor cs({best_count, 3}), cd({best_count, 3});
    int64_t r = 0;
    for (int64_t i = 0; i < n; ++i) {
        if (!best_mask[static_cast<size_t>(i)]) continue;
        set_point(cs, r, point_at(src, i));
        set_point(cd, r, point_at(dst, i));
        ++r;
    }
    RansacResult result;
    result.transform = kabsch(cs, cd, std::vector<double>(static_cast<size_t>(best_count), 1.0));
    result.inlier_mask = std::move(best_mask);
    result.inlier_count = best_count;
    return result;
}

double registration_rmse(const RigidTransform& estimate, const GroundTruth& gt,
                         const Tensor& points_p, const Tensor& points_q, RmseVariant variant,
                         bool literal_prefactor) {
    if (variant == RmseVariant::kCorrespondence) {
        if (gt.pairs.empty()) throw ShapeError("registration_rmse: empty ground-truth pairs");
        double sum = 0.0;
        for (const auto& [u, v] : gt.pairs) {
            const Vec3 moved = estimate.apply(point_at(points_p, u));
            sum += (moved - point_at(points_q, v)).squared_norm();
        }
        return std::sqrt(sum / static_cast<double>(gt.pairs.size()));
    }
    if (!gt.transform) throw ShapeError("registration_rmse: variant 2 needs a rigid ground truth");
    const int64_t n = points_p.dim(0);
    double sum = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const Vec3 p = point_at(points_p, i);
        sum += (estimate.apply(p) - gt.transform->apply(p)).squared_norm();
    }
    if (literal_prefactor) return std::sqrt(sum) / static_cast<double>(n);
    return std::sqrt(sum / static_cast<double>(n));
}

double registration_recall(const std::vector<double>& per_pair_rmse, double tau_3) {
    if (per_pair_rmse.empty()) throw ShapeError("registration_recall: empty input");
    int64_t hits = 0;
    for (double rmse : per_pair_rmse)
        if (rmse < tau_3) ++hits;
    return static_cast<double>(hits) / static_cast<double>(per_pair_rmse.size());
}

double nfmr(const CorrespondenceSet& putative, const std::vector<IndexPair>& gt_pairs,
            const Tensor& points_p, const Tensor& points_q, const MetricsConfig& cfg,
            bool* empty_warning) {
    if (empty_warning) *empty_warning = false;
    if (gt_pairs.empty()) throw ShapeError("nfmr: empty ground-truth pairs");
    // Duplicates carry no information and would skew the k-NN pool.
    std::set<std::pair<int64_t, int64_t>> unique;
    for (const auto& pr : putative.pairs) unique.emplace(pr.index_p, pr.index_q);
    if (unique.empty()) {
        if (empty_warning) *empty_warning = true;
        return 0.0;
    }
    const int64_t np = static_cast<int64_t>(unique.size());
    Tensor sources({np, 3});
    Tensor flows({np, 3});
    int64_t r = 0;
    for (const auto& [u, v] : unique) {
        const Vec3 pu = point_at(points_p, u);
        set_point(sources, r, pu);
        set_point(flows, r, point_at(points_q, v) - pu);
        ++r;
    }
    const int64_t k = std::min<int64_t>(cfg.nfmr_k, np);
    const NeighborIndex nn = [&] {
        Tensor gt_src({static_cast<int64_t>(gt_pairs.size()), 3});
        for (size_t i = 0; i < gt_pairs.size(); ++i)
            set_point(gt_src, static_cast<int64_t>(i), point_at(points_p, gt_pairs[i].first));
        return knn(gt_src, sources, k);
    }();

    int64_t hits = 0;
    Tensor nbr({k, 3});
    for (size_t i = 0; i < gt_pairs.size(); ++i) {
        const auto& [u, v] = gt_pairs[i];
        const Vec3 pu = point_at(points_p, u);
        for (int64_t a = 0; a < k; ++a)
            set_point(nbr, a, point_at(sources, nn.index(static_cast<int64_t>(i), a)));
        const std::vector<double> w = inverse_distance_weights(pu, nbr);
        Vec3 interp{};
        for (int64_t a = 0; a < k; ++a)
            interp = interp + point_at(flows, nn.index(static_cast<int64_t>(i), a)) *
                                  w[static_cast<size_t>(a)];
        const Vec3 gt_flow = point_at(points_q, v) - pu;
        if ((interp - gt_flow).norm() < cfg.flow_dist) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(gt_pairs.size());
}

}  // namespace roitr
