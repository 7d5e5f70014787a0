#include "roitr/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "roitr/linalg.hpp"

namespace roitr {

Tensor gaussian_correlation(const Tensor& features_p, const Tensor& features_q) {
    const int64_t n = features_p.dim(0), m = features_q.dim(0), c = features_p.dim(1);
    if (features_q.dim(1) != c)
        throw ShapeError("gaussian_correlation: feature widths differ");
    Tensor out({n, m});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        const double* xi = features_p.row(i);
        for (int64_t j = 0; j < m; ++j) {
            const double* yj = features_q.row(j);
            double d2 = 0.0;
            for (int64_t d = 0; d < c; ++d) {
                const double diff = xi[d] - yj[d];
                d2 += diff * diff;
            }
            out(i, j) = std::exp(-d2);
        }
    }
    return out;
}

Tensor dual_normalize(const Tensor& similarity) {
    similarity.require_finite("dual_normalize input");
    const int64_t n = similarity.dim(0), m = similarity.dim(1);
    std::vector<double> row_sum(static_cast<size_t>(n), 0.0);
    std::vector<double> col_sum(static_cast<size_t>(m), 0.0);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < m; ++j) {
            row_sum[static_cast<size_t>(i)] += similarity(i, j);
            col_sum[static_cast<size_t>(j)] += similarity(i, j);
        }
    for (int64_t i = 0; i < n; ++i)
        if (row_sum[static_cast<size_t>(i)] == 0.0)
            throw NumericError("dual_normalize: all-zero row " + std::to_string(i));
    for (int64_t j = 0; j < m; ++j)
        if (col_sum[static_cast<size_t>(j)] == 0.0)
            throw NumericError("dual_normalize: all-zero column " + std::to_string(j));
    Tensor out({n, m});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < m; ++j)
            out(i, j) = similarity(i, j) / row_sum[static_cast<size_t>(i)] * similarity(i, j) /
                        col_sum[static_cast<size_t>(j)];
    return out;
}

CorrespondenceSet top_k_superpoint_matches(const Tensor& normalized, int64_t k) {
    const int64_t n = normalized.dim(0), m = normalized.dim(1);
    if (k < 1 || k > n * m)
        throw ShapeError("top_k_superpoint_matches: k out of range");
    std::vector<int64_t> order(static_cast<size_t>(n * m));
    for (int64_t i = 0; i < n * m; ++i) order[static_cast<size_t>(i)] = i;
    const double* data = normalized.data();
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [data](int64_t a, int64_t b) {
                          if (data[a] != data[b]) return data[a] > data[b];
                          return a < b;  // (row, col) lexicographic on ties
                      });
    double max_val = 0.0;
    for (int64_t i = 0; i < n * m; ++i) max_val = std::max(max_val, data[i]);
    if (max_val <= 0.0) max_val = 1.0;
    CorrespondenceSet out;
    out.resolution = CorrespondenceResolution::kSuperpoint;
    out.pairs.reserve(static_cast<size_t>(k));
    for (int64_t r = 0; r < k; ++r) {
        const int64_t flat = order[static_cast<size_t>(r)];
        out.pairs.push_back({flat / m, flat % m, data[flat] / max_val});
    }
    return out;
}

Tensor sinkhorn(const Tensor& scores, double slack_alpha, int64_t iters) {
    if (iters < 1) throw ShapeError("sinkhorn: iters must be >= 1");
    scores.require_finite("sinkhorn scores");
    if (!std::isfinite(slack_alpha)) throw NumericError("sinkhorn: non-finite slack");
    const int64_t n = scores.dim(0), m = scores.dim(1);

    Tensor z({n + 1, m + 1});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < m; ++j) z(i, j) = scores(i, j);
    for (int64_t j = 0; j <= m; ++j) z(n, j) = slack_alpha;
    for (int64_t i = 0; i <= n; ++i) z(i, m) = slack_alpha;

    // Unit mass per real point; each slack bin can absorb the whole
    // opposite side.
    const double log_slack_row = std::log(static_cast<double>(m));
    const double log_slack_col = std::log(static_cast<double>(n));

    // The alternating logsumexp updates factor as log(sum_j exp(z - M) *
    // exp(v)); caching exp(z - M) leaves O(n + m) exponentials per sweep.
    double z_max = z[0];
    for (int64_t i = 0; i < z.size(); ++i) z_max = std::max(z_max, z[i]);
    Tensor ez({n + 1, m + 1});
    for (int64_t i = 0; i < z.size(); ++i) ez[i] = std::exp(z[i] - z_max);

    std::vector<double> u(static_cast<size_t>(n + 1), 0.0);
    std::vector<double> v(static_cast<size_t>(m + 1), 0.0);
    std::vector<double> eu(static_cast<size_t>(n + 1));
    std::vector<double> ev(static_cast<size_t>(m + 1));
    for (int64_t it = 0; it < iters; ++it) {
        for (int64_t i = 0; i <= n; ++i)
            eu[static_cast<size_t>(i)] = std::exp(u[static_cast<size_t>(i)]);
        for (int64_t j = 0; j <= m; ++j) {
            double sum = 0.0;
            for (int64_t i = 0; i <= n; ++i) sum += ez(i, j) * eu[static_cast<size_t>(i)];
            const double target = (j == m) ? log_slack_col : 0.0;
            v[static_cast<size_t>(j)] = target - z_max - std::log(sum);
        }
        for (int64_t j = 0; j <= m; ++j)
            ev[static_cast<size_t>(j)] = std::exp(v[static_cast<size_t>(j)] + z_max);
        for (int64_t i = 0; i <= n; ++i) {
            const double sum = kern::dot(ez.row(i), ev.data(), m + 1);
            const double target = (i == n) ? log_slack_row : 0.0;
            u[static_cast<size_t>(i)] = target - std::log(sum);
        }
    }

    Tensor out({n + 1, m + 1});
    for (int64_t i = 0; i <= n; ++i)
        for (int64_t j = 0; j <= m; ++j)
            out(i, j) = std::exp(z(i, j) + u[static_cast<size_t>(i)] + v[static_cast<size_t>(j)]);
    out.require_finite("sinkhorn assignment");
    return out;
}

namespace {

// Ranks of the top-k values in a sequence; ties resolved to lower index.
std::vector<bool> top_k_mask(const std::vector<double>& values, int64_t k) {
    const int64_t n = static_cast<int64_t>(values.size());
    std::vector<int64_t> order(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    const int64_t kk = std::min(k, n);
    std::partial_sort(order.begin(), order.begin() + kk, order.end(),
                      [&values](int64_t a, int64_t b) {
                          if (values[static_cast<size_t>(a)] != values[static_cast<size_t>(b)])
                              return values[static_cast<size_t>(a)] > values[static_cast<size_t>(b)];
                          return a < b;
                      });
    std::vector<bool> mask(static_cast<size_t>(n), false);
    for (int64_t i = 0; i < kk; ++i) mask[static_cast<size_t>(order[static_cast<size_t>(i)])] = true;
    return mask;
}

}  // namespace

CorrespondenceSet point_match_group(const Tensor& group_p, const Tensor& group_q,
                                    int64_t mutual_top_k, double min_confidence,
                                    double slack_alpha, int64_t sinkhorn_iters) {
    const int64_t n = group_p.dim(0), m = group_q.dim(0), c = group_p.dim(1);
    if (n < 1 || m < 1) throw ShapeError("point_match_group: empty group");
    if (group_q.dim(1) != c) throw ShapeError("point_match_group: feature widths differ");

    const double scale = 1.0 / std::sqrt(static_cast<double>(c));
    Tensor scores({n, m});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < m; ++j)
            scores(i, j) = kern::dot(group_p.row(i), group_q.row(j), c) * scale;

    const Tensor assignment = sinkhorn(scores, slack_alpha, sinkhorn_iters);

    CorrespondenceSet out;
    out.resolution = CorrespondenceResolution::kPoint;
    std::vector<double> row(static_cast<size_t>(m));
    std::vector<std::vector<bool>> row_top(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < m; ++j) row[static_cast<size_t>(j)] = assignment(i, j);
        row_top[static_cast<size_t>(i)] = top_k_mask(row, mutual_top_k);
    }
    std::vector<double> col(static_cast<size_t>(n));
    for (int64_t j = 0; j < m; ++j) {
        for (int64_t i = 0; i < n; ++i) col[static_cast<size_t>(i)] = assignment(i, j);
        const std::vector<bool> col_top = top_k_mask(col, mutual_top_k);
        for (int64_t i = 0; i < n; ++i) {
            const double conf = assignment(i, j);
            if (row_top[static_cast<size_t>(i)][static_cast<size_t>(j)] &&
                col_top[static_cast<size_t>(i)] && conf > min_confidence)
                out.pairs.push_back({i, j, conf});
        }
    }
    return out;
}

CorrespondenceSet coarse_to_fine(const CoarseToFineInput& input, const MatchConfig& cfg,
                                 MatchMode mode, double slack_alpha) {
    const Tensor& sp_p = *input.superpoints_p;
    const Tensor& sp_q = *input.superpoints_q;
    const int64_t np = sp_p.dim(0), nq = sp_q.dim(0);
    if (np < 1 || nq < 1) throw ShapeError("coarse_to_fine: need at least one superpoint per frame");

    Tensor feat_p = *input.superpoint_features_p;
    Tensor feat_q = *input.superpoint_features_q;
    l2_normalize_rows(feat_p);
    l2_normalize_rows(feat_q);
    const Tensor normalized = dual_normalize(gaussian_correlation(feat_p, feat_q));

    CorrespondenceSet coarse;
    int64_t mutual_top_k = cfg.mutual_top_k;
    if (mode == MatchMode::kRigid) {
        coarse = top_k_superpoint_matches(normalized,
                                          std::min(cfg.num_superpoint_corr, np * nq));
    } else {
        mutual_top_k = cfg.nonrigid_mutual_top_k;
        CorrespondenceSet candidates = top_k_superpoint_matches(
            normalized, std::min(cfg.num_superpoint_corr, np * nq));
        for (const auto& pr : candidates.pairs) {
            const double dist =
                (point_at(sp_p, pr.index_p) - point_at(sp_q, pr.index_q)).norm();
            if (dist < cfg.nonrigid_distance_gate) coarse.pairs.push_back(pr);
        }
        coarse.resolution = CorrespondenceResolution::kSuperpoint;
        if (static_cast<int64_t>(coarse.pairs.size()) < cfg.nonrigid_fallback_top) {
            coarse = top_k_superpoint_matches(normalized,
                                              std::min(cfg.nonrigid_fallback_top, np * nq));
        }
    }

    const std::vector<int64_t> assign_p = point_to_node(input.points_p->points, sp_p);
    const std::vector<int64_t> assign_q = point_to_node(input.points_q->points, sp_q);
    const auto groups_p = group_by_node(assign_p, np);
    const auto groups_q = group_by_node(assign_q, nq);

    const int64_t num_coarse = static_cast<int64_t>(coarse.pairs.size());
    std::vector<CorrespondenceSet> per_pair(static_cast<size_t>(num_coarse));
#pragma omp parallel for schedule(dynamic)
    for (int64_t l = 0; l < num_coarse; ++l) {
        const auto& gp = groups_p[static_cast<size_t>(coarse.pairs[static_cast<size_t>(l)].index_p)];
        const auto& gq = groups_q[static_cast<size_t>(coarse.pairs[static_cast<size_t>(l)].index_q)];
        if (gp.empty() || gq.empty()) continue;
        Tensor fp({static_cast<int64_t>(gp.size()), input.points_p->feature_width()});
        Tensor fq({static_cast<int64_t>(gq.size()), input.points_q->feature_width()});
        for (size_t i = 0; i < gp.size(); ++i)
            for (int64_t d = 0; d < fp.dim(1); ++d)
                fp(static_cast<int64_t>(i), d) = input.points_p->features(gp[i], d);
        for (size_t j = 0; j < gq.size(); ++j)
            for (int64_t d = 0; d < fq.dim(1); ++d)
                fq(static_cast<int64_t>(j), d) = input.points_q->features(gq[j], d);
        CorrespondenceSet local = point_match_group(fp, fq, mutual_top_k, cfg.min_confidence,
                                                    slack_alpha, cfg.sinkhorn_iters);
        for (auto& pr : local.pairs) {
            pr.index_p = gp[static_cast<size_t>(pr.index_p)];
            pr.index_q = gq[static_cast<size_t>(pr.index_q)];
        }
        per_pair[static_cast<size_t>(l)] = std::move(local);
    }

    // Merge in coarse-pair order so the result is independent of the
    // group evaluation schedule; duplicates keep the best confidence.
    std::map<std::pair<int64_t, int64_t>, double> merged;
    for (const auto& set : per_pair)
        for (const auto& pr : set.pairs) {
            auto key = std::make_pair(pr.index_p, pr.index_q);
            auto it = merged.find(key);
            if (it == merged.end())
                merged.emplace(key, pr.confidence);
            else
                it->second = std::max(it->second, pr.confidence);
        }

    CorrespondenceSet out;
    out.resolution = CorrespondenceResolution::kPoint;
    out.pairs.reserve(merged.size());
    for (const auto& [key, conf] : merged) out.pairs.push_back({key.first, key.second, conf});
    return out;
}

}  // namespace roitr
