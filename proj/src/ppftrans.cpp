#include "roitr/ppftrans.hpp"

#include <cmath>

#include "roitr/linalg.hpp"

namespace roitr {

PamWeights PamWeights::from(const ModelWeights& w, const std::string& prefix, double eps) {
    PamWeights p;
    p.w_coord = &w.get(prefix + ".w_coord");
    p.w_ctx = &w.get(prefix + ".w_ctx");
    p.w_q = &w.get(prefix + ".w_q");
    p.w_k = &w.get(prefix + ".w_k");
    p.w_v = &w.get(prefix + ".w_v");
    p.w_g = &w.get(prefix + ".w_g");
    p.w_e = &w.get(prefix + ".w_e");
    p.w_msg = &w.get(prefix + ".w_msg");
    p.w_out = &w.get(prefix + ".w_out");
    p.ln_gain = &w.get(prefix + ".ln_gain");
    p.ln_bias = &w.get(prefix + ".ln_bias");
    p.ln_eps = eps;
    return p;
}

namespace {

struct PamScratch {
    std::vector<double> ppfs;    // k x 4
    std::vector<double> geo;     // k x c
    std::vector<double> pos;     // k x c
    std::vector<double> q;       // c
    std::vector<double> attn;    // k
    std::vector<double> msg;     // c
    std::vector<double> fused;   // c
    std::vector<double> normed;  // c

    void resize(int64_t k, int64_t c) {
        ppfs.resize(static_cast<size_t>(k * 4));
        geo.resize(static_cast<size_t>(k * c));
        pos.resize(static_cast<size_t>(k * c));
        q.resize(static_cast<size_t>(c));
        attn.resize(static_cast<size_t>(k));
        msg.resize(static_cast<size_t>(c));
        fused.resize(static_cast<size_t>(c));
        normed.resize(static_cast<size_t>(c));
    }
};

// Precomputed per-call projections: context/key/value rows for the whole
// support set, and the coordinate projections folded into single 4 x c
// matrices so the PPF embedding never needs materializing per anchor.
struct PamSupport {
    Tensor ctx;      // m x c
    Tensor keys;     // m x c
    Tensor vals;     // m x c
    Tensor coord_g;  // 4 x c
    Tensor coord_e;  // 4 x c
};

void pam_anchor(int64_t i, const Tensor& anchor_pts, const Tensor& anchor_nrm,
                const PointCloudTriplet& support, const PamWeights& w, const PamSupport& pre,
                int64_t k, const NeighborIndex& nn, PamScratch& s, Tensor& out) {
    const int64_t c = w.w_q->dim(0);
    const int64_t c_out = w.w_out->dim(1);
    const Vec3 pa = point_at(anchor_pts, i);
    const Vec3 na = point_at(anchor_nrm, i);

    // Pose-agnostic coordinates of the neighborhood.
    for (int64_t j = 0; j < k; ++j) {
        const int64_t sj = nn.index(i, j);
        const auto f = ppf(pa, na, point_at(support.points, sj), point_at(support.normals, sj));
        for (int64_t d = 0; d < 4; ++d) s.ppfs[static_cast<size_t>(j * 4 + d)] = f[d];
    }
    kern::matmul(s.ppfs.data(), pre.coord_g.data(), s.geo.data(), k, 4, c);
    kern::matmul(s.ppfs.data(), pre.coord_e.data(), s.pos.data(), k, 4, c);

    // Initial description comes from the nearest support point.
    const int64_t nearest = nn.index(i, 0);
    const double* xs = pre.ctx.row(nearest);
    kern::matmul(xs, w.w_q->data(), s.q.data(), 1, c, c);

    const double scale = 1.0 / std::sqrt(static_cast<double>(c));
    for (int64_t j = 0; j < k; ++j)
        s.attn[static_cast<size_t>(j)] =
            (kern::dot(s.q.data(), s.pos.data() + j * c, c) +
             kern::dot(s.q.data(), pre.keys.row(nn.index(i, j)), c)) *
            scale;
    kern::softmax_row(s.attn.data(), k);

    // m = a G + a V
    for (int64_t d = 0; d < c; ++d) s.msg[static_cast<size_t>(d)] = 0.0;
    for (int64_t j = 0; j < k; ++j) {
        const double a = s.attn[static_cast<size_t>(j)];
        const double* g = s.geo.data() + j * c;
        const double* v = pre.vals.row(nn.index(i, j));
        for (int64_t d = 0; d < c; ++d) s.msg[static_cast<size_t>(d)] += a * (g[d] + v[d]);
    }

    kern::matmul(s.msg.data(), w.w_msg->data(), s.fused.data(), 1, c, c);
    for (int64_t d = 0; d < c; ++d) s.fused[static_cast<size_t>(d)] += xs[d];
    kern::layer_norm_row(s.fused.data(), w.ln_gain->data(), w.ln_bias->data(), w.ln_eps,
                         s.normed.data(), c);
    kern::matmul(s.normed.data(), w.w_out->data(), out.row(i), 1, c, c_out);
}

}  // namespace

Tensor pam(const Tensor& anchor_pts, const Tensor& anchor_nrm, const PointCloudTriplet& support,
           const PamWeights& w, int64_t k) {
    const int64_t a = anchor_pts.dim(0);
    const int64_t m = support.size();
    if (k > m)
        throw ShapeError("pam: k = " + std::to_string(k) + " exceeds support size " +
                         std::to_string(m));
    if (support.feature_width() != w.w_ctx->dim(0))
        throw ShapeError("pam: support feature width does not match w_ctx");
    const NeighborIndex nn = knn(anchor_pts, support.points, k);

    PamSupport pre;
    pre.ctx = matmul(support.features, *w.w_ctx);
    pre.keys = matmul(pre.ctx, *w.w_k);
    pre.vals = matmul(pre.ctx, *w.w_v);
    pre.coord_g = matmul(*w.w_coord, *w.w_g);
    pre.coord_e = matmul(*w.w_coord, *w.w_e);

    Tensor out({a, w.w_out->dim(1)});
#pragma omp parallel
    {
        PamScratch scratch;
        scratch.resize(k, w.w_q->dim(0));
#pragma omp for schedule(static)
        for (int64_t i = 0; i < a; ++i)
            pam_anchor(i, anchor_pts, anchor_nrm, support, w, pre, k, nn, scratch, out);
    }
    return out;
}

PointCloudTriplet aal(const PointCloudTriplet& support, int64_t m, const PamWeights& w,
                      int64_t k) {
    if (m > support.size()) throw ShapeError("aal: cannot sample more anchors than support points");
    // Geometric start keeps FPS equivariant under point permutation.
    const int64_t seed = centroid_farthest_index(support.points);
    const std::vector<int64_t> idx = farthest_point_sample(support.points, m, seed);
    PointCloudTriplet anchor;
    anchor.points = Tensor({m, 3});
    anchor.normals = Tensor({m, 3});
    for (int64_t i = 0; i < m; ++i) {
        set_point(anchor.points, i, point_at(support.points, idx[static_cast<size_t>(i)]));
        set_point(anchor.normals, i, point_at(support.normals, idx[static_cast<size_t>(i)]));
    }
    anchor.features = pam(anchor.points, anchor.normals, support, w, k);
    return anchor;
}

PointCloudTriplet pal(const PointCloudTriplet& triplet, const PamWeights& w,
                      const Tensor& ln_gain, const Tensor& ln_bias, int64_t k) {
    if (w.w_ctx->dim(0) != w.w_out->dim(1))
        throw ShapeError("pal: feature width must be preserved");
    Tensor delta = pam(triplet.points, triplet.normals, triplet, w, k);
    Tensor normed = layer_norm(delta, ln_gain, ln_bias, w.ln_eps);
    PointCloudTriplet out;
    out.points = triplet.points;
    out.normals = triplet.normals;
    out.features = relu(add(triplet.features, normed));
    return out;
}

PointCloudTriplet tul(const PointCloudTriplet& anchor, const PointCloudTriplet& support_skip,
                      const Tensor& zeta1, const Tensor& zeta2, int64_t interp_k) {
    const int64_t n = support_skip.size();
    const int64_t ca = anchor.feature_width();
    if (interp_k > anchor.size())
        throw ShapeError("tul: interpolation k exceeds anchor count");
    const NeighborIndex nn = knn(support_skip.points, anchor.points, interp_k);
    Tensor interp({n, ca});
#pragma omp parallel
    {
        Tensor nbr_pts({interp_k, 3});
#pragma omp for schedule(static)
        for (int64_t j = 0; j < n; ++j) {
            for (int64_t a = 0; a < interp_k; ++a)
                set_point(nbr_pts, a, point_at(anchor.points, nn.index(j, a)));
            const std::vector<double> wts =
                inverse_distance_weights(point_at(support_skip.points, j), nbr_pts);
            double* out_row = interp.row(j);
            for (int64_t a = 0; a < interp_k; ++a) {
                const double* f = anchor.features.row(nn.index(j, a));
                const double wa = wts[static_cast<size_t>(a)];
                for (int64_t d = 0; d < ca; ++d) out_row[d] += wa * f[d];
            }
        }
    }
    PointCloudTriplet out;
    out.points = support_skip.points;
    out.normals = support_skip.normals;
    out.features = add(matmul(support_skip.features, zeta1), matmul(interp, zeta2));
    return out;
}

EncoderOutput run_encoder(const PointCloudTriplet& input, const ModelWeights& w,
                          const PipelineConfig& config) {
    input.validate("encoder input");
    const int64_t n = input.size();
    if (n < config.min_points())
        throw ShapeError("encoder: input has " + std::to_string(n) + " points, plan needs >= " +
                         std::to_string(config.min_points()));
    EncoderOutput out;
    PointCloudTriplet current = input;
    int64_t count = n;
    for (size_t b = 0; b < config.encoder.size(); ++b) {
        const std::string base = "enc.block" + std::to_string(b + 1);
        count /= config.encoder[b].downsample_ratio;
        const PamWeights aal_w = PamWeights::from(w, base + ".aal.pam", config.layer_norm_eps);
        current = aal(current, count, aal_w, config.k_neighbors);
        for (int64_t l = 0; l < config.encoder[b].num_pal; ++l) {
            const std::string pal_base = base + ".pal" + std::to_string(l + 1);
            const PamWeights pal_w = PamWeights::from(w, pal_base + ".pam", config.layer_norm_eps);
            current = pal(current, pal_w, w.get(pal_base + ".ln_gain"),
                          w.get(pal_base + ".ln_bias"), config.k_neighbors);
        }
        out.skips.push_back(current);
    }
    out.superpoints = current;
    out.superpoints.features.require_finite("encoder output features");
    return out;
}

PointCloudTriplet run_decoder(const EncoderOutput& encoded, const ModelWeights& w,
                              const PipelineConfig& config) {
    const size_t nblocks = config.encoder.size();
    if (encoded.skips.size() != nblocks)
        throw ShapeError("decoder: skip count does not match the encoder plan");
    PointCloudTriplet current = encoded.superpoints;
    for (size_t b = nblocks; b-- > 0;) {
        const std::string base = "dec.block" + std::to_string(b + 1);
        const PointCloudTriplet& skip = encoded.skips[b];
        // The deepest block runs at its own resolution; every point is an
        // exact hit, so one interpolation neighbor suffices.
        const int64_t interp_k = (b + 1 == nblocks) ? 1 : config.tul_k;
        current = tul(current, skip, w.get(base + ".tul.zeta1"), w.get(base + ".tul.zeta2"),
                      interp_k);
        for (int64_t l = 0; l < config.encoder[b].num_pal; ++l) {
            const std::string pal_base = base + ".pal" + std::to_string(l + 1);
            const PamWeights pal_w = PamWeights::from(w, pal_base + ".pam", config.layer_norm_eps);
            current = pal(current, pal_w, w.get(pal_base + ".ln_gain"),
                          w.get(pal_base + ".ln_bias"), config.k_neighbors);
        }
    }
    current.features.require_finite("decoder output features");
    return current;
}

namespace serial {

Tensor pam(const Tensor& anchor_pts, const Tensor& anchor_nrm, const PointCloudTriplet& support,
           const PamWeights& w, int64_t k) {
    const int64_t a = anchor_pts.dim(0);
    if (k > support.size()) throw ShapeError("pam: k exceeds support size");
    const NeighborIndex nn = serial::knn(anchor_pts, support.points, k);
    const int64_t c = w.w_q->dim(0);
    Tensor out({a, w.w_out->dim(1)});
    for (int64_t i = 0; i < a; ++i) {
        Tensor ppfs({k, 4});
        Tensor nbr_feat({k, support.feature_width()});
        for (int64_t j = 0; j < k; ++j) {
            const int64_t sj = nn.index(i, j);
            const auto f = ppf(point_at(anchor_pts, i), point_at(anchor_nrm, i),
                               point_at(support.points, sj), point_at(support.normals, sj));
            for (int64_t d = 0; d < 4; ++d) ppfs(j, d) = f[d];
            for (int64_t d = 0; d < support.feature_width(); ++d)
                nbr_feat(j, d) = support.features(sj, d);
        }
        Tensor x_init({1, support.feature_width()});
        for (int64_t d = 0; d < support.feature_width(); ++d)
            x_init(0, d) = support.features(nn.index(i, 0), d);

        Tensor es = serial::matmul(ppfs, *w.w_coord);
        Tensor xs = serial::matmul(x_init, *w.w_ctx);
        Tensor ctx = serial::matmul(nbr_feat, *w.w_ctx);
        Tensor q = serial::matmul(xs, *w.w_q);
        Tensor keys = serial::matmul(ctx, *w.w_k);
        Tensor vals = serial::matmul(ctx, *w.w_v);
        Tensor geo = serial::matmul(es, *w.w_g);
        Tensor pos = serial::matmul(es, *w.w_e);

        Tensor scores({1, k});
        const double scale = 1.0 / std::sqrt(static_cast<double>(c));
        for (int64_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (int64_t d = 0; d < c; ++d) s += q(0, d) * (pos(j, d) + keys(j, d));
            scores(0, j) = s * scale;
        }
        Tensor attn = serial::softmax_rows(scores);

        Tensor msg({1, c});
        for (int64_t j = 0; j < k; ++j)
            for (int64_t d = 0; d < c; ++d) msg(0, d) += attn(0, j) * (geo(j, d) + vals(j, d));

        Tensor fused = serial::matmul(msg, *w.w_msg);
        for (int64_t d = 0; d < c; ++d) fused(0, d) += xs(0, d);
        Tensor normed = serial::layer_norm(fused, *w.ln_gain, *w.ln_bias, w.ln_eps);
        Tensor row = serial::matmul(normed, *w.w_out);
        for (int64_t d = 0; d < row.dim(1); ++d) out(i, d) = row(0, d);
    }
    return out;
}

}  // namespace serial

}  // namespace roitr
