#include "roitr/global_transformer.hpp"

#include <algorithm>
#include <cmath>

#include "roitr/linalg.hpp"

namespace roitr {

namespace {

// Frequency table 1 / 10000^(2l/c) for l = 0 .. c/2-1.
std::vector<double> sinusoid_frequencies(int64_t c) {
    std::vector<double> freq(static_cast<size_t>(c / 2));
    for (int64_t l = 0; l < c / 2; ++l)
        freq[static_cast<size_t>(l)] =
            std::pow(10000.0, -2.0 * static_cast<double>(l) / static_cast<double>(c));
    return freq;
}

void write_sinusoid(double value, const std::vector<double>& freq, double* out) {
    for (size_t l = 0; l < freq.size(); ++l) {
        out[2 * l] = std::sin(value * freq[l]);
        out[2 * l + 1] = std::cos(value * freq[l]);
    }
}

}  // namespace

Tensor sinusoidal_distance_embed(const Tensor& superpoints, int64_t c, double sigma_d) {
    if (c % 2 != 0) throw ShapeError("sinusoidal_distance_embed: channel count must be even");
    if (sigma_d <= 0.0) throw ShapeError("sinusoidal_distance_embed: sigma_d must be > 0");
    const int64_t n = superpoints.dim(0);
    const std::vector<double> freq = sinusoid_frequencies(c);
    Tensor out({n, n, c});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        const Vec3 pi = point_at(superpoints, i);
        for (int64_t j = 0; j < n; ++j) {
            const double rho = (point_at(superpoints, j) - pi).norm();
            write_sinusoid(rho / sigma_d, freq, out.data() + (i * n + j) * c);
        }
    }
    return out;
}

Tensor angular_embed(const Tensor& superpoints, int64_t c, double sigma_a) {
    if (c % 2 != 0) throw ShapeError("angular_embed: channel count must be even");
    const int64_t n = superpoints.dim(0);
    if (n < 4) throw ShapeError("angular_embed: need at least 4 points for 3 neighbors");
    // Nearest neighbor of a point is itself; request one extra and drop it.
    const NeighborIndex nn = knn(superpoints, superpoints, 4);
    const std::vector<double> freq = sinusoid_frequencies(c);
    Tensor out({n, n, 3, c});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        const Vec3 pi = point_at(superpoints, i);
        int64_t nbrs[3];
        int64_t filled = 0;
        for (int64_t j = 0; j < 4 && filled < 3; ++j)
            if (nn.index(i, j) != i) nbrs[filled++] = nn.index(i, j);
        for (int64_t j = 0; j < n; ++j) {
            const Vec3 to_j = point_at(superpoints, j) - pi;
            for (int64_t s = 0; s < 3; ++s) {
                const Vec3 to_k = point_at(superpoints, nbrs[s]) - pi;
                const double alpha = angle(to_k, to_j);
                write_sinusoid(alpha / sigma_a, freq,
                               out.data() + ((i * n + j) * 3 + s) * c);
            }
        }
    }
    return out;
}

GeometricEmbeddingRaw build_geometric_embedding(const Tensor& superpoints, int64_t c,
                                                double sigma_d, double sigma_a) {
    GeometricEmbeddingRaw raw;
    raw.distance = sinusoidal_distance_embed(superpoints, c, sigma_d);
    raw.angular = angular_embed(superpoints, c, sigma_a);
    return raw;
}

Tensor fuse_geometric_embedding(const Tensor& distance, const Tensor& angular, const Tensor& w_d,
                                const Tensor& w_a) {
    const int64_t n = distance.dim(0);
    const int64_t c = distance.dim(2);
    if (w_d.dim(0) != c || w_a.dim(0) != c)
        throw ShapeError("fuse_geometric_embedding: projection width mismatch");
    const int64_t co = w_d.dim(1);
    Tensor fused({n, n, co});
#pragma omp parallel
    {
        std::vector<double> slot(static_cast<size_t>(co));
        std::vector<double> pooled(static_cast<size_t>(co));
#pragma omp for schedule(static)
        for (int64_t i = 0; i < n; ++i) {
            for (int64_t j = 0; j < n; ++j) {
                double* out = fused.data() + (i * n + j) * co;
                kern::matmul(distance.data() + (i * n + j) * c, w_d.data(), out, 1, c, co);
                // channel-wise max over the three neighbor slots
                for (int64_t s = 0; s < 3; ++s) {
                    kern::matmul(angular.data() + ((i * n + j) * 3 + s) * c, w_a.data(),
                                 slot.data(), 1, c, co);
                    if (s == 0)
                        std::copy(slot.begin(), slot.end(), pooled.begin());
                    else
                        for (int64_t d = 0; d < co; ++d)
                            pooled[static_cast<size_t>(d)] =
                                std::max(pooled[static_cast<size_t>(d)], slot[static_cast<size_t>(d)]);
                }
                for (int64_t d = 0; d < co; ++d) out[d] += pooled[static_cast<size_t>(d)];
            }
        }
    }
    return fused;
}

GsmWeights GsmWeights::from(const ModelWeights& w, const std::string& prefix, double eps) {
    GsmWeights g;
    g.w_d = &w.get(prefix + ".w_d");
    g.w_a = &w.get(prefix + ".w_a");
    g.w_e = &w.get(prefix + ".w_e");
    g.w_g = &w.get(prefix + ".w_g");
    g.w_q = &w.get(prefix + ".w_q");
    g.w_k = &w.get(prefix + ".w_k");
    g.w_v = &w.get(prefix + ".w_v");
    g.ctx_ln_gain = &w.get(prefix + ".ctx.ln_gain");
    g.ctx_ln_bias = &w.get(prefix + ".ctx.ln_bias");
    g.ctx_ffn_w1 = &w.get(prefix + ".ctx.ffn.w1");
    g.ctx_ffn_w2 = &w.get(prefix + ".ctx.ffn.w2");
    g.ctx_ffn_ln_gain = &w.get(prefix + ".ctx.ffn.ln_gain");
    g.ctx_ffn_ln_bias = &w.get(prefix + ".ctx.ffn.ln_bias");
    g.geo_ln_gain = &w.get(prefix + ".geo.ln_gain");
    g.geo_ln_bias = &w.get(prefix + ".geo.ln_bias");
    g.geo_ffn_w1 = &w.get(prefix + ".geo.ffn.w1");
    g.geo_ffn_w2 = &w.get(prefix + ".geo.ffn.w2");
    g.geo_ffn_ln_gain = &w.get(prefix + ".geo.ffn.ln_gain");
    g.geo_ffn_ln_bias = &w.get(prefix + ".geo.ffn.ln_bias");
    g.ln_eps = eps;
    return g;
}

PcmWeights PcmWeights::from(const ModelWeights& w, const std::string& prefix, double eps) {
    PcmWeights p;
    p.w_q = &w.get(prefix + ".w_q");
    p.w_k = &w.get(prefix + ".w_k");
    p.w_v = &w.get(prefix + ".w_v");
    p.ln_gain = &w.get(prefix + ".ln_gain");
    p.ln_bias = &w.get(prefix + ".ln_bias");
    p.ffn_w1 = &w.get(prefix + ".ffn.w1");
    p.ffn_w2 = &w.get(prefix + ".ffn.w2");
    p.ffn_ln_gain = &w.get(prefix + ".ffn.ln_gain");
    p.ffn_ln_bias = &w.get(prefix + ".ffn.ln_bias");
    p.ln_eps = eps;
    return p;
}

namespace {

// linear -> relu -> linear -> residual -> layer norm
Tensor feed_forward(const Tensor& x, const Tensor& w1, const Tensor& w2, const Tensor& ln_gain,
                    const Tensor& ln_bias, double eps) {
    Tensor h = relu(matmul(x, w1));
    Tensor y = add(x, matmul(h, w2));
    return layer_norm(y, ln_gain, ln_bias, eps);
}

// Project the fused pairwise embedding by w: (n x n x c) -> (n x n x co).
Tensor project_pairwise(const Tensor& r, const Tensor& w) {
    const int64_t n = r.dim(0);
    const int64_t c = r.dim(2);
    const int64_t co = w.dim(1);
    Tensor out({n, n, co});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        kern::matmul(r.data() + i * n * c, w.data(), out.data() + i * n * co, n, c, co);
    return out;
}

}  // namespace

PositionContextPair gsm(const PointCloudTriplet& triplet, const GsmWeights& w,
                        const GeometricEmbeddingRaw* cached_embedding, double sigma_d,
                        double sigma_a) {
    const int64_t n = triplet.size();
    const int64_t c = w.w_q->dim(0);
    if (triplet.feature_width() != c)
        throw ShapeError("gsm: feature width does not match weights");

    GeometricEmbeddingRaw local;
    const GeometricEmbeddingRaw* raw = cached_embedding;
    if (raw == nullptr) {
        local = build_geometric_embedding(triplet.points, c, sigma_d, sigma_a);
        raw = &local;
    }
    Tensor fused = fuse_geometric_embedding(raw->distance, raw->angular, *w.w_d, *w.w_a);
    Tensor geo_cues = project_pairwise(fused, *w.w_g);   // G' rows
    Tensor pos_enc = project_pairwise(fused, *w.w_e);    // E' rows

    Tensor q = matmul(triplet.features, *w.w_q);
    Tensor k = matmul(triplet.features, *w.w_k);
    Tensor v = matmul(triplet.features, *w.w_v);

    // S(i, j) = q_i (e_ij + k_j)^T / sqrt(c)
    Tensor scores({n, n});
    const double scale = 1.0 / std::sqrt(static_cast<double>(c));
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        const double* qi = q.row(i);
        for (int64_t j = 0; j < n; ++j) {
            const double* e = pos_enc.data() + (i * n + j) * c;
            double s = kern::dot(qi, k.row(j), c);
            for (int64_t d = 0; d < c; ++d) s += qi[d] * e[d];
            scores(i, j) = s * scale;
        }
    }
    Tensor attn = softmax_rows(scores);

    // Geometric and positional messages share the hybrid attention.
    Tensor msg_geo({n, c});
    Tensor msg_pos({n, c});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        double* mg = msg_geo.row(i);
        double* mp = msg_pos.row(i);
        for (int64_t j = 0; j < n; ++j) {
            const double a = attn(i, j);
            const double* g = geo_cues.data() + (i * n + j) * c;
            const double* e = pos_enc.data() + (i * n + j) * c;
            for (int64_t d = 0; d < c; ++d) {
                mg[d] += a * g[d];
                mp[d] += a * e[d];
            }
        }
    }
    Tensor msg_ctx = matmul(attn, v);

    PositionContextPair out;
    Tensor ctx_in = layer_norm(add(triplet.features, add(msg_geo, msg_ctx)), *w.ctx_ln_gain,
                               *w.ctx_ln_bias, w.ln_eps);
    out.context = feed_forward(ctx_in, *w.ctx_ffn_w1, *w.ctx_ffn_w2, *w.ctx_ffn_ln_gain,
                               *w.ctx_ffn_ln_bias, w.ln_eps);
    Tensor geo_in = layer_norm(msg_pos, *w.geo_ln_gain, *w.geo_ln_bias, w.ln_eps);
    out.position = feed_forward(geo_in, *w.geo_ffn_w1, *w.geo_ffn_w2, *w.geo_ffn_ln_gain,
                                *w.geo_ffn_ln_bias, w.ln_eps);
    return out;
}

Tensor pcm(const PositionContextPair& target, const PositionContextPair& source,
           const PcmWeights& w) {
    if (target.position.dim(1) != source.position.dim(1))
        throw ShapeError("pcm: frames disagree on channel width");
    Tensor f_target = add(target.position, target.context);
    Tensor f_source = add(source.position, source.context);
    Tensor q = matmul(f_target, *w.w_q);
    Tensor k = matmul(f_source, *w.w_k);
    Tensor v = matmul(f_source, *w.w_v);
    Tensor attn = softmax_rows(matmul(q, transpose(k)));
    Tensor fused = matmul(attn, v);
    Tensor h = layer_norm(add(f_target, fused), *w.ln_gain, *w.ln_bias, w.ln_eps);
    return feed_forward(h, *w.ffn_w1, *w.ffn_w2, *w.ffn_ln_gain, *w.ffn_ln_bias, w.ln_eps);
}

std::pair<Tensor, Tensor> run_global_stack(const PointCloudTriplet& frame_p,
                                           const PointCloudTriplet& frame_q,
                                           const ModelWeights& w, const PipelineConfig& config) {
    const int64_t c = config.global_channels;
    if (frame_p.feature_width() != c || frame_q.feature_width() != c)
        throw ShapeError("global stack: feature width must equal global_channels");
    if (config.global_blocks == 0) return {frame_p.features, frame_q.features};

    const GeometricEmbeddingRaw raw_p =
        build_geometric_embedding(frame_p.points, c, config.sigma_d, config.sigma_a);
    const GeometricEmbeddingRaw raw_q =
        build_geometric_embedding(frame_q.points, c, config.sigma_d, config.sigma_a);

    PointCloudTriplet p = frame_p;
    PointCloudTriplet q = frame_q;
    for (int64_t b = 0; b < config.global_blocks; ++b) {
        const std::string base = "global.block" + std::to_string(b + 1);
        const GsmWeights gw = GsmWeights::from(w, base + ".gsm", config.layer_norm_eps);
        const PcmWeights pw = PcmWeights::from(w, base + ".pcm", config.layer_norm_eps);
        PositionContextPair pack_p = gsm(p, gw, &raw_p);
        PositionContextPair pack_q = gsm(q, gw, &raw_q);
        // First aggregation flows Q into P; the reversed pass sees the
        // already-updated P context.
        Tensor new_p = pcm(pack_p, pack_q, pw);
        PositionContextPair updated_p{pack_p.position, new_p};
        Tensor new_q = pcm(pack_q, updated_p, pw);
        p.features = std::move(new_p);
        q.features = std::move(new_q);
    }
    p.features.require_finite("global stack output P");
    q.features.require_finite("global stack output Q");
    return {p.features, q.features};
}

}  // namespace roitr
