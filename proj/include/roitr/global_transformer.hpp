#pragma once

#include "roitr/config.hpp"
#include "roitr/geom.hpp"
#include "roitr/weights.hpp"

namespace roitr {

// Unprojected pairwise geometry of one frame: distance and angle
// sinusoidal embeddings. Depends only on point positions, so it is
// computed once per frame and shared by every global block.
struct GeometricEmbeddingRaw {
    Tensor distance;  // n x n x c
    Tensor angular;   // n x n x 3 x c (flattened to {n, n, 3, c})
};

// Pairwise distance embedding: entry (i, j, 2l) = sin((rho/sigma_d) /
// 10000^(2l/c)), (i, j, 2l+1) the matching cosine.
Tensor sinusoidal_distance_embed(const Tensor& superpoints, int64_t c, double sigma_d);

// Angle embedding over the 3 nearest neighbors of i (self excluded);
// same sinusoidal scheme applied to each angle.
Tensor angular_embed(const Tensor& superpoints, int64_t c, double sigma_a);

GeometricEmbeddingRaw build_geometric_embedding(const Tensor& superpoints, int64_t c,
                                                double sigma_d, double sigma_a);

// R = distance * W_D + max over the 3 neighbor slots of (angular * W_A).
Tensor fuse_geometric_embedding(const Tensor& distance, const Tensor& angular, const Tensor& w_d,
                                const Tensor& w_a);

struct GsmWeights {
    const Tensor *w_d, *w_a, *w_e, *w_g, *w_q, *w_k, *w_v;
    const Tensor *ctx_ln_gain, *ctx_ln_bias, *ctx_ffn_w1, *ctx_ffn_w2, *ctx_ffn_ln_gain,
        *ctx_ffn_ln_bias;
    const Tensor *geo_ln_gain, *geo_ln_bias, *geo_ffn_w1, *geo_ffn_w2, *geo_ffn_ln_gain,
        *geo_ffn_ln_bias;
    double ln_eps = 1e-5;

    static GsmWeights from(const ModelWeights& w, const std::string& prefix, double eps);
};

struct PcmWeights {
    const Tensor *w_q, *w_k, *w_v;
    const Tensor *ln_gain, *ln_bias, *ffn_w1, *ffn_w2, *ffn_ln_gain, *ffn_ln_bias;
    double ln_eps = 1e-5;

    static PcmWeights from(const ModelWeights& w, const std::string& prefix, double eps);
};

// Per-frame output of geometry-aware self-attention.
struct PositionContextPair {
    Tensor position;  // n x c rotation-invariant position representation
    Tensor context;   // n x c globally-enhanced context
};

// Hybrid self-attention: scores q_i (e_ij + k_j)^T / sqrt(c) mix learned
// context with intrinsic pairwise geometry; the same attention aggregates
// geometric cues into the position branch. Sigma values are only read
// when no cached embedding is supplied.
PositionContextPair gsm(const PointCloudTriplet& triplet, const GsmWeights& w,
                        const GeometricEmbeddingRaw* cached_embedding = nullptr,
                        double sigma_d = 0.2, double sigma_a = 15.0);

// Position-aware cross-attention from source to target; returns the
// target's updated feature matrix.
Tensor pcm(const PositionContextPair& target, const PositionContextPair& source,
           const PcmWeights& w);

// g blocks of (shared GSM per frame, PCM in both directions). Returns the
// enhanced feature matrices for both frames.
std::pair<Tensor, Tensor> run_global_stack(const PointCloudTriplet& frame_p,
                                           const PointCloudTriplet& frame_q,
                                           const ModelWeights& w, const PipelineConfig& config);

}  // namespace roitr
