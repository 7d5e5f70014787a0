#pragma once

#include <vector>

#include "roitr/config.hpp"
#include "roitr/geom.hpp"
#include "roitr/weights.hpp"

namespace roitr {

// View over one PPF attention block's tensors inside a ModelWeights.
struct PamWeights {
    const Tensor* w_coord;  // 4 x c, projects PPF coordinates
    const Tensor* w_ctx;    // c_in x c, shared context projection
    const Tensor* w_q;
    const Tensor* w_k;
    const Tensor* w_v;
    const Tensor* w_g;
    const Tensor* w_e;
    const Tensor* w_msg;  // c x c message projection
    const Tensor* w_out;  // c x c_out
    const Tensor* ln_gain;
    const Tensor* ln_bias;
    double ln_eps = 1e-5;

    static PamWeights from(const ModelWeights& w, const std::string& prefix, double eps);
};

// Attention over the k nearest support points of each anchor. Geometry
// enters only through PPF coordinates, so the output features are
// invariant to joint rigid motion of anchors and support.
Tensor pam(const Tensor& anchor_pts, const Tensor& anchor_nrm, const PointCloudTriplet& support,
           const PamWeights& w, int64_t k);

// Attentional abstraction: FPS-downsample the support to m anchors, then
// describe them with a PAM over the full-resolution support.
PointCloudTriplet aal(const PointCloudTriplet& support, int64_t m, const PamWeights& w, int64_t k);

// Residual self-attention block: relu(X + layer_norm(pam(X|X))).
PointCloudTriplet pal(const PointCloudTriplet& triplet, const PamWeights& w,
                      const Tensor& ln_gain, const Tensor& ln_bias, int64_t k);

// Transition up: interpolate coarse anchor features onto the skip cloud
// with inverse-distance weights, then fuse zeta1(skip) + zeta2(interp).
PointCloudTriplet tul(const PointCloudTriplet& anchor, const PointCloudTriplet& support_skip,
                      const Tensor& zeta1, const Tensor& zeta2, int64_t interp_k);

struct EncoderOutput {
    PointCloudTriplet superpoints;          // coarsest triplet
    std::vector<PointCloudTriplet> skips;   // per-block outputs, fine to coarse
};

EncoderOutput run_encoder(const PointCloudTriplet& input, const ModelWeights& w,
                          const PipelineConfig& config);

PointCloudTriplet run_decoder(const EncoderOutput& encoded, const ModelWeights& w,
                              const PipelineConfig& config);

namespace serial {
// Naive PAM built from the Tensor-level ops, kept as the benchmark
// baseline and correctness reference for the fused parallel kernel.
Tensor pam(const Tensor& anchor_pts, const Tensor& anchor_nrm, const PointCloudTriplet& support,
           const PamWeights& w, int64_t k);
}

}  // namespace roitr
