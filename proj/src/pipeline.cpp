#include "roitr/pipeline.hpp"

namespace roitr {

PipelineResult run_pipeline(const PointCloudTriplet& cloud_p, const PointCloudTriplet& cloud_q,
                            const ModelWeights& weights, const PipelineConfig& config) {
    if (!weights.config_hash().empty() && weights.config_hash() != config.hash())
        throw ConfigError("weights were built for a different architecture (hash " +
                          weights.config_hash() + " vs " + config.hash() + ")");
    weights.validate_inventory(weight_inventory(config));

    PipelineResult r;
    r.encoded_p = run_encoder(cloud_p, weights, config);
    r.encoded_q = run_encoder(cloud_q, weights, config);
    auto [gp, gq] = run_global_stack(r.encoded_p.superpoints, r.encoded_q.superpoints, weights,
                                     config);
    r.global_features_p = std::move(gp);
    r.global_features_q = std::move(gq);
    r.decoded_p = run_decoder(r.encoded_p, weights, config);
    r.decoded_q = run_decoder(r.encoded_q, weights, config);

    CoarseToFineInput input;
    input.superpoint_features_p = &r.global_features_p;
    input.superpoint_features_q = &r.global_features_q;
    input.superpoints_p = &r.encoded_p.superpoints.points;
    input.superpoints_q = &r.encoded_q.superpoints.points;
    input.points_p = &r.decoded_p;
    input.points_q = &r.decoded_q;
    r.correspondences =
        coarse_to_fine(input, config.match, config.mode, weights.scalar("sinkhorn.alpha"));
    return r;
}

PointCloudTriplet make_input_triplet(const Tensor& points, const Tensor* normals,
                                     int64_t normal_k, const Vec3& viewpoint) {
    PointCloudTriplet t;
    t.points = points;
    t.normals = normals ? *normals : estimate_normals(points, normal_k, viewpoint);
    t.features = Tensor::full({points.dim(0), 1}, 1.0);
    t.validate("input triplet");
    return t;
}

}  // namespace roitr
