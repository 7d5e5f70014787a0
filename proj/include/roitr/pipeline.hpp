#pragma once

#include "roitr/config.hpp"
#include "roitr/global_transformer.hpp"
#include "roitr/matcher.hpp"
#include "roitr/ppftrans.hpp"

namespace roitr {

struct PipelineResult {
    EncoderOutput encoded_p;
    EncoderOutput encoded_q;
    Tensor global_features_p;  // enhanced superpoint features
    Tensor global_features_q;
    PointCloudTriplet decoded_p;
    PointCloudTriplet decoded_q;
    CorrespondenceSet correspondences;
};

// Full forward pass on a pair of triplets: hierarchical encoding, global
// context aggregation, decoding, and coarse-to-fine matching.
PipelineResult run_pipeline(const PointCloudTriplet& cloud_p, const PointCloudTriplet& cloud_q,
                            const ModelWeights& weights, const PipelineConfig& config);

// Builds a triplet from raw points: all-ones initial features, normals
// estimated when the file did not provide them.
PointCloudTriplet make_input_triplet(const Tensor& points, const Tensor* normals,
                                     int64_t normal_k, const Vec3& viewpoint);

}  // namespace roitr
