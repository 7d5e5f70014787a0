#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "roitr/geom.hpp"
#include "roitr/metrics.hpp"

namespace roitr {

enum class SyntheticShape { kSphere, kBox, kComposite };

struct SyntheticPairSpec {
    int64_t num_points = 1024;
    SyntheticShape shape = SyntheticShape::kComposite;
    double noise_sigma = 0.0;      // meters, applied to the second frame
    double overlap = 1.0;          // fraction of shared surface samples
    double max_translation = 0.5;  // rigid mode: bound on |t|
    double deform_amplitude = 0.05;  // nonrigid mode: sinusoidal field scale
    bool rigid = true;
    bool identity_transform = false;  // rigid mode: skip the sampler

    void validate() const;
};

struct SyntheticPair {
    PointCloudTriplet cloud_p;
    PointCloudTriplet cloud_q;
    GroundTruth ground_truth;
};

// Uniform rotation from a normalized Gaussian quaternion.
RigidTransform sample_rigid_transform(std::mt19937_64& rng, double max_translation);

// Deterministic synthetic scan pair with exact index ground truth on the
// overlap window. Rigid mode emits a transform, nonrigid a smooth flow.
SyntheticPair generate_pair(const SyntheticPairSpec& spec, uint64_t seed);

SyntheticShape parse_shape(const std::string& name);

}  // namespace roitr
