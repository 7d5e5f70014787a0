#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roitr/weights.hpp"

namespace roitr {

enum class MatchMode { kRigid, kNonrigid };

struct EncoderBlockPlan {
    int64_t downsample_ratio = 1;  // relative to the previous block
    int64_t out_channels = 64;
    int64_t num_pal = 1;
};

struct MatchConfig {
    int64_t num_superpoint_corr = 256;
    int64_t sinkhorn_iters = 100;
    int64_t mutual_top_k = 3;
    double min_confidence = 0.05;
    double nonrigid_distance_gate = 0.75;
    int64_t nonrigid_fallback_top = 128;
    int64_t nonrigid_mutual_top_k = 2;
};

struct LossConfig {
    double tau_r = 0.1;    // overlap threshold for positive pairs
    double delta_e = 0.1;  // positive margin
    double delta_f = 1.4;  // negative margin
    double gamma = 10.0;
    double lambda = 1.0;
};

struct MetricsConfig {
    double inlier_dist = 0.1;   // tau_1; 0.04 for nonrigid data
    double fmr_ir_min = 0.05;   // tau_2
    double rmse_max = 0.2;      // tau_3
    double flow_dist = 0.04;    // tau_4
    int64_t nfmr_k = 3;
    int64_t ransac_iters = 50000;
    uint64_t ransac_seed = 0;
    bool rmse2_literal_prefactor = false;  // (1/n)*sqrt(sum) instead of sqrt(mean)
};

struct PipelineConfig {
    uint64_t seed = 0;
    MatchMode mode = MatchMode::kRigid;
    int64_t k_neighbors = 16;   // PAM neighborhood, all levels
    int64_t tul_k = 3;          // upsampling interpolation neighbors
    double layer_norm_eps = 1e-5;
    std::vector<EncoderBlockPlan> encoder = {
        {1, 64, 1}, {4, 128, 1}, {4, 256, 1}, {4, 256, 1}};
    int64_t global_blocks = 3;
    int64_t global_channels = 256;  // must match the last encoder width
    double sigma_d = 0.2;
    double sigma_a = 15.0;
    int64_t ffn_expansion = 2;
    MatchConfig match;
    LossConfig loss;
    MetricsConfig metrics;

    void validate() const;

    // Stable hash of the architecture-relevant fields; stored in weight
    // files and correspondence headers to catch config/weight mismatch.
    std::string hash() const;

    // Total downsample factor of the encoder (product of block ratios).
    int64_t total_downsample() const;

    // Smallest input size the encoder plan accepts.
    int64_t min_points() const;
};

PipelineConfig default_config();

// Strict parser: unknown keys anywhere are rejected.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::string& path);
std::string config_to_json(const PipelineConfig& config);

// Names and shapes of every tensor a model for this config must contain.
std::vector<TensorSpec> weight_inventory(const PipelineConfig& config);

// Deterministic random model: matrices uniform in [-1/sqrt(fan_in),
// 1/sqrt(fan_in)], layer-norm gain 1 / bias 0, Sinkhorn slack 1.
ModelWeights init_random_weights(const PipelineConfig& config, uint64_t seed);

}  // namespace roitr
