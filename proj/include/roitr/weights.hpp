#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "roitr/tensor.hpp"

namespace roitr {

struct TensorSpec {
    std::string name;
    std::vector<int64_t> shape;
};

// Named-tensor container for every learnable matrix in the pipeline.
// Immutable after construction; safe for concurrent reads.
class ModelWeights {
public:
    ModelWeights() = default;
    ModelWeights(std::map<std::string, Tensor> tensors, std::string config_hash)
        : tensors_(std::move(tensors)), config_hash_(std::move(config_hash)) {}

    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const { return tensors_.count(name) > 0; }
    double scalar(const std::string& name) const;

    const std::map<std::string, Tensor>& tensors() const { return tensors_; }
    const std::string& config_hash() const { return config_hash_; }

    // Every spec name present with the exact shape, nothing extra.
    void validate_inventory(const std::vector<TensorSpec>& expected) const;

private:
    std::map<std::string, Tensor> tensors_;
    std::string config_hash_;
};

// File format: magic "ROITRW01", u64-LE manifest length, JSON manifest
// (names, shapes, dtype, byte offsets), then a contiguous little-endian
// float32 blob, row-major per tensor.
void save_weights(const ModelWeights& weights, const std::string& path);
ModelWeights load_weights(const std::string& path);

}  // namespace roitr
