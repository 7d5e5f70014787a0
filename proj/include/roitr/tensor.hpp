#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace roitr {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension or shape mismatch between operands.
struct ShapeError : Error {
    using Error::Error;
};

// Malformed input file (clouds, weights, configs, correspondence files).
struct ParseError : Error {
    using Error::Error;
};

// Config/weight disagreement: missing tensors, wrong shapes, stale hash.
struct ConfigError : Error {
    using Error::Error;
};

// NaN/Inf contamination or degenerate geometry.
struct NumericError : Error {
    using Error::Error;
};

// Dense row-major tensor of doubles. All computation runs in 64-bit;
// float32 appears only at the weight-file boundary.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<size_t>(count(shape_)), 0.0);
    }

    Tensor(std::vector<int64_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != static_cast<int64_t>(data_.size()))
            throw ShapeError("tensor: data size does not match shape");
    }

    static Tensor full(std::vector<int64_t> shape, double value) {
        Tensor t(std::move(shape));
        for (auto& v : t.data_) v = value;
        return t;
    }

    static int64_t count(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t d : shape) {
            if (d < 0) throw ShapeError("tensor: negative dimension");
            n *= d;
        }
        return n;
    }

    const std::vector<int64_t>& shape() const { return shape_; }
    size_t rank() const { return shape_.size(); }
    int64_t dim(size_t i) const { return shape_.at(i); }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    double& operator()(int64_t i, int64_t j) {
        return data_[static_cast<size_t>(i * shape_[1] + j)];
    }
    double operator()(int64_t i, int64_t j) const {
        return data_[static_cast<size_t>(i * shape_[1] + j)];
    }
    double& operator()(int64_t i, int64_t j, int64_t k) {
        return data_[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)];
    }
    double operator()(int64_t i, int64_t j, int64_t k) const {
        return data_[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)];
    }

    double* row(int64_t i) { return data_.data() + i * shape_.back(); }
    const double* row(int64_t i) const { return data_.data() + i * shape_.back(); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const;
    // Throws NumericError naming `context` if any entry is NaN/Inf.
    void require_finite(const std::string& context) const;

private:
    std::vector<int64_t> shape_;
    std::vector<double> data_;
};

inline std::string shape_str(const std::vector<int64_t>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

}  // namespace roitr
