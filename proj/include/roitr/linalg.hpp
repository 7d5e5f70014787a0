#pragma once

#include "roitr/tensor.hpp"

namespace roitr {

// Plain scalar kernels, safe to call from inside an OpenMP region.
// The Tensor-level wrappers below parallelize over rows and delegate here.
namespace kern {

// c += a * b with a: n x k, b: k x m, c: n x m (row-major, c preinitialized).
void matmul_acc(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);

// c = a * b.
void matmul(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);

double dot(const double* a, const double* b, int64_t n);

// In-place numerically stable softmax of one row.
void softmax_row(double* x, int64_t m);

// out = gain * (x - mean) / sqrt(var + eps) + bias over one row of width c.
void layer_norm_row(const double* x, const double* gain, const double* bias, double eps,
                    double* out, int64_t c);

double logsumexp(const double* x, int64_t n);

}  // namespace kern

// out[i,j] = sum_k x[i,k] * w[k,j]; OpenMP over rows.
Tensor matmul(const Tensor& x, const Tensor& w);

// matmul plus optional bias broadcast over rows.
Tensor linear(const Tensor& x, const Tensor& w);
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

// Row-wise stable softmax of an n x m matrix.
Tensor softmax_rows(const Tensor& x);

// Per-row layer normalization with learnable gain/bias of width c.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

Tensor relu(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& x);

// Scales every row to unit L2 norm; zero rows are left untouched.
void l2_normalize_rows(Tensor& x);

// Naive single-threaded reference implementations, kept for correctness
// tests against the OpenMP kernels and for the benchmark baseline.
namespace serial {

Tensor matmul(const Tensor& x, const Tensor& w);
Tensor softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

}  // namespace serial

}  // namespace roitr
