#include "roitr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace roitr {

namespace kern {

void matmul_acc(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m) {
    for (int64_t i = 0; i < n; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * m;
        for (int64_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* bp = b + p * m;
            for (int64_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
        }
    }
}

void matmul(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m) {
    std::memset(c, 0, sizeof(double) * static_cast<size_t>(n * m));
    matmul_acc(a, b, c, n, k, m);
}

double dot(const double* a, const double* b, int64_t n) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void softmax_row(double* x, int64_t m) {
    double mx = x[0];
    for (int64_t j = 1; j < m; ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (int64_t j = 0; j < m; ++j) {
        x[j] = std::exp(x[j] - mx);
        sum += x[j];
    }
    const double inv = 1.0 / sum;
    for (int64_t j = 0; j < m; ++j) x[j] *= inv;
}

void layer_norm_row(const double* x, const double* gain, const double* bias, double eps,
                    double* out, int64_t c) {
    double mean = 0.0;
    for (int64_t j = 0; j < c; ++j) mean += x[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (int64_t j = 0; j < c; ++j) {
        const double d = x[j] - mean;
        var += d * d;
    }
    var /= static_cast<double>(c);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int64_t j = 0; j < c; ++j) out[j] = gain[j] * (x[j] - mean) * inv + bias[j];
}

double logsumexp(const double* x, int64_t n) {
    double mx = x[0];
    for (int64_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double sum = 0.0;
    for (int64_t i = 0; i < n; ++i) sum += std::exp(x[i] - mx);
    return mx + std::log(sum);
}

}  // namespace kern

static void check_matmul_shapes(const Tensor& x, const Tensor& w) {
    if (x.rank() != 2 || w.rank() != 2)
        throw ShapeError("matmul: expected rank-2 operands, got " + shape_str(x.shape()) +
                         " and " + shape_str(w.shape()));
    if (x.dim(1) != w.dim(0))
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(x.shape()) + " vs " +
                         shape_str(w.shape()));
}

Tensor matmul(const Tensor& x, const Tensor& w) {
    check_matmul_shapes(x, w);
    const int64_t n = x.dim(0), k = x.dim(1), m = w.dim(1);
    Tensor out({n, m});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        kern::matmul_acc(x.row(i), w.data(), out.row(i), 1, k, m);
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w) {
    return matmul(x, w);
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    check_matmul_shapes(x, w);
    if (bias.rank() != 1 || bias.dim(0) != w.dim(1))
        throw ShapeError("linear: bias shape " + shape_str(bias.shape()) + " does not match " +
                         shape_str(w.shape()));
    const int64_t n = x.dim(0), k = x.dim(1), m = w.dim(1);
    Tensor out({n, m});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        double* oi = out.row(i);
        for (int64_t j = 0; j < m; ++j) oi[j] = bias[j];
        kern::matmul_acc(x.row(i), w.data(), oi, 1, k, m);
    }
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    if (x.rank() != 2) throw ShapeError("softmax_rows: expected rank-2 input");
    if (x.dim(1) == 0) throw ShapeError("softmax_rows: empty rows");
    x.require_finite("softmax_rows input");
    Tensor out = x;
    const int64_t n = x.dim(0), m = x.dim(1);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) kern::softmax_row(out.row(i), m);
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    if (x.rank() != 2) throw ShapeError("layer_norm: expected rank-2 input");
    const int64_t n = x.dim(0), c = x.dim(1);
    if (c < 1) throw ShapeError("layer_norm: empty rows");
    if (eps <= 0.0) throw ShapeError("layer_norm: eps must be positive");
    if (gain.size() != c || bias.size() != c)
        throw ShapeError("layer_norm: gain/bias width does not match input");
    Tensor out({n, c});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        kern::layer_norm_row(x.row(i), gain.data(), bias.data(), eps, out.row(i), c);
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    double* d = out.data();
    const int64_t n = out.size();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) d[i] = d[i] > 0.0 ? d[i] : 0.0;
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw ShapeError("add: shapes differ, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    Tensor out = a;
    const double* bd = b.data();
    double* d = out.data();
    const int64_t n = out.size();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) d[i] += bd[i];
    return out;
}

Tensor transpose(const Tensor& x) {
    if (x.rank() != 2) throw ShapeError("transpose: expected rank-2 input");
    const int64_t n = x.dim(0), m = x.dim(1);
    Tensor out({m, n});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < m; ++j) out(j, i) = x(i, j);
    return out;
}

void l2_normalize_rows(Tensor& x) {
    if (x.rank() != 2) throw ShapeError("l2_normalize_rows: expected rank-2 input");
    const int64_t n = x.dim(0), c = x.dim(1);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        double* r = x.row(i);
        double norm = std::sqrt(kern::dot(r, r, c));
        if (norm > 0.0) {
            const double inv = 1.0 / norm;
            for (int64_t j = 0; j < c; ++j) r[j] *= inv;
        }
    }
}

namespace serial {

Tensor matmul(const Tensor& x, const Tensor& w) {
    check_matmul_shapes(x, w);
    const int64_t n = x.dim(0), k = x.dim(1), m = w.dim(1);
    Tensor out({n, m});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (int64_t p = 0; p < k; ++p) s += x(i, p) * w(p, j);
            out(i, j) = s;
        }
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    if (x.rank() != 2) throw ShapeError("softmax_rows: expected rank-2 input");
    const int64_t n = x.dim(0), m = x.dim(1);
    if (m == 0) throw ShapeError("softmax_rows: empty rows");
    Tensor out = x;
    for (int64_t i = 0; i < n; ++i) kern::softmax_row(out.row(i), m);
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    const int64_t n = x.dim(0), c = x.dim(1);
    Tensor out({n, c});
    for (int64_t i = 0; i < n; ++i)
        kern::layer_norm_row(x.row(i), gain.data(), bias.data(), eps, out.row(i), c);
    return out;
}

}  // namespace serial

}  // namespace roitr
