#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "roitr/tensor.hpp"

namespace roitr {

// Ground-truth correspondence: (index in P, index in Q).
using IndexPair = std::pair<int64_t, int64_t>;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const;
    double squared_norm() const { return dot(*this); }
};

inline Vec3 point_at(const Tensor& pts, int64_t i) {
    return {pts(i, 0), pts(i, 1), pts(i, 2)};
}

inline void set_point(Tensor& pts, int64_t i, const Vec3& v) {
    pts(i, 0) = v.x;
    pts(i, 1) = v.y;
    pts(i, 2) = v.z;
}

// A point cloud with unit normals and per-point features.
struct PointCloudTriplet {
    Tensor points;    // n x 3
    Tensor normals;   // n x 3, unit rows
    Tensor features;  // n x c

    int64_t size() const { return points.empty() ? 0 : points.dim(0); }
    int64_t feature_width() const { return features.empty() ? 0 : features.dim(1); }

    // Enforces unit normals, finite coordinates, and matching row counts.
    void validate(const std::string& context) const;
};

struct RigidTransform {
    Tensor rotation;     // 3 x 3
    Tensor translation;  // 3

    static RigidTransform identity();
    Vec3 apply(const Vec3& p) const;
    Vec3 rotate(const Vec3& v) const;
    Tensor apply_points(const Tensor& pts) const;
    Tensor rotate_vectors(const Tensor& vecs) const;
    RigidTransform inverse() const;

    // R^T R = I and det R = 1 within tol.
    bool is_orthonormal(double tol = 1e-9) const;
};

// Exact k-nearest-neighbor table: row i lists the k nearest support
// indices of query i, distances ascending, ties broken by smaller index.
struct NeighborIndex {
    std::vector<int64_t> indices;    // n * k
    std::vector<double> distances;   // n * k
    int64_t n = 0;
    int64_t k = 0;

    int64_t index(int64_t i, int64_t j) const { return indices[i * k + j]; }
    double distance(int64_t i, int64_t j) const { return distances[i * k + j]; }
};

// Angle between two vectors in [0, pi]; vectors shorter than 1e-12 give 0.
double angle(const Vec3& v1, const Vec3& v2);

// Point pair feature (distance, angle(n_a, d), angle(n_s, d), angle(n_s, n_a))
// with d = p_support - p_anchor. Invariant under joint rigid motion.
std::array<double, 4> ppf(const Vec3& p_anchor, const Vec3& n_anchor, const Vec3& p_support,
                          const Vec3& n_support);

// PCA normals from the k nearest neighbors, oriented toward `viewpoint`.
Tensor estimate_normals(const Tensor& points, int64_t k, const Vec3& viewpoint);

// Greedy farthest point sampling starting at seed_index; ties by smaller index.
std::vector<int64_t> farthest_point_sample(const Tensor& points, int64_t m, int64_t seed_index = 0);

// Picks the input point farthest from the centroid. Gives FPS a start that is
// invariant to rigid motion and point order, unlike a fixed index.
int64_t centroid_farthest_index(const Tensor& points);

NeighborIndex knn(const Tensor& queries, const Tensor& support, int64_t k);

// assignment[u] = index of the nearest superpoint; ties to the smaller index.
std::vector<int64_t> point_to_node(const Tensor& points, const Tensor& superpoints);

// Groups point indices by their assigned node; result has one bucket per node.
std::vector<std::vector<int64_t>> group_by_node(const std::vector<int64_t>& assignment,
                                                int64_t num_nodes);

// Normalized inverse-distance weights; an exact hit (< 1e-12) takes weight 1.
std::vector<double> inverse_distance_weights(const Vec3& query, const Tensor& neighbors);

namespace serial {
NeighborIndex knn(const Tensor& queries, const Tensor& support, int64_t k);
}

}  // namespace roitr
