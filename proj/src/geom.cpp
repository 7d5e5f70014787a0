#include "roitr/geom.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "roitr/linalg.hpp"

namespace roitr {

double Vec3::norm() const {
    return std::sqrt(dot(*this));
}

void PointCloudTriplet::validate(const std::string& context) const {
    const int64_t n = size();
    if (points.rank() != 2 || points.dim(1) != 3)
        throw ShapeError(context + ": points must be n x 3");
    if (normals.rank() != 2 || normals.dim(0) != n || normals.dim(1) != 3)
        throw ShapeError(context + ": normals must match point count");
    if (features.rank() != 2 || features.dim(0) != n)
        throw ShapeError(context + ": features row count must equal point count");
    points.require_finite(context + " points");
    normals.require_finite(context + " normals");
    features.require_finite(context + " features");
    for (int64_t i = 0; i < n; ++i) {
        const double len = point_at(normals, i).norm();
        if (std::abs(len - 1.0) > 1e-9)
            throw NumericError(context + ": normal " + std::to_string(i) + " is not unit length");
    }
}

RigidTransform RigidTransform::identity() {
    RigidTransform t;
    t.rotation = Tensor({3, 3});
    t.rotation(0, 0) = t.rotation(1, 1) = t.rotation(2, 2) = 1.0;
    t.translation = Tensor({3});
    return t;
}

Vec3 RigidTransform::rotate(const Vec3& v) const {
    const Tensor& r = rotation;
    return {r(0, 0) * v.x + r(0, 1) * v.y + r(0, 2) * v.z,
            r(1, 0) * v.x + r(1, 1) * v.y + r(1, 2) * v.z,
            r(2, 0) * v.x + r(2, 1) * v.y + r(2, 2) * v.z};
}

Vec3 RigidTransform::apply(const Vec3& p) const {
    Vec3 r = rotate(p);
    return {r.x + translation[0], r.y + translation[1], r.z + translation[2]};
}

Tensor RigidTransform::apply_points(const Tensor& pts) const {
    Tensor out = pts;
    const int64_t n = pts.dim(0);
    for (int64_t i = 0; i < n; ++i) set_point(out, i, apply(point_at(pts, i)));
    return out;
}

Tensor RigidTransform::rotate_vectors(const Tensor& vecs) const {
    Tensor out = vecs;
    const int64_t n = vecs.dim(0);
    for (int64_t i = 0; i < n; ++i) set_point(out, i, rotate(point_at(vecs, i)));
    return out;
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform inv;
    inv.rotation = transpose(rotation);
    inv.translation = Tensor({3});
    const Vec3 t{translation[0], translation[1], translation[2]};
    const Vec3 rt = inv.rotate(t);
    inv.translation[0] = -rt.x;
    inv.translation[1] = -rt.y;
    inv.translation[2] = -rt.z;
    return inv;
}

bool RigidTransform::is_orthonormal(double tol) const {
    const Tensor& r = rotation;
    for (int64_t i = 0; i < 3; ++i)
        for (int64_t j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int64_t k = 0; k < 3; ++k) s += r(k, i) * r(k, j);
            if (std::abs(s - (i == j ? 1.0 : 0.0)) > tol) return false;
        }
    const double det = r(0, 0) * (r(1, 1) * r(2, 2) - r(1, 2) * r(2, 1)) -
                       r(0, 1) * (r(1, 0) * r(2, 2) - r(1, 2) * r(2, 0)) +
                       r(0, 2) * (r(1, 0) * r(2, 1) - r(1, 1) * r(2, 0));
    return std::abs(det - 1.0) <= tol;
}

double angle(const Vec3& v1, const Vec3& v2) {
    if (v1.norm() < 1e-12 || v2.norm() < 1e-12) return 0.0;
    return std::atan2(v1.cross(v2).norm(), v1.dot(v2));
}

std::array<double, 4> ppf(const Vec3& p_anchor, const Vec3& n_anchor, const Vec3& p_support,
                          const Vec3& n_support) {
    const Vec3 d = p_support - p_anchor;
    return {d.norm(), angle(n_anchor, d), angle(n_support, d), angle(n_support, n_anchor)};
}

namespace {

// One query against the full support set; shared by the parallel and serial knn.
void knn_query(const Tensor& queries, const Tensor& support, int64_t k, int64_t qi,
               std::vector<std::pair<double, int64_t>>& scratch, NeighborIndex& out) {
    const int64_t m = support.dim(0);
    const Vec3 q = point_at(queries, qi);
    scratch.clear();
    scratch.reserve(static_cast<size_t>(m));
    for (int64_t j = 0; j < m; ++j)
        scratch.emplace_back((point_at(support, j) - q).squared_norm(), j);
    std::partial_sort(scratch.begin(), scratch.begin() + k, scratch.end());
    for (int64_t j = 0; j < k; ++j) {
        out.indices[qi * k + j] = scratch[j].second;
        out.distances[qi * k + j] = std::sqrt(scratch[j].first);
    }
}

}  // namespace

NeighborIndex knn(const Tensor& queries, const Tensor& support, int64_t k) {
    const int64_t n = queries.dim(0), m = support.dim(0);
    if (k < 1 || k > m)
        throw ShapeError("knn: k = " + std::to_string(k) + " exceeds support size " +
                         std::to_string(m));
    NeighborIndex out;
    out.n = n;
    out.k = k;
    out.indices.resize(static_cast<size_t>(n * k));
    out.distances.resize(static_cast<size_t>(n * k));
#pragma omp parallel
    {
        std::vector<std::pair<double, int64_t>> scratch;
#pragma omp for schedule(static)
        for (int64_t i = 0; i < n; ++i) knn_query(queries, support, k, i, scratch, out);
    }
    return out;
}

namespace serial {

NeighborIndex knn(const Tensor& queries, const Tensor& support, int64_t k) {
    const int64_t n = queries.dim(0), m = support.dim(0);
    if (k < 1 || k > m) throw ShapeError("knn: k exceeds support size");
    NeighborIndex out;
    out.n = n;
    out.k = k;
    out.indices.resize(static_cast<size_t>(n * k));
    out.distances.resize(static_cast<size_t>(n * k));
    std::vector<std::pair<double, int64_t>> scratch;
    for (int64_t i = 0; i < n; ++i) knn_query(queries, support, k, i, scratch, out);
    return out;
}

}  // namespace serial

Tensor estimate_normals(const Tensor& points, int64_t k, const Vec3& viewpoint) {
    const int64_t n = points.dim(0);
    if (k < 3) throw ShapeError("estimate_normals: k must be at least 3");
    if (n < k) throw ShapeError("estimate_normals: fewer points than k");
    const NeighborIndex nn = knn(points, points, k);
    Tensor normals({n, 3});
    std::vector<int64_t> degenerate;
#pragma omp parallel
    {
        std::vector<int64_t> local_bad;
#pragma omp for schedule(static)
        for (int64_t i = 0; i < n; ++i) {
            Vec3 mean{};
            for (int64_t j = 0; j < k; ++j) mean = mean + point_at(points, nn.index(i, j));
            mean = mean * (1.0 / static_cast<double>(k));
            Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
            for (int64_t j = 0; j < k; ++j) {
                const Vec3 d = point_at(points, nn.index(i, j)) - mean;
                const Eigen::Vector3d e(d.x, d.y, d.z);
                cov += e * e.transpose();
            }
            if (cov.trace() < 1e-20) {
                local_bad.push_back(i);
                continue;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
            Eigen::Vector3d nrm = eig.eigenvectors().col(0);  // smallest eigenvalue
            const Vec3 p = point_at(points, i);
            const Eigen::Vector3d to_view(viewpoint.x - p.x, viewpoint.y - p.y, viewpoint.z - p.z);
            if (nrm.dot(to_view) < 0.0) nrm = -nrm;
            nrm.normalize();
            normals(i, 0) = nrm.x();
            normals(i, 1) = nrm.y();
            normals(i, 2) = nrm.z();
        }
#pragma omp critical
        degenerate.insert(degenerate.end(), local_bad.begin(), local_bad.end());
    }
    if (!degenerate.empty()) {
        const int64_t worst = *std::min_element(degenerate.begin(), degenerate.end());
        throw NumericError("estimate_normals: degenerate neighborhood at point " +
                           std::to_string(worst));
    }
    return normals;
}

std::vector<int64_t> farthest_point_sample(const Tensor& points, int64_t m, int64_t seed_index) {
    const int64_t n = points.dim(0);
    if (m < 1 || m > n)
        throw ShapeError("farthest_point_sample: m = " + std::to_string(m) +
                         " out of range for n = " + std::to_string(n));
    if (seed_index < 0 || seed_index >= n)
        throw ShapeError("farthest_point_sample: seed index out of range");
    std::vector<int64_t> selected;
    selected.reserve(static_cast<size_t>(m));
    selected.push_back(seed_index);
    std::vector<double> min_dist(static_cast<size_t>(n),
                                 std::numeric_limits<double>::infinity());
    min_dist[static_cast<size_t>(seed_index)] = -1.0;
    for (int64_t step = 1; step < m; ++step) {
        const Vec3 last = point_at(points, selected.back());
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) {
            const double d = (point_at(points, i) - last).squared_norm();
            if (d < min_dist[i]) min_dist[i] = d;
        }
        int64_t best = -1;
        double best_d = -1.0;
        for (int64_t i = 0; i < n; ++i) {
            if (min_dist[i] > best_d) {
                best_d = min_dist[i];
                best = i;
            }
        }
        selected.push_back(best);
        min_dist[static_cast<size_t>(best)] = -1.0;
    }
    return selected;
}

int64_t centroid_farthest_index(const Tensor& points) {
    const int64_t n = points.dim(0);
    Vec3 centroid{};
    for (int64_t i = 0; i < n; ++i) centroid = centroid + point_at(points, i);
    centroid = centroid * (1.0 / static_cast<double>(n));
    int64_t best = 0;
    double best_d = -1.0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = (point_at(points, i) - centroid).squared_norm();
        if (d > best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::vector<int64_t> point_to_node(const Tensor& points, const Tensor& superpoints) {
    const int64_t n = points.dim(0), s = superpoints.dim(0);
    if (s < 1) throw ShapeError("point_to_node: need at least one superpoint");
    std::vector<int64_t> assignment(static_cast<size_t>(n));
#pragma omp parallel for schedule(static)
    for (int64_t u = 0; u < n; ++u) {
        const Vec3 p = point_at(points, u);
        int64_t best = 0;
        double best_d = (point_at(superpoints, 0) - p).squared_norm();
        for (int64_t i = 1; i < s; ++i) {
            const double d = (point_at(superpoints, i) - p).squared_norm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        assignment[static_cast<size_t>(u)] = best;
    }
    return assignment;
}

std::vector<std::vector<int64_t>> group_by_node(const std::vector<int64_t>& assignment,
                                                int64_t num_nodes) {
    std::vector<std::vector<int64_t>> groups(static_cast<size_t>(num_nodes));
    for (size_t u = 0; u < assignment.size(); ++u)
        groups[static_cast<size_t>(assignment[u])].push_back(static_cast<int64_t>(u));
    return groups;
}

std::vector<double> inverse_distance_weights(const Vec3& query, const Tensor& neighbors) {
    const int64_t k = neighbors.dim(0);
    if (k < 1) throw ShapeError("inverse_distance_weights: need at least one neighbor");
    std::vector<double> w(static_cast<size_t>(k), 0.0);
    for (int64_t j = 0; j < k; ++j) {
        const double d = (point_at(neighbors, j) - query).norm();
        if (d < 1e-12) {
            std::fill(w.begin(), w.end(), 0.0);
            w[static_cast<size_t>(j)] = 1.0;
            return w;
        }
        w[static_cast<size_t>(j)] = 1.0 / d;
    }
    double sum = 0.0;
    for (double v : w) sum += v;
    for (double& v : w) v /= sum;
    return w;
}

}  // namespace roitr
