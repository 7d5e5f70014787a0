#include "roitr/synthetic.hpp"

#include <cmath>

namespace roitr {

void SyntheticPairSpec::validate() const {
    if (num_points < 4) throw ShapeError("synthetic: need at least 4 points");
    if (overlap <= 0.0 || overlap > 1.0) throw ShapeError("synthetic: overlap must be in (0, 1]");
    if (noise_sigma < 0.0) throw ShapeError("synthetic: noise sigma must be >= 0");
    if (deform_amplitude < 0.0) throw ShapeError("synthetic: deform amplitude must be >= 0");
}

RigidTransform sample_rigid_transform(std::mt19937_64& rng, double max_translation) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    double q[4];
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& v : q) {
            v = gauss(rng);
            norm += v * v;
        }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    const double w = q[0] / norm, x = q[1] / norm, y = q[2] / norm, z = q[3] / norm;

    RigidTransform t = RigidTransform::identity();
    Tensor& r = t.rotation;
    r(0, 0) = 1.0 - 2.0 * (y * y + z * z);
    r(0, 1) = 2.0 * (x * y - w * z);
    r(0, 2) = 2.0 * (x * z + w * y);
    r(1, 0) = 2.0 * (x * y + w * z);
    r(1, 1) = 1.0 - 2.0 * (x * x + z * z);
    r(1, 2) = 2.0 * (y * z - w * x);
    r(2, 0) = 2.0 * (x * z - w * y);
    r(2, 1) = 2.0 * (y * z + w * x);
    r(2, 2) = 1.0 - 2.0 * (x * x + y * y);

    std::uniform_real_distribution<double> shift(-max_translation, max_translation);
    for (int64_t i = 0; i < 3; ++i) t.translation[i] = shift(rng);
    return t;
}

namespace {

struct SurfaceSample {
    Vec3 point;
    Vec3 normal;
};

// Desk-scale surfaces centered at the origin: sphere radius 0.5, box with
// half extents (0.5, 0.4, 0.3), or both shifted apart.
SurfaceSample sample_surface(SyntheticShape shape, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto sphere = [&](double radius, const Vec3& center) {
        Vec3 dir;
        double n = 0.0;
        do {
            dir = {gauss(rng), gauss(rng), gauss(rng)};
            n = dir.norm();
        } while (n < 1e-9);
        dir = dir * (1.0 / n);
        return SurfaceSample{center + dir * radius, dir};
    };
    auto box = [&](const Vec3& half, const Vec3& center) {
        const double areas[3] = {half.y * half.z, half.x * half.z, half.x * half.y};
        const double total = areas[0] + areas[1] + areas[2];
        double pickv = unit(rng) * total;
        int axis = 0;
        if (pickv > areas[0]) {
            pickv -= areas[0];
            axis = pickv > areas[1] ? 2 : 1;
        }
        const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
        Vec3 p{(2.0 * unit(rng) - 1.0) * half.x, (2.0 * unit(rng) - 1.0) * half.y,
               (2.0 * unit(rng) - 1.0) * half.z};
        Vec3 nrm{0.0, 0.0, 0.0};
        if (axis == 0) {
            p.x = sign * half.x;
            nrm.x = sign;
        } else if (axis == 1) {
            p.y = sign * half.y;
            nrm.y = sign;
        } else {
            p.z = sign * half.z;
            nrm.z = sign;
        }
        return SurfaceSample{center + p, nrm};
    };
    switch (shape) {
        case SyntheticShape::kSphere:
            return sphere(0.5, {0.0, 0.0, 0.0});
        case SyntheticShape::kBox:
            return box({0.5, 0.4, 0.3}, {0.0, 0.0, 0.0});
        case SyntheticShape::kComposite:
        default:
            if (unit(rng) < 0.5) return sphere(0.35, {-0.45, 0.0, 0.0});
            return box({0.35, 0.3, 0.25}, {0.45, 0.0, 0.1});
    }
}

Vec3 deformation_flow(const Vec3& p, double amplitude, const double phase[3]) {
    return {amplitude * std::sin(1.7 * p.y + phase[0]),
            amplitude * std::sin(1.3 * p.z + phase[1]),
            amplitude * std::sin(1.9 * p.x + phase[2])};
}

}  // namespace

SyntheticPair generate_pair(const SyntheticPairSpec& spec, uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);

    const int64_t n = spec.num_points;
    const int64_t n_overlap = std::max<int64_t>(1, std::llround(spec.overlap * static_cast<double>(n)));
    const int64_t total = 2 * n - n_overlap;

    std::vector<SurfaceSample> stream(static_cast<size_t>(total));
    for (auto& s : stream) s = sample_surface(spec.shape, rng);

    SyntheticPair out;
    out.cloud_p.points = Tensor({n, 3});
    out.cloud_p.normals = Tensor({n, 3});
    out.cloud_p.features = Tensor::full({n, 1}, 1.0);
    for (int64_t i = 0; i < n; ++i) {
        set_point(out.cloud_p.points, i, stream[static_cast<size_t>(i)].point);
        set_point(out.cloud_p.normals, i, stream[static_cast<size_t>(i)].normal);
    }

    // The second frame reads a shifted window of the same sample stream,
    // so the trailing n_overlap points of P are its leading points.
    const int64_t q_start = n - n_overlap;
    out.ground_truth.pairs.reserve(static_cast<size_t>(n_overlap));
    for (int64_t i = 0; i < n_overlap; ++i)
        out.ground_truth.pairs.emplace_back(q_start + i, i);

    out.cloud_q.points = Tensor({n, 3});
    out.cloud_q.normals = Tensor({n, 3});
    out.cloud_q.features = Tensor::full({n, 1}, 1.0);

    double phase[3] = {0.0, 0.0, 0.0};
    RigidTransform gt_transform = RigidTransform::identity();
    if (spec.rigid) {
        if (!spec.identity_transform)
            gt_transform = sample_rigid_transform(rng, spec.max_translation);
        out.ground_truth.transform = gt_transform;
    } else {
        std::uniform_real_distribution<double> ph(0.0, 2.0 * 3.14159265358979323846);
        for (double& v : phase) v = ph(rng);
        Tensor flow({n, 3});
        for (int64_t i = 0; i < n; ++i)
            set_point(flow, i,
                      deformation_flow(point_at(out.cloud_p.points, i), spec.deform_amplitude,
                                       phase));
        out.ground_truth.flow = std::move(flow);
    }

    for (int64_t i = 0; i < n; ++i) {
        const SurfaceSample& s = stream[static_cast<size_t>(q_start + i)];
        if (spec.rigid) {
            set_point(out.cloud_q.points, i, gt_transform.apply(s.point));
            set_point(out.cloud_q.normals, i, gt_transform.rotate(s.normal));
        } else {
            set_point(out.cloud_q.points, i,
                      s.point + deformation_flow(s.point, spec.deform_amplitude, phase));
            // The deformation is gentle; surface normals carry over.
            set_point(out.cloud_q.normals, i, s.normal);
        }
    }

    if (spec.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t d = 0; d < 3; ++d) out.cloud_q.points(i, d) += noise(rng);
    }

    out.cloud_p.validate("synthetic cloud P");
    out.cloud_q.validate("synthetic cloud Q");
    return out;
}

SyntheticShape parse_shape(const std::string& name) {
    if (name == "sphere") return SyntheticShape::kSphere;
    if (name == "box") return SyntheticShape::kBox;
    if (name == "composite") return SyntheticShape::kComposite;
    throw ParseError("unknown shape: " + name + " (expected sphere|box|composite)");
}

}  // namespace roitr
