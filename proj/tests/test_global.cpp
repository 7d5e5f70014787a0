#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "roitr/global_transformer.hpp"
#include "roitr/linalg.hpp"
#include "roitr/synthetic.hpp"

using namespace roitr;

namespace {

PipelineConfig tiny_global_config(int64_t c = 16, int64_t blocks = 2) {
    PipelineConfig config = default_config();
    config.k_neighbors = 4;
    config.encoder = {{1, c, 1}};
    config.global_channels = c;
    config.global_blocks = blocks;
    config.validate();
    return config;
}

}  // namespace

TEST_CASE("distance embedding diagonal and trig identity") {
    std::mt19937_64 rng(51);
    Tensor pts = oracle::random_cloud(rng, 6);
    const Tensor emb = sinusoidal_distance_embed(pts, 8, 0.2);
    for (int64_t i = 0; i < 6; ++i)
        for (int64_t l = 0; l < 4; ++l) {
            CHECK(emb(i, i, 2 * l) == doctest::Approx(0.0).epsilon(1e-15));
            CHECK(emb(i, i, 2 * l + 1) == doctest::Approx(1.0).epsilon(1e-15));
        }
    for (int64_t i = 0; i < 6; ++i)
        for (int64_t j = 0; j < 6; ++j)
            for (int64_t l = 0; l < 4; ++l) {
                const double s = emb(i, j, 2 * l), c = emb(i, j, 2 * l + 1);
                CHECK(s * s + c * c == doctest::Approx(1.0).epsilon(1e-12));
            }
}

TEST_CASE("distance embedding spot value at rho = sigma_d") {
    Tensor pts({2, 3}, {0, 0, 0, 0.2, 0, 0});
    const Tensor emb = sinusoidal_distance_embed(pts, 4, 0.2);
    CHECK(emb(0, 1, 0) == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
    CHECK(emb(0, 1, 1) == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
    // symmetry of the distance part
    CHECK(emb(1, 0, 0) == emb(0, 1, 0));
    CHECK_THROWS_AS(sinusoidal_distance_embed(pts, 5, 0.2), ShapeError);
}

TEST_CASE("angular embedding handles the i == j row via the zero-vector rule") {
    std::mt19937_64 rng(52);
    Tensor pts = oracle::random_cloud(rng, 7);
    const Tensor emb = angular_embed(pts, 6, 15.0);
    auto at4 = [&](int64_t i, int64_t j, int64_t s, int64_t d) {
        return emb.data()[((i * 7 + j) * 3 + s) * 6 + d];
    };
    for (int64_t i = 0; i < 7; ++i)
        for (int64_t s = 0; s < 3; ++s)
            for (int64_t l = 0; l < 3; ++l) {
                CHECK(at4(i, i, s, 2 * l) == doctest::Approx(0.0).epsilon(1e-15));
                CHECK(at4(i, i, s, 2 * l + 1) == doctest::Approx(1.0).epsilon(1e-15));
            }
    CHECK_THROWS_AS(angular_embed(oracle::random_cloud(rng, 3), 6, 15.0), ShapeError);
}

TEST_CASE("angular embedding sees a straight angle for collinear neighbors") {
    // 0 and 1 close together so 1 is a nearest neighbor of 0; j sits on the
    // opposite side of the line through them.
    Tensor pts({5, 3},
               {0, 0, 0, 0.1, 0, 0, -5, 0, 0, 0.05, 0.2, 0, 0.05, -0.2, 0});
    const Tensor emb = angular_embed(pts, 2, 1.0);
    auto at4 = [&](int64_t i, int64_t j, int64_t s, int64_t d) {
        return emb.data()[((i * 5 + j) * 3 + s) * 2 + d];
    };
    // neighbor slot 0 of point 0 is point 1 (distance 0.1); alpha(1, 2) = pi
    CHECK(at4(0, 2, 0, 0) == doctest::Approx(std::sin(3.14159265358979323846)).epsilon(1e-9));
    CHECK(at4(0, 2, 0, 1) == doctest::Approx(std::cos(3.14159265358979323846)).epsilon(1e-9));
}

TEST_CASE("geometric embedding is rigid-motion invariant") {
    std::mt19937_64 rng(53);
    Tensor pts = oracle::random_cloud(rng, 9);
    const GeometricEmbeddingRaw base = build_geometric_embedding(pts, 8, 0.2, 15.0);
    for (int trial = 0; trial < 8; ++trial) {
        const RigidTransform t = sample_rigid_transform(rng, 2.0);
        const GeometricEmbeddingRaw moved =
            build_geometric_embedding(t.apply_points(pts), 8, 0.2, 15.0);
        CHECK(oracle::max_abs_diff(base.distance, moved.distance) < 1e-9);
        CHECK(oracle::max_abs_diff(base.angular, moved.angular) < 1e-9);
    }
}

TEST_CASE("embedding fusion reduces correctly under zero branches") {
    std::mt19937_64 rng(54);
    Tensor pts = oracle::random_cloud(rng, 5);
    const GeometricEmbeddingRaw raw = build_geometric_embedding(pts, 6, 0.2, 15.0);

    Tensor zero({6, 6});
    Tensor ident({6, 6});
    for (int64_t i = 0; i < 6; ++i) ident(i, i) = 1.0;

    SUBCASE("zero angular branch leaves the projected distance part") {
        Tensor wd = oracle::random_matrix(rng, 6, 6);
        const Tensor fused = fuse_geometric_embedding(raw.distance, raw.angular, wd, zero);
        for (int64_t i = 0; i < 5; ++i)
            for (int64_t j = 0; j < 5; ++j) {
                Tensor row({1, 6});
                for (int64_t d = 0; d < 6; ++d) row(0, d) = raw.distance(i, j, d);
                const Tensor expect = oracle::matmul(row, wd);
                for (int64_t d = 0; d < 6; ++d)
                    CHECK(fused(i, j, d) == doctest::Approx(expect(0, d)).epsilon(1e-12));
            }
    }
    SUBCASE("identity distance projection with zero angular is the raw embedding") {
        const Tensor fused = fuse_geometric_embedding(raw.distance, raw.angular, ident, zero);
        CHECK(oracle::max_abs_diff(fused, raw.distance) < 1e-15);
    }
    SUBCASE("random instance matches an independent loop evaluation") {
        Tensor wd = oracle::random_matrix(rng, 6, 6);
        Tensor wa = oracle::random_matrix(rng, 6, 6);
        const Tensor fused = fuse_geometric_embedding(raw.distance, raw.angular, wd, wa);
        for (int64_t i = 0; i < 5; ++i)
            for (int64_t j = 0; j < 5; ++j)
                for (int64_t d = 0; d < 6; ++d) {
                    double dist_part = 0.0;
                    for (int64_t e = 0; e < 6; ++e)
                        dist_part += raw.distance(i, j, e) * wd(e, d);
                    double pooled = -std::numeric_limits<double>::infinity();
                    for (int64_t s = 0; s < 3; ++s) {
                        double v = 0.0;
                        for (int64_t e = 0; e < 6; ++e)
                            v += raw.angular.data()[((i * 5 + j) * 3 + s) * 6 + e] * wa(e, d);
                        pooled = std::max(pooled, v);
                    }
                    CHECK(fused(i, j, d) ==
                          doctest::Approx(dist_part + pooled).epsilon(1e-11));
                }
    }
}

TEST_CASE("gsm with zero embedding weights equals standard attention") {
    std::mt19937_64 rng(55);
    PipelineConfig config = tiny_global_config(16, 1);
    ModelWeights weights = init_random_weights(config, 27);

    // Zero the geometry projections by rebuilding the tensor map.
    std::map<std::string, Tensor> tensors = weights.tensors();
    tensors["global.block1.gsm.w_e"] = Tensor({16, 16});
    tensors["global.block1.gsm.w_g"] = Tensor({16, 16});
    const ModelWeights zeroed(std::move(tensors), weights.config_hash());

    const GsmWeights gw = GsmWeights::from(zeroed, "global.block1.gsm", config.layer_norm_eps);
    PointCloudTriplet frame = oracle::random_triplet(rng, 10, 16);

    const PositionContextPair got = gsm(frame, gw);
    const Tensor expect = oracle::standard_attention(
        frame.features, *gw.w_q, *gw.w_k, *gw.w_v, *gw.ctx_ln_gain, *gw.ctx_ln_bias,
        *gw.ctx_ffn_w1, *gw.ctx_ffn_w2, *gw.ctx_ffn_ln_gain, *gw.ctx_ffn_ln_bias,
        config.layer_norm_eps);
    CHECK(oracle::rel_diff(got.context, expect) < 1e-9);
}

TEST_CASE("gsm on a rigidly moved frame is unchanged") {
    std::mt19937_64 rng(56);
    PipelineConfig config = tiny_global_config(16, 1);
    const ModelWeights weights = init_random_weights(config, 29);
    const GsmWeights gw = GsmWeights::from(weights, "global.block1.gsm", config.layer_norm_eps);
    PointCloudTriplet frame = oracle::random_triplet(rng, 8, 16);
    const PositionContextPair base = gsm(frame, gw);
    for (int trial = 0; trial < 5; ++trial) {
        const RigidTransform t = sample_rigid_transform(rng, 2.0);
        const PositionContextPair moved = gsm(oracle::transformed(frame, t), gw);
        CHECK(oracle::rel_diff(base.context, moved.context) < 1e-7);
        CHECK(oracle::rel_diff(base.position, moved.position) < 1e-7);
    }
}

TEST_CASE("pcm broadcasts a singleton source row") {
    std::mt19937_64 rng(57);
    PipelineConfig config = tiny_global_config(8, 1);
    const ModelWeights weights = init_random_weights(config, 31);
    const PcmWeights pw = PcmWeights::from(weights, "global.block1.pcm", config.layer_norm_eps);

    PositionContextPair target{oracle::random_matrix(rng, 5, 8), oracle::random_matrix(rng, 5, 8)};
    PositionContextPair source{oracle::random_matrix(rng, 1, 8), oracle::random_matrix(rng, 1, 8)};

    // With one source row the attention is 1, so every target row fuses the
    // same projected value row; rebuild that closed form directly.
    const Tensor got = pcm(target, source, pw);
    Tensor f_target = add(target.position, target.context);
    Tensor f_source = add(source.position, source.context);
    Tensor v = matmul(f_source, *pw.w_v);
    Tensor h({5, 8});
    for (int64_t i = 0; i < 5; ++i)
        for (int64_t d = 0; d < 8; ++d) h(i, d) = f_target(i, d) + v(0, d);
    h = layer_norm(h, *pw.ln_gain, *pw.ln_bias, config.layer_norm_eps);
    Tensor mid = relu(matmul(h, *pw.ffn_w1));
    Tensor expect = layer_norm(add(h, matmul(mid, *pw.ffn_w2)), *pw.ffn_ln_gain, *pw.ffn_ln_bias,
                               config.layer_norm_eps);
    CHECK(oracle::rel_diff(got, expect) < 1e-12);
}

TEST_CASE("pcm is symmetric under frame swap with identical frames") {
    std::mt19937_64 rng(58);
    PipelineConfig config = tiny_global_config(8, 1);
    const ModelWeights weights = init_random_weights(config, 33);
    const PcmWeights pw = PcmWeights::from(weights, "global.block1.pcm", config.layer_norm_eps);
    PositionContextPair a{oracle::random_matrix(rng, 6, 8), oracle::random_matrix(rng, 6, 8)};
    const Tensor ab = pcm(a, a, pw);
    const Tensor ba = pcm(a, a, pw);
    CHECK(oracle::max_abs_diff(ab, ba) == 0.0);
}

TEST_CASE("global stack passes features through when g is zero") {
    std::mt19937_64 rng(59);
    PipelineConfig config = tiny_global_config(16, 0);
    const ModelWeights weights = init_random_weights(config, 35);
    PointCloudTriplet p = oracle::random_triplet(rng, 6, 16);
    PointCloudTriplet q = oracle::random_triplet(rng, 7, 16);
    const auto [fp, fq] = run_global_stack(p, q, weights, config);
    CHECK(oracle::max_abs_diff(fp, p.features) == 0.0);
    CHECK(oracle::max_abs_diff(fq, q.features) == 0.0);
}

TEST_CASE("global stack runs one and two blocks") {
    std::mt19937_64 rng(60);
    for (int64_t g : {1, 2}) {
        PipelineConfig config = tiny_global_config(16, g);
        const ModelWeights weights = init_random_weights(config, 37);
        PointCloudTriplet p = oracle::random_triplet(rng, 6, 16);
        PointCloudTriplet q = oracle::random_triplet(rng, 5, 16);
        const auto [fp, fq] = run_global_stack(p, q, weights, config);
        CHECK(fp.dim(0) == 6);
        CHECK(fq.dim(0) == 5);
        CHECK(fp.dim(1) == 16);
        CHECK(fq.dim(1) == 16);
    }
}

TEST_CASE("global stack is invariant under independent per-frame motion") {
    std::mt19937_64 rng(61);
    PipelineConfig config = tiny_global_config(16, 2);
    const ModelWeights weights = init_random_weights(config, 39);
    PointCloudTriplet p = oracle::random_triplet(rng, 8, 16);
    PointCloudTriplet q = oracle::random_triplet(rng, 9, 16);
    const auto [fp, fq] = run_global_stack(p, q, weights, config);
    for (int trial = 0; trial < 5; ++trial) {
        const RigidTransform tp = sample_rigid_transform(rng, 2.0);
        const RigidTransform tq = sample_rigid_transform(rng, 2.0);
        const auto [mp, mq] = run_global_stack(oracle::transformed(p, tp),
                                               oracle::transformed(q, tq), weights, config);
        CHECK(oracle::rel_diff(fp, mp) < 1e-6);
        CHECK(oracle::rel_diff(fq, mq) < 1e-6);
    }
}

TEST_CASE("attention rows inside gsm are stochastic") {
    // Indirect check through softmax_rows, which gsm uses for its hybrid
    // scores: any finite matrix must produce rows on the simplex.
    std::mt19937_64 rng(62);
    Tensor scores = oracle::random_matrix(rng, 10, 10, -50.0, 50.0);
    const Tensor attn = softmax_rows(scores);
    for (int64_t i = 0; i < 10; ++i) {
        double sum = 0.0;
        for (int64_t j = 0; j < 10; ++j) {
            CHECK(attn(i, j) >= 0.0);
            sum += attn(i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}
