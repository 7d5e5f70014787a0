#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "roitr/cloud_io.hpp"
#include "roitr/config.hpp"
#include "roitr/pipeline.hpp"
#include "roitr/synthetic.hpp"

using namespace roitr;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("roitr_test_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

PipelineConfig pocket_config() {
    PipelineConfig config = default_config();
    config.k_neighbors = 4;
    config.encoder = {{1, 8, 1}, {4, 12, 1}};
    config.global_blocks = 1;
    config.global_channels = 12;
    config.match.num_superpoint_corr = 8;
    config.validate();
    return config;
}

}  // namespace

TEST_CASE("default config carries the documented defaults") {
    const PipelineConfig c = default_config();
    CHECK(c.encoder.size() == 4);
    CHECK(c.encoder[0].out_channels == 64);
    CHECK(c.encoder[3].out_channels == 256);
    CHECK(c.global_blocks == 3);
    CHECK(c.global_channels == 256);
    CHECK(c.sigma_d == doctest::Approx(0.2));
    CHECK(c.sigma_a == doctest::Approx(15.0));
    CHECK(c.match.num_superpoint_corr == 256);
    CHECK(c.match.mutual_top_k == 3);
    CHECK(c.match.min_confidence == doctest::Approx(0.05));
    CHECK(c.match.nonrigid_distance_gate == doctest::Approx(0.75));
    CHECK(c.match.nonrigid_fallback_top == 128);
    CHECK(c.match.nonrigid_mutual_top_k == 2);
    CHECK(c.loss.tau_r == doctest::Approx(0.1));
    CHECK(c.loss.delta_e == doctest::Approx(0.1));
    CHECK(c.loss.delta_f == doctest::Approx(1.4));
    CHECK(c.loss.lambda == doctest::Approx(1.0));
    CHECK(c.metrics.fmr_ir_min == doctest::Approx(0.05));
    CHECK(c.metrics.rmse_max == doctest::Approx(0.2));
    CHECK(c.metrics.flow_dist == doctest::Approx(0.04));
    CHECK(c.metrics.nfmr_k == 3);
    CHECK(c.total_downsample() == 64);
    CHECK(c.min_points() == 1024);
}

TEST_CASE("config parser applies defaults and rejects unknown keys") {
    const PipelineConfig empty = parse_config("{}");
    CHECK(empty.global_blocks == 3);
    CHECK_THROWS_AS(parse_config("{\"bogus\": 1}"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"match\": {\"bogus\": 1}}"), ConfigError);
    CHECK_THROWS_AS(parse_config("not json"), ParseError);
    CHECK_THROWS_AS(parse_config("{\"mode\": \"sideways\"}"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"loss\": {\"delta_e\": 2.0}}"), ConfigError);

    const PipelineConfig tweaked = parse_config("{\"k_neighbors\": 8, \"global\": {\"blocks\": 1}}");
    CHECK(tweaked.k_neighbors == 8);
    CHECK(tweaked.global_blocks == 1);
}

TEST_CASE("config round-trips through its own JSON dump") {
    PipelineConfig c = pocket_config();
    c.seed = 77;
    c.mode = MatchMode::kNonrigid;
    const PipelineConfig back = parse_config(config_to_json(c));
    CHECK(back.hash() == c.hash());
    CHECK(back.seed == 77);
    CHECK(back.mode == MatchMode::kNonrigid);
}

TEST_CASE("config hash tracks architecture, not runtime knobs") {
    PipelineConfig a = pocket_config();
    PipelineConfig b = a;
    b.seed = 999;
    b.metrics.ransac_iters = 5;
    CHECK(a.hash() == b.hash());
    b.k_neighbors = 6;
    CHECK(a.hash() != b.hash());
}

TEST_CASE("weight inventory covers the encoder, decoder, global stack, and slack") {
    const PipelineConfig c = pocket_config();
    const auto specs = weight_inventory(c);
    int64_t slack_count = 0;
    bool saw_enc = false, saw_dec = false, saw_gsm = false, saw_pcm = false;
    for (const auto& spec : specs) {
        if (spec.name == "sinkhorn.alpha") ++slack_count;
        saw_enc |= spec.name.starts_with("enc.block1.aal");
        saw_dec |= spec.name.starts_with("dec.block1.tul");
        saw_gsm |= spec.name.starts_with("global.block1.gsm");
        saw_pcm |= spec.name.starts_with("global.block1.pcm");
    }
    CHECK(slack_count == 1);
    CHECK(saw_enc);
    CHECK(saw_dec);
    CHECK(saw_gsm);
    CHECK(saw_pcm);
}

TEST_CASE("random weights are deterministic per seed and differ across seeds") {
    const PipelineConfig c = pocket_config();
    const ModelWeights a = init_random_weights(c, 5);
    const ModelWeights b = init_random_weights(c, 5);
    const ModelWeights d = init_random_weights(c, 6);
    CHECK(a.tensors().size() == b.tensors().size());
    for (const auto& [name, t] : a.tensors())
        CHECK(oracle::max_abs_diff(t, b.get(name)) == 0.0);
    double diff = 0.0;
    for (const auto& [name, t] : a.tensors()) diff += oracle::max_abs_diff(t, d.get(name));
    CHECK(diff > 0.0);
    a.validate_inventory(weight_inventory(c));
}

TEST_CASE("weight save/load round-trip preserves the forward pass") {
    TempDir dir;
    const PipelineConfig config = pocket_config();
    const ModelWeights weights = init_random_weights(config, 9);
    const std::string path = dir.file("model.rtw");
    save_weights(weights, path);
    const ModelWeights loaded = load_weights(path);
    CHECK(loaded.config_hash() == config.hash());
    loaded.validate_inventory(weight_inventory(config));

    SyntheticPairSpec spec;
    spec.num_points = 64;
    const SyntheticPair pair = generate_pair(spec, 13);
    const PipelineResult a = run_pipeline(pair.cloud_p, pair.cloud_q, weights, config);
    const PipelineResult b = run_pipeline(pair.cloud_p, pair.cloud_q, loaded, config);
    CHECK(oracle::rel_diff(a.decoded_p.features, b.decoded_p.features) < 1e-6);
    CHECK(oracle::rel_diff(a.global_features_p, b.global_features_p) < 1e-6);
}

TEST_CASE("weight loader rejects corruption") {
    TempDir dir;
    const PipelineConfig config = pocket_config();
    const ModelWeights weights = init_random_weights(config, 11);
    const std::string path = dir.file("model.rtw");
    save_weights(weights, path);

    SUBCASE("bad magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXXXXXX", 8);
        f.close();
        CHECK_THROWS_AS(load_weights(path), ConfigError);
    }
    SUBCASE("truncated blob") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
        CHECK_THROWS_AS(load_weights(path), ConfigError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_weights(dir.file("nope.rtw")), ParseError); }
    SUBCASE("wrong architecture is caught by the pipeline") {
        PipelineConfig other = pocket_config();
        other.k_neighbors = 7;
        const ModelWeights loaded = load_weights(path);
        SyntheticPairSpec spec;
        spec.num_points = 64;
        const SyntheticPair pair = generate_pair(spec, 15);
        CHECK_THROWS_AS(run_pipeline(pair.cloud_p, pair.cloud_q, loaded, other), ConfigError);
    }
}

TEST_CASE("cloud text format round-trip and validation") {
    TempDir dir;
    std::mt19937_64 rng(17);
    Tensor pts = oracle::random_cloud(rng, 10);
    Tensor nrm = oracle::random_unit_rows(rng, 10, 3);
    const std::string path = dir.file("cloud.xyz");
    save_cloud(path, pts, &nrm);
    const LoadedCloud back = load_cloud(path);
    REQUIRE(back.normals.has_value());
    CHECK(oracle::max_abs_diff(back.points, pts) < 1e-15);
    CHECK(oracle::max_abs_diff(*back.normals, nrm) < 1e-15);

    SUBCASE("comments and blank lines are skipped") {
        std::ofstream f(dir.file("annotated.xyz"));
        f << "# a comment\n\n1 2 3\n4 5 6 # trailing\n";
        f.close();
        const LoadedCloud c = load_cloud(dir.file("annotated.xyz"));
        CHECK(c.points.dim(0) == 2);
        CHECK_FALSE(c.normals.has_value());
        CHECK(c.points(1, 2) == doctest::Approx(6.0));
    }
    SUBCASE("bad column counts are rejected") {
        std::ofstream f(dir.file("bad.xyz"));
        f << "1 2\n";
        f.close();
        CHECK_THROWS_AS(load_cloud(dir.file("bad.xyz")), ParseError);
    }
    SUBCASE("mixed column counts are rejected") {
        std::ofstream f(dir.file("mixed.xyz"));
        f << "1 2 3\n1 2 3 4 5 6\n";
        f.close();
        CHECK_THROWS_AS(load_cloud(dir.file("mixed.xyz")), ParseError);
    }
}

TEST_CASE("ascii ply reader handles properties and extras") {
    TempDir dir;
    const std::string path = dir.file("cloud.ply");
    {
        std::ofstream f(path);
        f << "ply\nformat ascii 1.0\ncomment made by hand\n"
          << "element vertex 2\n"
          << "property float x\nproperty float y\nproperty float z\n"
          << "property float confidence\n"
          << "property float nx\nproperty float ny\nproperty float nz\n"
          << "end_header\n"
          << "0 0 0 0.9 1 0 0\n"
          << "1 2 3 0.5 0 1 0\n";
    }
    const LoadedCloud c = load_cloud(path);
    CHECK(c.points.dim(0) == 2);
    REQUIRE(c.normals.has_value());
    CHECK(c.points(1, 0) == doctest::Approx(1.0));
    CHECK((*c.normals)(1, 1) == doctest::Approx(1.0));

    SUBCASE("binary ply is rejected") {
        std::ofstream f(dir.file("bin.ply"));
        f << "ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
          << "property float x\nproperty float y\nproperty float z\nend_header\n";
        f.close();
        CHECK_THROWS_AS(load_cloud(dir.file("bin.ply")), ParseError);
    }
    SUBCASE("missing coordinates are rejected") {
        std::ofstream f(dir.file("noz.ply"));
        f << "ply\nformat ascii 1.0\nelement vertex 1\n"
          << "property float x\nproperty float y\nend_header\n0 0\n";
        f.close();
        CHECK_THROWS_AS(load_cloud(dir.file("noz.ply")), ParseError);
    }
}

TEST_CASE("correspondence file round-trip keeps header and pairs") {
    TempDir dir;
    CorrespondenceSet corr;
    corr.pairs.push_back({3, 7, 0.25});
    corr.pairs.push_back({1, 2, 0.75});
    CorrespondenceHeader header;
    header.cloud_a = "a.xyz";
    header.cloud_b = "b.xyz";
    header.config_hash = "cafe1234";
    const std::string path = dir.file("corr.txt");
    save_correspondences(path, corr, header);
    const auto [back, back_header] = load_correspondences(path);
    CHECK(back_header.cloud_a == "a.xyz");
    CHECK(back_header.config_hash == "cafe1234");
    REQUIRE(back.pairs.size() == 2);
    CHECK(back.pairs[0].index_p == 3);
    CHECK(back.pairs[0].confidence == doctest::Approx(0.25));

    std::ofstream broken(dir.file("broken.txt"));
    broken.close();
    CHECK_THROWS_AS(load_correspondences(dir.file("broken.txt")), ParseError);
}

TEST_CASE("ground truth json round-trip for both modes") {
    TempDir dir;
    SUBCASE("rigid") {
        std::mt19937_64 rng(19);
        GroundTruth gt;
        gt.transform = sample_rigid_transform(rng, 0.5);
        gt.pairs = {{0, 1}, {2, 3}};
        const std::string path = dir.file("gt.json");
        save_ground_truth(path, gt);
        const GroundTruth back = load_ground_truth(path);
        REQUIRE(back.transform.has_value());
        CHECK(oracle::max_abs_diff(back.transform->rotation, gt.transform->rotation) < 1e-12);
        CHECK(back.pairs == gt.pairs);
    }
    SUBCASE("nonrigid") {
        GroundTruth gt;
        Tensor flow({2, 3}, {0.1, 0.0, -0.1, 0.2, 0.3, 0.0});
        gt.flow = flow;
        gt.pairs = {{0, 0}};
        const std::string path = dir.file("gt_flow.json");
        save_ground_truth(path, gt);
        const GroundTruth back = load_ground_truth(path);
        REQUIRE(back.flow.has_value());
        CHECK(oracle::max_abs_diff(*back.flow, flow) < 1e-12);
    }
}

TEST_CASE("synthetic pairs are deterministic and honor their contract") {
    SyntheticPairSpec spec;
    spec.num_points = 128;
    spec.overlap = 0.75;
    const SyntheticPair a = generate_pair(spec, 21);
    const SyntheticPair b = generate_pair(spec, 21);
    CHECK(oracle::max_abs_diff(a.cloud_p.points, b.cloud_p.points) == 0.0);
    CHECK(oracle::max_abs_diff(a.cloud_q.points, b.cloud_q.points) == 0.0);
    CHECK(a.ground_truth.pairs == b.ground_truth.pairs);
    CHECK(a.ground_truth.pairs.size() == 96);  // 0.75 * 128

    const SyntheticPair c = generate_pair(spec, 22);
    CHECK(oracle::max_abs_diff(a.cloud_p.points, c.cloud_p.points) > 0.0);

    REQUIRE(a.ground_truth.transform.has_value());
    CHECK(a.ground_truth.transform->is_orthonormal(1e-12));

    // ground-truth pairs are exact index maps before noise
    for (const auto& [u, v] : a.ground_truth.pairs) {
        const Vec3 moved = a.ground_truth.transform->apply(point_at(a.cloud_p.points, u));
        CHECK((moved - point_at(a.cloud_q.points, v)).norm() < 1e-12);
    }
}

TEST_CASE("identity synthetic pair is an exact copy") {
    SyntheticPairSpec spec;
    spec.num_points = 50;
    spec.overlap = 1.0;
    spec.identity_transform = true;
    const SyntheticPair pair = generate_pair(spec, 23);
    CHECK(oracle::max_abs_diff(pair.cloud_p.points, pair.cloud_q.points) == 0.0);
    for (size_t i = 0; i < pair.ground_truth.pairs.size(); ++i) {
        CHECK(pair.ground_truth.pairs[i].first == static_cast<int64_t>(i));
        CHECK(pair.ground_truth.pairs[i].second == static_cast<int64_t>(i));
    }
}

TEST_CASE("nonrigid pairs expose a smooth flow field") {
    SyntheticPairSpec spec;
    spec.num_points = 80;
    spec.rigid = false;
    spec.overlap = 1.0;
    const SyntheticPair pair = generate_pair(spec, 25);
    REQUIRE(pair.ground_truth.flow.has_value());
    CHECK(pair.ground_truth.flow->dim(0) == 80);
    for (const auto& [u, v] : pair.ground_truth.pairs) {
        const Vec3 flow = point_at(*pair.ground_truth.flow, u);
        const Vec3 moved = point_at(pair.cloud_p.points, u) + flow;
        CHECK((moved - point_at(pair.cloud_q.points, v)).norm() < 1e-12);
    }
}
