#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "roitr/cloud_io.hpp"
#include "roitr/config.hpp"
#include "roitr/linalg.hpp"
#include "roitr/pipeline.hpp"
#include "roitr/synthetic.hpp"

namespace {

using namespace roitr;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;
constexpr int kExitEmpty = 2;
constexpr int kExitConfig = 3;

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct CommonOpts {
    std::string config_path;
    std::string weights_path;
    uint64_t seed = 0;
    bool seed_set = false;
    std::string mode;
};

PipelineConfig resolve_config(const CommonOpts& opts) {
    PipelineConfig config =
        opts.config_path.empty() ? default_config() : load_config(opts.config_path);
    if (opts.seed_set) config.seed = opts.seed;
    if (!opts.mode.empty()) {
        if (opts.mode == "rigid")
            config.mode = MatchMode::kRigid;
        else if (opts.mode == "nonrigid")
            config.mode = MatchMode::kNonrigid;
        else
            throw ConfigError("mode must be 'rigid' or 'nonrigid'");
    }
    config.validate();
    return config;
}

ModelWeights resolve_weights(const CommonOpts& opts, const PipelineConfig& config) {
    if (opts.weights_path.empty()) return init_random_weights(config, config.seed);
    ModelWeights w = load_weights(opts.weights_path);
    if (!w.config_hash().empty() && w.config_hash() != config.hash())
        throw ConfigError("weight file was built for config hash " + w.config_hash() +
                          ", current config hashes to " + config.hash());
    w.validate_inventory(weight_inventory(config));
    return w;
}

PointCloudTriplet load_triplet(const std::string& path, bool estimate, int64_t k,
                               const Vec3& viewpoint) {
    const LoadedCloud cloud = load_cloud(path);
    if (!cloud.normals && !estimate)
        throw ParseError(path + " carries no normals; pass --estimate-normals");
    return make_input_triplet(cloud.points, cloud.normals ? &*cloud.normals : nullptr, k,
                              viewpoint);
}

int cmd_gen(const std::string& shape, int64_t n, double noise, double overlap,
            const std::string& mode, uint64_t seed, bool identity, const std::string& out_a,
            const std::string& out_b, const std::string& out_gt) {
    SyntheticPairSpec spec;
    spec.shape = parse_shape(shape);
    spec.num_points = n;
    spec.noise_sigma = noise;
    spec.overlap = overlap;
    spec.rigid = (mode != "nonrigid");
    spec.identity_transform = identity;
    const SyntheticPair pair = generate_pair(spec, seed);
    save_cloud(out_a, pair.cloud_p.points, &pair.cloud_p.normals);
    save_cloud(out_b, pair.cloud_q.points, &pair.cloud_q.normals);
    if (!out_gt.empty()) save_ground_truth(out_gt, pair.ground_truth);
    std::cout << "gen ok points=" << n << " overlap_pairs=" << pair.ground_truth.pairs.size()
              << " mode=" << (spec.rigid ? "rigid" : "nonrigid") << "\n";
    return kExitOk;
}

int cmd_init_weights(const CommonOpts& opts, const std::string& output) {
    const PipelineConfig config = resolve_config(opts);
    const ModelWeights weights = init_random_weights(config, config.seed);
    save_weights(weights, output);
    std::cout << "weights ok tensors=" << weights.tensors().size()
              << " config_hash=" << config.hash() << " path=" << output << "\n";
    return kExitOk;
}

int cmd_match(const CommonOpts& opts, const std::string& cloud_a, const std::string& cloud_b,
              const std::string& output, bool estimate_normals_flag) {
    const PipelineConfig config = resolve_config(opts);
    const ModelWeights weights = resolve_weights(opts, config);
    const double t0 = now_ms();
    const PointCloudTriplet tp =
        load_triplet(cloud_a, estimate_normals_flag, config.k_neighbors, Vec3{});
    const PointCloudTriplet tq =
        load_triplet(cloud_b, estimate_normals_flag, config.k_neighbors, Vec3{});
    const PipelineResult result = run_pipeline(tp, tq, weights, config);
    const double elapsed = now_ms() - t0;
    if (!output.empty()) {
        CorrespondenceHeader header;
        header.cloud_a = cloud_a;
        header.cloud_b = cloud_b;
        header.config_hash = config.hash();
        save_correspondences(output, result.correspondences, header);
    }
    std::cout << "pairs=" << result.correspondences.pairs.size()
              << " superpoints=" << result.encoded_p.superpoints.size()
              << " elapsed_ms=" << static_cast<int64_t>(elapsed) << "\n";
    return result.correspondences.pairs.empty() ? kExitEmpty : kExitOk;
}

int cmd_register(const CommonOpts& opts, const std::string& cloud_a, const std::string& cloud_b,
                 const std::string& corr_path, const std::string& output,
                 bool estimate_normals_flag) {
    const PipelineConfig config = resolve_config(opts);
    const PointCloudTriplet tp =
        load_triplet(cloud_a, estimate_normals_flag, config.k_neighbors, Vec3{});
    const PointCloudTriplet tq =
        load_triplet(cloud_b, estimate_normals_flag, config.k_neighbors, Vec3{});

    CorrespondenceSet corr;
    if (!corr_path.empty()) {
        corr = load_correspondences(corr_path).first;
    } else {
        const ModelWeights weights = resolve_weights(opts, config);
        corr = run_pipeline(tp, tq, weights, config).correspondences;
    }
    if (corr.pairs.empty()) {
        std::cout << "pairs=0\n";
        return kExitEmpty;
    }
    const RansacResult reg =
        ransac_registration(corr, tp.points, tq.points, config.metrics.inlier_dist,
                            config.metrics.ransac_iters, config.metrics.ransac_seed);
    json j;
    json rot = json::array();
    for (int64_t i = 0; i < 3; ++i)
        for (int64_t k = 0; k < 3; ++k) rot.push_back(reg.transform.rotation(i, k));
    j["rotation"] = rot;
    j["translation"] = {reg.transform.translation[0], reg.transform.translation[1],
                        reg.transform.translation[2]};
    j["inliers"] = reg.inlier_count;
    j["pairs"] = corr.pairs.size();
    if (!output.empty()) {
        std::ofstream out(output);
        out << j.dump(2) << "\n";
    } else {
        std::cout << j.dump(2) << "\n";
    }
    std::cout << "pairs=" << corr.pairs.size() << " inliers=" << reg.inlier_count << "\n";
    return kExitOk;
}

struct EvalPairSpec {
    std::string cloud_a, cloud_b, gt;
};

int cmd_eval(const CommonOpts& opts, const std::string& manifest_path, const std::string& output,
             bool estimate_normals_flag, int jobs) {
    const PipelineConfig config = resolve_config(opts);
    const ModelWeights weights = resolve_weights(opts, config);

    std::ifstream in(manifest_path);
    if (!in) throw ParseError("cannot open eval manifest: " + manifest_path);
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw ParseError("bad eval manifest JSON: " + std::string(e.what()));
    }
    std::vector<EvalPairSpec> specs;
    for (const auto& p : manifest["pairs"])
        specs.push_back({p["cloud_a"].get<std::string>(), p["cloud_b"].get<std::string>(),
                         p["gt"].get<std::string>()});
    if (specs.empty()) throw ParseError("eval manifest lists no pairs");

    const int64_t count = static_cast<int64_t>(specs.size());
    std::vector<json> reports(specs.size());
    std::vector<double> irs(specs.size(), 0.0);
    std::vector<double> rmses(specs.size(), 0.0);
    std::vector<bool> has_rigid(specs.size(), false);

#pragma omp parallel for schedule(dynamic) num_threads(jobs) if (jobs > 1)
    for (int64_t i = 0; i < count; ++i) {
        const EvalPairSpec& spec = specs[static_cast<size_t>(i)];
        const PointCloudTriplet tp =
            load_triplet(spec.cloud_a, estimate_normals_flag, config.k_neighbors, Vec3{});
        const PointCloudTriplet tq =
            load_triplet(spec.cloud_b, estimate_normals_flag, config.k_neighbors, Vec3{});
        const GroundTruth gt = load_ground_truth(spec.gt);
        const PipelineResult result = run_pipeline(tp, tq, weights, config);

        json rep;
        rep["cloud_a"] = spec.cloud_a;
        rep["cloud_b"] = spec.cloud_b;
        rep["pairs"] = result.correspondences.pairs.size();
        if (gt.transform) {
            const InlierRatioResult ir =
                inlier_ratio(result.correspondences, result.decoded_p.points,
                             result.decoded_q.points, *gt.transform, config.metrics.inlier_dist);
            rep["inlier_ratio"] = ir.value;
            rep["empty_warning"] = ir.empty_input;
            irs[static_cast<size_t>(i)] = ir.value;
            has_rigid[static_cast<size_t>(i)] = true;
            if (result.correspondences.pairs.size() >= 3) {
                const RansacResult reg = ransac_registration(
                    result.correspondences, result.decoded_p.points, result.decoded_q.points,
                    config.metrics.inlier_dist, config.metrics.ransac_iters,
                    config.metrics.ransac_seed);
                const double rmse = registration_rmse(
                    reg.transform, gt, result.decoded_p.points, result.decoded_q.points,
                    RmseVariant::kTransformDiscrepancy, config.metrics.rmse2_literal_prefactor);
                rep["rmse"] = rmse;
                rmses[static_cast<size_t>(i)] = rmse;
            } else {
                rep["rmse"] = nullptr;
                rmses[static_cast<size_t>(i)] = std::numeric_limits<double>::infinity();
            }
        } else {
            bool warn = false;
            const double score =
                nfmr(result.correspondences, gt.pairs, result.decoded_p.points,
                     result.decoded_q.points, config.metrics, &warn);
            rep["nfmr"] = score;
            rep["empty_warning"] = warn;
            irs[static_cast<size_t>(i)] = score;
        }
        reports[static_cast<size_t>(i)] = std::move(rep);
    }

    json out;
    out["config"] = json::parse(config_to_json(config));
    out["pairs"] = json::array();
    std::vector<double> rigid_irs, rigid_rmses;
    for (size_t i = 0; i < specs.size(); ++i) {
        out["pairs"].push_back(reports[i]);
        if (has_rigid[i]) {
            rigid_irs.push_back(irs[i]);
            rigid_rmses.push_back(rmses[i]);
        }
    }
    if (!rigid_irs.empty()) {
        out["fmr"] = feature_matching_recall(rigid_irs, config.metrics.fmr_ir_min);
        out["rr"] = registration_recall(rigid_rmses, config.metrics.rmse_max);
    }
    const std::string text = out.dump(2);
    if (!output.empty()) {
        std::ofstream f(output);
        f << text << "\n";
    } else {
        std::cout << text << "\n";
    }
    std::cout << "eval ok pairs=" << specs.size() << "\n";
    return kExitOk;
}

// --- selftest ---------------------------------------------------------

struct SelftestReport {
    std::string name;
    bool pass = false;
    double worst = 0.0;
};

double rel_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0, scale = 1e-12;
    for (int64_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
        scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    }
    return worst / scale;
}

int cmd_selftest(const std::string& weights_path) {
    if (!weights_path.empty()) {
        const ModelWeights w = load_weights(weights_path);  // ConfigError on corruption
        std::cout << "weights ok tensors=" << w.tensors().size() << "\n";
    }

    std::vector<SelftestReport> reports;
    auto check = [&](const std::string& name, bool pass, double worst) {
        reports.push_back({name, pass, worst});
    };

    // Small architecture keeps the suite quick.
    PipelineConfig config = default_config();
    config.k_neighbors = 4;
    config.encoder = {{1, 16, 1}, {4, 24, 1}, {4, 32, 1}, {4, 32, 1}};
    config.global_channels = 32;
    config.match.num_superpoint_corr = 16;
    config.validate();
    const ModelWeights weights = init_random_weights(config, 7);

    SyntheticPairSpec spec;
    spec.num_points = 256;
    spec.overlap = 0.8;
    const SyntheticPair pair = generate_pair(spec, 11);

    {
        const PipelineResult base = run_pipeline(pair.cloud_p, pair.cloud_q, weights, config);
        std::mt19937_64 rng(23);
        double worst_feat = 0.0;
        bool same_pairs = true;
        for (int trial = 0; trial < 3; ++trial) {
            const RigidTransform tp = sample_rigid_transform(rng, 1.0);
            const RigidTransform tq = sample_rigid_transform(rng, 1.0);
            PointCloudTriplet rp = pair.cloud_p;
            rp.points = tp.apply_points(rp.points);
            rp.normals = tp.rotate_vectors(rp.normals);
            PointCloudTriplet rq = pair.cloud_q;
            rq.points = tq.apply_points(rq.points);
            rq.normals = tq.rotate_vectors(rq.normals);
            const PipelineResult moved = run_pipeline(rp, rq, weights, config);
            worst_feat = std::max(worst_feat,
                                  rel_diff(base.decoded_p.features, moved.decoded_p.features));
            worst_feat = std::max(worst_feat,
                                  rel_diff(base.global_features_q, moved.global_features_q));
            if (base.correspondences.pairs.size() != moved.correspondences.pairs.size()) {
                same_pairs = false;
            } else {
                for (size_t i = 0; i < base.correspondences.pairs.size(); ++i)
                    if (base.correspondences.pairs[i].index_p !=
                            moved.correspondences.pairs[i].index_p ||
                        base.correspondences.pairs[i].index_q !=
                            moved.correspondences.pairs[i].index_q)
                        same_pairs = false;
            }
        }
        check("rotation_invariance_features", worst_feat < 1e-6, worst_feat);
        check("rotation_invariance_matches", same_pairs, same_pairs ? 0.0 : 1.0);
    }

    {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> coord(-1.0, 1.0);
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const Vec3 pa{coord(rng), coord(rng), coord(rng)};
            const Vec3 ps{coord(rng), coord(rng), coord(rng)};
            Vec3 na{coord(rng), coord(rng), coord(rng)};
            Vec3 ns{coord(rng), coord(rng), coord(rng)};
            na = na * (1.0 / na.norm());
            ns = ns * (1.0 / ns.norm());
            const auto base = ppf(pa, na, ps, ns);
            const RigidTransform t = sample_rigid_transform(rng, 2.0);
            const auto moved = ppf(t.apply(pa), t.rotate(na), t.apply(ps), t.rotate(ns));
            for (int d = 0; d < 4; ++d) worst = std::max(worst, std::abs(base[d] - moved[d]));
        }
        check("ppf_invariance", worst < 1e-10, worst);
    }

    {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> coord(-1.0, 1.0);
        Tensor pts({64, 3});
        for (int64_t i = 0; i < pts.size(); ++i) pts[i] = coord(rng);
        const NeighborIndex a = knn(pts, pts, 5);
        const NeighborIndex b = serial::knn(pts, pts, 5);
        const bool same = a.indices == b.indices;
        check("knn_matches_serial", same, same ? 0.0 : 1.0);
    }

    {
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> score(-1.0, 1.0);
        Tensor scores({8, 8});
        for (int64_t i = 0; i < scores.size(); ++i) scores[i] = score(rng);
        const Tensor plan = sinkhorn(scores, 1.0, 100);
        double worst = 0.0;
        for (int64_t i = 0; i < 8; ++i) {
            double sum = 0.0;
            for (int64_t j = 0; j <= 8; ++j) sum += plan(i, j);
            worst = std::max(worst, std::abs(sum - 1.0));
        }
        for (int64_t j = 0; j < 8; ++j) {
            double sum = 0.0;
            for (int64_t i = 0; i <= 8; ++i) sum += plan(i, j);
            worst = std::max(worst, std::abs(sum - 1.0));
        }
        check("sinkhorn_marginals", worst < 1e-6, worst);
    }

    {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> coord(-1.0, 1.0);
        const RigidTransform truth = sample_rigid_transform(rng, 0.5);
        Tensor src({40, 3});
        for (int64_t i = 0; i < src.size(); ++i) src[i] = coord(rng);
        const Tensor dst = truth.apply_points(src);
        CorrespondenceSet corr;
        for (int64_t i = 0; i < 40; ++i) corr.pairs.push_back({i, i, 1.0});
        const RansacResult reg = ransac_registration(corr, src, dst, 0.05, 200, 3);
        double worst = 0.0;
        for (int64_t i = 0; i < 3; ++i) {
            for (int64_t j = 0; j < 3; ++j)
                worst = std::max(worst,
                                 std::abs(reg.transform.rotation(i, j) - truth.rotation(i, j)));
            worst =
                std::max(worst, std::abs(reg.transform.translation[i] - truth.translation[i]));
        }
        check("ransac_recovery", worst < 1e-6, worst);
    }

    bool all_pass = true;
    std::printf("%-34s %-6s %s\n", "property", "status", "worst_deviation");
    for (const auto& r : reports) {
        all_pass = all_pass && r.pass;
        std::printf("%-34s %-6s %.3e\n", r.name.c_str(), r.pass ? "pass" : "FAIL", r.worst);
    }
    std::cout << (all_pass ? "selftest ok" : "selftest FAILED") << "\n";
    return all_pass ? kExitOk : kExitParse;
}

// --- bench ------------------------------------------------------------

int cmd_bench() {
    std::printf("%-10s %8s %8s %12s %12s %8s\n", "op", "n", "c", "parallel_ms", "serial_ms",
                "speedup");
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);

    auto time_ms = [](auto&& fn) {
        const double t0 = now_ms();
        fn();
        return now_ms() - t0;
    };

    for (int64_t c : {64, 128, 256, 512}) {
        Tensor a({256, c}), b({c, c});
        for (int64_t i = 0; i < a.size(); ++i) a[i] = coord(rng);
        for (int64_t i = 0; i < b.size(); ++i) b[i] = coord(rng);
        Tensor sink;
        const double par = time_ms([&] { sink = matmul(a, b); });
        const double ser = time_ms([&] { sink = serial::matmul(a, b); });
        std::printf("%-10s %8lld %8lld %12.3f %12.3f %8.2f\n", "matmul", 256ll,
                    static_cast<long long>(c), par, ser, ser / std::max(par, 1e-9));
    }

    for (int64_t c : {32, 64, 128, 256}) {
        const int64_t n = 512, k = 16;
        PipelineConfig config = default_config();
        config.encoder = {{1, c, 1}};
        config.global_channels = c;
        config.validate();
        const ModelWeights w = init_random_weights(config, 1);
        const PamWeights pw = PamWeights::from(w, "enc.block1.aal.pam", config.layer_norm_eps);

        SyntheticPairSpec spec;
        spec.num_points = n;
        const SyntheticPair pair = generate_pair(spec, 2);
        const PointCloudTriplet& cloud = pair.cloud_p;
        Tensor sink;
        const double par =
            time_ms([&] { sink = pam(cloud.points, cloud.normals, cloud, pw, k); });
        const double ser =
            time_ms([&] { sink = serial::pam(cloud.points, cloud.normals, cloud, pw, k); });
        std::printf("%-10s %8lld %8lld %12.3f %12.3f %8.2f\n", "pam", static_cast<long long>(n),
                    static_cast<long long>(c), par, ser, ser / std::max(par, 1e-9));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rotation-invariant point cloud matching"};
    app.require_subcommand(1);

    CommonOpts common;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "pipeline config JSON");
        cmd->add_option("--weights", common.weights_path, "model weight file");
        cmd->add_option("--seed", common.seed, "override the config seed")
            ->each([&](const std::string&) { common.seed_set = true; });
        cmd->add_option("--mode", common.mode, "rigid|nonrigid");
    };

    std::string gen_shape = "composite", gen_mode = "rigid";
    std::string gen_a = "cloud_a.xyz", gen_b = "cloud_b.xyz", gen_gt;
    int64_t gen_n = 1024;
    double gen_noise = 0.0, gen_overlap = 1.0;
    uint64_t gen_seed = 0;
    bool gen_identity = false;
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic pair");
    gen->add_option("--shape", gen_shape, "sphere|box|composite");
    gen->add_option("--n", gen_n, "points per cloud");
    gen->add_option("--noise", gen_noise, "noise sigma (m)");
    gen->add_option("--overlap", gen_overlap, "overlap fraction (0,1]");
    gen->add_option("--mode", gen_mode, "rigid|nonrigid");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_flag("--identity", gen_identity, "use the identity transform");
    gen->add_option("--out-a", gen_a, "first cloud path");
    gen->add_option("--out-b", gen_b, "second cloud path");
    gen->add_option("--gt", gen_gt, "ground-truth JSON path");

    std::string weights_out = "model.rtw";
    CLI::App* init_weights =
        app.add_subcommand("init-weights", "write a seeded random weight file");
    init_weights->add_option("--output", weights_out, "weight file path");
    add_common(init_weights);

    std::string match_a, match_b, match_out;
    bool match_estimate = false;
    CLI::App* match = app.add_subcommand("match", "extract correspondences for a pair");
    match->add_option("cloud_a", match_a, "first cloud")->required();
    match->add_option("cloud_b", match_b, "second cloud")->required();
    match->add_option("--output", match_out, "correspondence file");
    match->add_flag("--estimate-normals", match_estimate, "estimate missing normals");
    add_common(match);

    std::string reg_a, reg_b, reg_corr, reg_out;
    bool reg_estimate = false;
    CLI::App* reg = app.add_subcommand("register", "estimate a rigid transform");
    reg->add_option("cloud_a", reg_a, "first cloud")->required();
    reg->add_option("cloud_b", reg_b, "second cloud")->required();
    reg->add_option("--corr", reg_corr, "reuse a correspondence file");
    reg->add_option("--output", reg_out, "transform JSON path");
    reg->add_flag("--estimate-normals", reg_estimate, "estimate missing normals");
    add_common(reg);

    std::string eval_manifest, eval_out;
    bool eval_estimate = false;
    int eval_jobs = 1;
    CLI::App* eval = app.add_subcommand("eval", "evaluate metrics over pairs");
    eval->add_option("manifest", eval_manifest, "JSON manifest of pairs")->required();
    eval->add_option("--output", eval_out, "report JSON path");
    eval->add_option("--jobs", eval_jobs, "parallel pair workers");
    eval->add_flag("--estimate-normals", eval_estimate, "estimate missing normals");
    add_common(eval);

    std::string selftest_weights;
    CLI::App* selftest = app.add_subcommand("selftest", "run the built-in invariant suite");
    selftest->add_option("--weights", selftest_weights, "validate a weight file first");

    CLI::App* bench =
        app.add_subcommand("bench", "compare parallel kernels with the serial reference");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen(gen_shape, gen_n, gen_noise, gen_overlap, gen_mode, gen_seed,
                           gen_identity, gen_a, gen_b, gen_gt);
        if (init_weights->parsed()) return cmd_init_weights(common, weights_out);
        if (match->parsed())
            return cmd_match(common, match_a, match_b, match_out, match_estimate);
        if (reg->parsed())
            return cmd_register(common, reg_a, reg_b, reg_corr, reg_out, reg_estimate);
        if (eval->parsed())
            return cmd_eval(common, eval_manifest, eval_out, eval_estimate, eval_jobs);
        if (selftest->parsed()) return cmd_selftest(selftest_weights);
        if (bench->parsed()) return cmd_bench();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
    return kExitOk;
}
