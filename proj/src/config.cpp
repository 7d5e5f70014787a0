#include "roitr/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace roitr {

using nlohmann::json;

void PipelineConfig::validate() const {
    if (k_neighbors < 1) throw ConfigError("config: k_neighbors must be >= 1");
    if (tul_k < 1) throw ConfigError("config: tul_k must be >= 1");
    if (layer_norm_eps <= 0.0) throw ConfigError("config: layer_norm_eps must be > 0");
    if (encoder.empty()) throw ConfigError("config: encoder plan must have at least one block");
    for (const auto& b : encoder) {
        if (b.downsample_ratio < 1) throw ConfigError("config: block ratio must be >= 1");
        if (b.out_channels < 1) throw ConfigError("config: block channels must be >= 1");
        if (b.num_pal < 0) throw ConfigError("config: num_pal must be >= 0");
    }
    if (global_blocks < 0) throw ConfigError("config: global_blocks must be >= 0");
    if (global_channels != encoder.back().out_channels)
        throw ConfigError("config: global_channels must equal the last encoder width");
    if (global_channels % 2 != 0)
        throw ConfigError("config: global_channels must be even for sinusoidal embedding");
    if (sigma_d <= 0.0 || sigma_a <= 0.0) throw ConfigError("config: sigma_d/sigma_a must be > 0");
    if (ffn_expansion < 1) throw ConfigError("config: ffn_expansion must be >= 1");
    if (match.num_superpoint_corr < 1 || match.sinkhorn_iters < 1 || match.mutual_top_k < 1 ||
        match.nonrigid_fallback_top < 1 || match.nonrigid_mutual_top_k < 1)
        throw ConfigError("config: match counts must be >= 1");
    if (match.min_confidence < 0.0 || match.min_confidence >= 1.0)
        throw ConfigError("config: min_confidence must be in [0, 1)");
    if (match.nonrigid_distance_gate <= 0.0)
        throw ConfigError("config: nonrigid_distance_gate must be > 0");
    if (loss.tau_r < 0.0 || loss.tau_r >= 1.0) throw ConfigError("config: tau_r must be in [0, 1)");
    if (loss.delta_e >= loss.delta_f) throw ConfigError("config: delta_e must be < delta_f");
    if (loss.gamma <= 0.0) throw ConfigError("config: gamma must be > 0");
    if (loss.lambda < 0.0) throw ConfigError("config: lambda must be >= 0");
    if (metrics.inlier_dist <= 0.0 || metrics.fmr_ir_min <= 0.0 || metrics.rmse_max <= 0.0 ||
        metrics.flow_dist <= 0.0)
        throw ConfigError("config: metric thresholds must be > 0");
    if (metrics.nfmr_k < 1) throw ConfigError("config: nfmr_k must be >= 1");
    if (metrics.ransac_iters < 1) throw ConfigError("config: ransac_iters must be >= 1");
}

int64_t PipelineConfig::total_downsample() const {
    int64_t r = 1;
    for (const auto& b : encoder) r *= b.downsample_ratio;
    return r;
}

int64_t PipelineConfig::min_points() const {
    return total_downsample() * k_neighbors;
}

PipelineConfig default_config() {
    return PipelineConfig{};
}

static json config_json(const PipelineConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["mode"] = c.mode == MatchMode::kRigid ? "rigid" : "nonrigid";
    j["k_neighbors"] = c.k_neighbors;
    j["tul_k"] = c.tul_k;
    j["layer_norm_eps"] = c.layer_norm_eps;
    json enc = json::array();
    for (const auto& b : c.encoder)
        enc.push_back({{"ratio", b.downsample_ratio},
                       {"channels", b.out_channels},
                       {"num_pal", b.num_pal}});
    j["encoder"] = enc;
    j["global"] = {{"blocks", c.global_blocks},
                   {"channels", c.global_channels},
                   {"sigma_d", c.sigma_d},
                   {"sigma_a", c.sigma_a},
                   {"ffn_expansion", c.ffn_expansion}};
    j["match"] = {{"num_superpoint_corr", c.match.num_superpoint_corr},
                  {"sinkhorn_iters", c.match.sinkhorn_iters},
                  {"mutual_top_k", c.match.mutual_top_k},
                  {"min_confidence", c.match.min_confidence},
                  {"nonrigid_distance_gate", c.match.nonrigid_distance_gate},
                  {"nonrigid_fallback_top", c.match.nonrigid_fallback_top},
                  {"nonrigid_mutual_top_k", c.match.nonrigid_mutual_top_k}};
    j["loss"] = {{"tau_r", c.loss.tau_r},
                 {"delta_e", c.loss.delta_e},
                 {"delta_f", c.loss.delta_f},
                 {"gamma", c.loss.gamma},
                 {"lambda", c.loss.lambda}};
    j["metrics"] = {{"inlier_dist", c.metrics.inlier_dist},
                    {"fmr_ir_min", c.metrics.fmr_ir_min},
                    {"rmse_max", c.metrics.rmse_max},
                    {"flow_dist", c.metrics.flow_dist},
                    {"nfmr_k", c.metrics.nfmr_k},
                    {"ransac_iters", c.metrics.ransac_iters},
                    {"ransac_seed", c.metrics.ransac_seed},
                    {"rmse2_literal_prefactor", c.metrics.rmse2_literal_prefactor}};
    return j;
}

std::string config_to_json(const PipelineConfig& config) {
    return config_json(config).dump(2);
}

std::string PipelineConfig::hash() const {
    // Architecture fields only: runtime knobs (seeds, metric thresholds)
    // do not invalidate weights.
    json j;
    j["k_neighbors"] = k_neighbors;
    j["tul_k"] = tul_k;
    j["layer_norm_eps"] = layer_norm_eps;
    json enc = json::array();
    for (const auto& b : encoder)
        enc.push_back({{"ratio", b.downsample_ratio},
                       {"channels", b.out_channels},
                       {"num_pal", b.num_pal}});
    j["encoder"] = enc;
    j["global"] = {{"blocks", global_blocks},
                   {"channels", global_channels},
                   {"sigma_d", sigma_d},
                   {"sigma_a", sigma_a},
                   {"ffn_expansion", ffn_expansion}};
    const std::string text = j.dump();
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError("config: invalid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    PipelineConfig c = default_config();
    reject_unknown_keys(j, {"seed", "mode", "k_neighbors", "tul_k", "layer_norm_eps", "encoder",
                            "global", "match", "loss", "metrics"},
                        "top level");
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("mode")) {
        const std::string m = j["mode"].get<std::string>();
        if (m == "rigid")
            c.mode = MatchMode::kRigid;
        else if (m == "nonrigid")
            c.mode = MatchMode::kNonrigid;
        else
            throw ConfigError("config: mode must be 'rigid' or 'nonrigid'");
    }
    if (j.contains("k_neighbors")) c.k_neighbors = j["k_neighbors"].get<int64_t>();
    if (j.contains("tul_k")) c.tul_k = j["tul_k"].get<int64_t>();
    if (j.contains("layer_norm_eps")) c.layer_norm_eps = j["layer_norm_eps"].get<double>();
    if (j.contains("encoder")) {
        if (!j["encoder"].is_array() || j["encoder"].empty())
            throw ConfigError("config: encoder must be a non-empty array");
        c.encoder.clear();
        for (const auto& e : j["encoder"]) {
            reject_unknown_keys(e, {"ratio", "channels", "num_pal"}, "encoder block");
            EncoderBlockPlan b;
            if (e.contains("ratio")) b.downsample_ratio = e["ratio"].get<int64_t>();
            if (e.contains("channels")) b.out_channels = e["channels"].get<int64_t>();
            if (e.contains("num_pal")) b.num_pal = e["num_pal"].get<int64_t>();
            c.encoder.push_back(b);
        }
        c.global_channels = c.encoder.back().out_channels;
    }
    if (j.contains("global")) {
        const auto& g = j["global"];
        reject_unknown_keys(g, {"blocks", "channels", "sigma_d", "sigma_a", "ffn_expansion"},
                            "global");
        if (g.contains("blocks")) c.global_blocks = g["blocks"].get<int64_t>();
        if (g.contains("channels")) c.global_channels = g["channels"].get<int64_t>();
        if (g.contains("sigma_d")) c.sigma_d = g["sigma_d"].get<double>();
        if (g.contains("sigma_a")) c.sigma_a = g["sigma_a"].get<double>();
        if (g.contains("ffn_expansion")) c.ffn_expansion = g["ffn_expansion"].get<int64_t>();
    }
    if (j.contains("match")) {
        const auto& m = j["match"];
        reject_unknown_keys(m,
                            {"num_superpoint_corr", "sinkhorn_iters", "mutual_top_k",
                             "min_confidence", "nonrigid_distance_gate", "nonrigid_fallback_top",
                             "nonrigid_mutual_top_k"},
                            "match");
        if (m.contains("num_superpoint_corr"))
            c.match.num_superpoint_corr = m["num_superpoint_corr"].get<int64_t>();
        if (m.contains("sinkhorn_iters")) c.match.sinkhorn_iters = m["sinkhorn_iters"].get<int64_t>();
        if (m.contains("mutual_top_k")) c.match.mutual_top_k = m["mutual_top_k"].get<int64_t>();
        if (m.contains("min_confidence")) c.match.min_confidence = m["min_confidence"].get<double>();
        if (m.contains("nonrigid_distance_gate"))
            c.match.nonrigid_distance_gate = m["nonrigid_distance_gate"].get<double>();
        if (m.contains("nonrigid_fallback_top"))
            c.match.nonrigid_fallback_top = m["nonrigid_fallback_top"].get<int64_t>();
        if (m.contains("nonrigid_mutual_top_k"))
            c.match.nonrigid_mutual_top_k = m["nonrigid_mutual_top_k"].get<int64_t>();
    }
    if (j.contains("loss")) {
        const auto& l = j["loss"];
        reject_unknown_keys(l, {"tau_r", "delta_e", "delta_f", "gamma", "lambda"}, "loss");
        if (l.contains("tau_r")) c.loss.tau_r = l["tau_r"].get<double>();
        if (l.contains("delta_e")) c.loss.delta_e = l["delta_e"].get<double>();
        if (l.contains("delta_f")) c.loss.delta_f = l["delta_f"].get<double>();
        if (l.contains("gamma")) c.loss.gamma = l["gamma"].get<double>();
        if (l.contains("lambda")) c.loss.lambda = l["lambda"].get<double>();
    }
    if (j.contains("metrics")) {
        const auto& m = j["metrics"];
        reject_unknown_keys(m,
                            {"inlier_dist", "fmr_ir_min", "rmse_max", "flow_dist", "nfmr_k",
                             "ransac_iters", "ransac_seed", "rmse2_literal_prefactor"},
                            "metrics");
        if (m.contains("inlier_dist")) c.metrics.inlier_dist = m["inlier_dist"].get<double>();
        if (m.contains("fmr_ir_min")) c.metrics.fmr_ir_min = m["fmr_ir_min"].get<double>();
        if (m.contains("rmse_max")) c.metrics.rmse_max = m["rmse_max"].get<double>();
        if (m.contains("flow_dist")) c.metrics.flow_dist = m["flow_dist"].get<double>();
        if (m.contains("nfmr_k")) c.metrics.nfmr_k = m["nfmr_k"].get<int64_t>();
        if (m.contains("ransac_iters")) c.metrics.ransac_iters = m["ransac_iters"].get<int64_t>();
        if (m.contains("ransac_seed")) c.metrics.ransac_seed = m["ransac_seed"].get<uint64_t>();
        if (m.contains("rmse2_literal_prefactor"))
            c.metrics.rmse2_literal_prefactor = m["rmse2_literal_prefactor"].get<bool>();
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

void add_pam_specs(std::vector<TensorSpec>& specs, const std::string& prefix, int64_t c_in,
                   int64_t c, int64_t c_out) {
    specs.push_back({prefix + ".w_coord", {4, c}});
    specs.push_back({prefix + ".w_ctx", {c_in, c}});
    for (const char* name : {"w_q", "w_k", "w_v", "w_g", "w_e"})
        specs.push_back({prefix + "." + name, {c, c}});
    specs.push_back({prefix + ".w_msg", {c, c}});
    specs.push_back({prefix + ".w_out", {c, c_out}});
    specs.push_back({prefix + ".ln_gain", {c}});
    specs.push_back({prefix + ".ln_bias", {c}});
}

void add_ffn_specs(std::vector<TensorSpec>& specs, const std::string& prefix, int64_t c,
                   int64_t expansion) {
    specs.push_back({prefix + ".w1", {c, c * expansion}});
    specs.push_back({prefix + ".w2", {c * expansion, c}});
    specs.push_back({prefix + ".ln_gain", {c}});
    specs.push_back({prefix + ".ln_bias", {c}});
}

}  // namespace

std::vector<TensorSpec> weight_inventory(const PipelineConfig& config) {
    std::vector<TensorSpec> specs;
    const size_t nblocks = config.encoder.size();

    // Encoder: per block one AAL plus num_pal PALs.
    int64_t prev_c = 1;  // initial features are all-ones, width 1
    for (size_t b = 0; b < nblocks; ++b) {
        const int64_t c = config.encoder[b].out_channels;
        const std::string base = "enc.block" + std::to_string(b + 1);
        add_pam_specs(specs, base + ".aal.pam", prev_c, c, c);
        for (int64_t l = 0; l < config.encoder[b].num_pal; ++l) {
            const std::string pal = base + ".pal" + std::to_string(l + 1);
            add_pam_specs(specs, pal + ".pam", c, c, c);
            specs.push_back({pal + ".ln_gain", {c}});
            specs.push_back({pal + ".ln_bias", {c}});
        }
        prev_c = c;
    }

    // Decoder: deepest block first, mirroring the encoder widths.
    int64_t anchor_c = config.encoder.back().out_channels;
    for (size_t b = nblocks; b-- > 0;) {
        const int64_t skip_c = config.encoder[b].out_channels;
        const int64_t out_c = skip_c;
        const std::string base = "dec.block" + std::to_string(b + 1);
        specs.push_back({base + ".tul.zeta1", {skip_c, out_c}});
        specs.push_back({base + ".tul.zeta2", {anchor_c, out_c}});
        for (int64_t l = 0; l < config.encoder[b].num_pal; ++l) {
            const std::string pal = base + ".pal" + std::to_string(l + 1);
            add_pam_specs(specs, pal + ".pam", out_c, out_c, out_c);
            specs.push_back({pal + ".ln_gain", {out_c}});
            specs.push_back({pal + ".ln_bias", {out_c}});
        }
        anchor_c = out_c;
    }

    // Global transformer blocks: shared GSM per frame, shared PCM per direction.
    const int64_t cg = config.global_channels;
    for (int64_t b = 0; b < config.global_blocks; ++b) {
        const std::string gsm = "global.block" + std::to_string(b + 1) + ".gsm";
        for (const char* name : {"w_d", "w_a", "w_e", "w_g", "w_q", "w_k", "w_v"})
            specs.push_back({gsm + "." + name, {cg, cg}});
        specs.push_back({gsm + ".ctx.ln_gain", {cg}});
        specs.push_back({gsm + ".ctx.ln_bias", {cg}});
        add_ffn_specs(specs, gsm + ".ctx.ffn", cg, config.ffn_expansion);
        specs.push_back({gsm + ".geo.ln_gain", {cg}});
        specs.push_back({gsm + ".geo.ln_bias", {cg}});
        add_ffn_specs(specs, gsm + ".geo.ffn", cg, config.ffn_expansion);

        const std::string pcm = "global.block" + std::to_string(b + 1) + ".pcm";
        for (const char* name : {"w_q", "w_k", "w_v"})
            specs.push_back({pcm + "." + name, {cg, cg}});
        specs.push_back({pcm + ".ln_gain", {cg}});
        specs.push_back({pcm + ".ln_bias", {cg}});
        add_ffn_specs(specs, pcm + ".ffn", cg, config.ffn_expansion);
    }

    specs.push_back({"sinkhorn.alpha", {1}});
    return specs;
}

ModelWeights init_random_weights(const PipelineConfig& config, uint64_t seed) {
    config.validate();
    std::vector<TensorSpec> specs = weight_inventory(config);
    std::sort(specs.begin(), specs.end(),
              [](const TensorSpec& a, const TensorSpec& b) { return a.name < b.name; });
    std::mt19937_64 rng(seed);
    std::map<std::string, Tensor> tensors;
    for (const auto& spec : specs) {
        Tensor t(spec.shape);
        const bool is_ln_gain = spec.name.ends_with("ln_gain");
        const bool is_ln_bias = spec.name.ends_with("ln_bias");
        if (spec.name == "sinkhorn.alpha") {
            t[0] = 1.0;
        } else if (is_ln_gain) {
            for (int64_t i = 0; i < t.size(); ++i) t[i] = 1.0;
        } else if (is_ln_bias) {
            // zeros
        } else {
            const double bound = 1.0 / std::sqrt(static_cast<double>(spec.shape[0]));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
        }
        tensors.emplace(spec.name, std::move(t));
    }
    return ModelWeights(std::move(tensors), config.hash());
}

}  // namespace roitr
