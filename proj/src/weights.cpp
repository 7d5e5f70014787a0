#include "roitr/weights.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace roitr {

using nlohmann::json;

static constexpr char kMagic[8] = {'R', 'O', 'I', 'T', 'R', 'W', '0', '1'};
static constexpr int kFormatVersion = 1;

const Tensor& ModelWeights::get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ConfigError("missing weight tensor: " + name);
    return it->second;
}

double ModelWeights::scalar(const std::string& name) const {
    const Tensor& t = get(name);
    if (t.size() != 1) throw ConfigError("weight tensor " + name + " is not a scalar");
    return t[0];
}

void ModelWeights::validate_inventory(const std::vector<TensorSpec>& expected) const {
    for (const auto& spec : expected) {
        auto it = tensors_.find(spec.name);
        if (it == tensors_.end()) throw ConfigError("missing weight tensor: " + spec.name);
        if (it->second.shape() != spec.shape)
            throw ConfigError("weight tensor " + spec.name + " has shape " +
                              shape_str(it->second.shape()) + ", expected " +
                              shape_str(spec.shape));
    }
    if (tensors_.size() != expected.size()) {
        std::map<std::string, bool> known;
        for (const auto& spec : expected) known[spec.name] = true;
        for (const auto& [name, t] : tensors_)
            if (!known.count(name)) throw ConfigError("unexpected weight tensor: " + name);
    }
}

void save_weights(const ModelWeights& weights, const std::string& path) {
    json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["config_hash"] = weights.config_hash();
    manifest["tensors"] = json::array();
    uint64_t offset = 0;
    for (const auto& [name, t] : weights.tensors()) {
        json entry;
        entry["name"] = name;
        entry["shape"] = t.shape();
        entry["dtype"] = "f32";
        entry["offset"] = offset;
        manifest["tensors"].push_back(entry);
        offset += static_cast<uint64_t>(t.size()) * sizeof(float);
    }
    const std::string mtext = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open weight file for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    const uint64_t mlen = mtext.size();
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    std::vector<float> buf;
    for (const auto& [name, t] : weights.tensors()) {
        buf.resize(static_cast<size_t>(t.size()));
        for (int64_t i = 0; i < t.size(); ++i) buf[static_cast<size_t>(i)] = static_cast<float>(t[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw ParseError("failed writing weight file: " + path);
}

ModelWeights load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open weight file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ConfigError("bad magic in weight file: " + path);
    uint64_t mlen = 0;
    in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    if (!in || mlen == 0 || mlen > (1ull << 30))
        throw ConfigError("bad manifest length in weight file: " + path);
    std::string mtext(mlen, '\0');
    in.read(mtext.data(), static_cast<std::streamsize>(mlen));
    if (!in) throw ConfigError("truncated manifest in weight file: " + path);

    json manifest;
    try {
        manifest = json::parse(mtext);
    } catch (const json::exception& e) {
        throw ConfigError("invalid manifest JSON in weight file: " + std::string(e.what()));
    }
    if (!manifest.contains("format_version") ||
        manifest["format_version"].get<int>() != kFormatVersion)
        throw ConfigError("unsupported weight format version in " + path);

    const std::string config_hash = manifest.value("config_hash", "");
    std::vector<char> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::map<std::string, Tensor> tensors;
    for (const auto& entry : manifest["tensors"]) {
        const std::string name = entry["name"].get<std::string>();
        const std::vector<int64_t> shape = entry["shape"].get<std::vector<int64_t>>();
        if (entry["dtype"].get<std::string>() != "f32")
            throw ConfigError("unsupported dtype for tensor " + name);
        const uint64_t offset = entry["offset"].get<uint64_t>();
        const int64_t cnt = Tensor::count(shape);
        if (offset + static_cast<uint64_t>(cnt) * sizeof(float) > blob.size())
            throw ConfigError("tensor " + name + " extends past end of weight blob");
        Tensor t(shape);
        const char* src = blob.data() + offset;
        for (int64_t i = 0; i < cnt; ++i) {
            float v;
            std::memcpy(&v, src + static_cast<size_t>(i) * sizeof(float), sizeof(float));
            t[i] = static_cast<double>(v);
        }
        t.require_finite("weight tensor " + name);
        tensors.emplace(name, std::move(t));
    }
    return ModelWeights(std::move(tensors), config_hash);
}

}  // namespace roitr
