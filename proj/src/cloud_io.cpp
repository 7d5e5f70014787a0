#include "roitr/cloud_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace roitr {

using nlohmann::json;

namespace {

bool ends_with_ci(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    for (size_t i = 0; i < suffix.size(); ++i) {
        const char a = static_cast<char>(std::tolower(s[s.size() - suffix.size() + i]));
        if (a != suffix[i]) return false;
    }
    return true;
}

LoadedCloud rows_to_cloud(const std::vector<std::array<double, 6>>& rows, bool has_normals,
                          const std::string& path) {
    const int64_t n = static_cast<int64_t>(rows.size());
    if (n == 0) throw ParseError("cloud file has no points: " + path);
    LoadedCloud out;
    out.points = Tensor({n, 3});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t d = 0; d < 3; ++d) out.points(i, d) = rows[static_cast<size_t>(i)][static_cast<size_t>(d)];
    out.points.require_finite("cloud points from " + path);
    if (has_normals) {
        Tensor normals({n, 3});
        for (int64_t i = 0; i < n; ++i)
            for (int64_t d = 0; d < 3; ++d)
                normals(i, d) = rows[static_cast<size_t>(i)][static_cast<size_t>(3 + d)];
        normals.require_finite("cloud normals from " + path);
        out.normals = std::move(normals);
    }
    return out;
}

}  // namespace

LoadedCloud load_cloud_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open cloud file: " + path);
    std::vector<std::array<double, 6>> rows;
    int expected_cols = 0;
    std::string line;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::array<double, 6> row{};
        int cols = 0;
        double v;
        while (cols < 6 && ss >> v) row[static_cast<size_t>(cols++)] = v;
        if (cols == 0) continue;  // blank or comment-only line
        std::string extra;
        if (ss >> extra)
            throw ParseError(path + ":" + std::to_string(lineno) + ": too many columns");
        if (cols != 3 && cols != 6)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected 3 or 6 values, got " + std::to_string(cols));
        if (expected_cols == 0) expected_cols = cols;
        if (cols != expected_cols)
            throw ParseError(path + ":" + std::to_string(lineno) + ": inconsistent column count");
        rows.push_back(row);
    }
    return rows_to_cloud(rows, expected_cols == 6, path);
}

LoadedCloud load_cloud_ply(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open PLY file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply")
        throw ParseError("not a PLY file: " + path);

    int64_t vertex_count = -1;
    std::vector<std::string> vertex_props;
    bool ascii = false;
    bool in_vertex_element = false;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            ascii = (fmt == "ascii");
        } else if (tok == "element") {
            std::string name;
            int64_t count;
            ss >> name >> count;
            in_vertex_element = (name == "vertex");
            if (in_vertex_element) vertex_count = count;
        } else if (tok == "property" && in_vertex_element) {
            std::string type, name;
            ss >> type >> name;
            if (type == "list") throw ParseError("list property in vertex element: " + path);
            vertex_props.push_back(name);
        } else if (tok == "end_header") {
            break;
        } else if (tok == "comment" || tok == "obj_info") {
            continue;
        }
    }
    if (!ascii) throw ParseError("only ASCII PLY is supported: " + path);
    if (vertex_count < 0) throw ParseError("PLY without vertex element: " + path);

    int col_of[6];
    const char* wanted[6] = {"x", "y", "z", "nx", "ny", "nz"};
    for (int i = 0; i < 6; ++i) {
        col_of[i] = -1;
        for (size_t p = 0; p < vertex_props.size(); ++p)
            if (vertex_props[p] == wanted[i]) col_of[i] = static_cast<int>(p);
    }
    if (col_of[0] < 0 || col_of[1] < 0 || col_of[2] < 0)
        throw ParseError("PLY vertex element lacks x/y/z properties: " + path);
    const bool has_normals = col_of[3] >= 0 && col_of[4] >= 0 && col_of[5] >= 0;

    std::vector<std::array<double, 6>> rows;
    rows.reserve(static_cast<size_t>(vertex_count));
    std::vector<double> values(vertex_props.size());
    for (int64_t i = 0; i < vertex_count; ++i) {
        if (!std::getline(in, line))
            throw ParseError("PLY truncated at vertex " + std::to_string(i) + ": " + path);
        std::istringstream ss(line);
        for (size_t p = 0; p < vertex_props.size(); ++p)
            if (!(ss >> values[p]))
                throw ParseError("PLY vertex " + std::to_string(i) + " malformed: " + path);
        std::array<double, 6> row{};
        for (int d = 0; d < 3; ++d) row[static_cast<size_t>(d)] = values[static_cast<size_t>(col_of[d])];
        if (has_normals)
            for (int d = 3; d < 6; ++d)
                row[static_cast<size_t>(d)] = values[static_cast<size_t>(col_of[d])];
        rows.push_back(row);
    }
    return rows_to_cloud(rows, has_normals, path);
}

LoadedCloud load_cloud(const std::string& path) {
    if (ends_with_ci(path, ".ply")) return load_cloud_ply(path);
    return load_cloud_text(path);
}

void save_cloud(const std::string& path, const Tensor& points, const Tensor* normals) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open cloud file for writing: " + path);
    out << std::setprecision(17);
    const int64_t n = points.dim(0);
    for (int64_t i = 0; i < n; ++i) {
        out << points(i, 0) << " " << points(i, 1) << " " << points(i, 2);
        if (normals) out << " " << (*normals)(i, 0) << " " << (*normals)(i, 1) << " "
                         << (*normals)(i, 2);
        out << "\n";
    }
    if (!out) throw ParseError("failed writing cloud file: " + path);
}

void save_correspondences(const std::string& path, const CorrespondenceSet& corr,
                          const CorrespondenceHeader& header) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open correspondence file for writing: " + path);
    json j;
    j["cloud_a"] = header.cloud_a;
    j["cloud_b"] = header.cloud_b;
    j["config_hash"] = header.config_hash;
    j["resolution"] =
        corr.resolution == CorrespondenceResolution::kPoint ? "point" : "superpoint";
    out << "# " << j.dump() << "\n";
    out << std::setprecision(17);
    for (const auto& pr : corr.pairs)
        out << pr.index_p << " " << pr.index_q << " " << pr.confidence << "\n";
    if (!out) throw ParseError("failed writing correspondence file: " + path);
}

std::pair<CorrespondenceSet, CorrespondenceHeader> load_correspondences(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open correspondence file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.size() < 2 || line[0] != '#')
        throw ParseError("correspondence file lacks the JSON header line: " + path);
    CorrespondenceHeader header;
    try {
        const json j = json::parse(line.substr(1));
        header.cloud_a = j.value("cloud_a", "");
        header.cloud_b = j.value("cloud_b", "");
        header.config_hash = j.value("config_hash", "");
        header.resolution = j.value("resolution", "point");
    } catch (const json::exception& e) {
        throw ParseError("bad correspondence header: " + std::string(e.what()));
    }
    CorrespondenceSet corr;
    corr.resolution = header.resolution == "superpoint" ? CorrespondenceResolution::kSuperpoint
                                                        : CorrespondenceResolution::kPoint;
    int64_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        Correspondence pr;
        if (!(ss >> pr.index_p >> pr.index_q >> pr.confidence))
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed pair line");
        corr.pairs.push_back(pr);
    }
    return {std::move(corr), std::move(header)};
}

void save_ground_truth(const std::string& path, const GroundTruth& gt) {
    gt.validate();
    json j;
    if (gt.transform) {
        json rot = json::array();
        for (int64_t i = 0; i < 3; ++i)
            for (int64_t k = 0; k < 3; ++k) rot.push_back(gt.transform->rotation(i, k));
        j["rotation"] = rot;
        j["translation"] = {gt.transform->translation[0], gt.transform->translation[1],
                            gt.transform->translation[2]};
    }
    if (gt.flow) {
        json flow = json::array();
        for (int64_t i = 0; i < gt.flow->dim(0); ++i)
            flow.push_back({(*gt.flow)(i, 0), (*gt.flow)(i, 1), (*gt.flow)(i, 2)});
        j["flow"] = flow;
    }
    json pairs = json::array();
    for (const auto& [u, v] : gt.pairs) pairs.push_back({u, v});
    j["pairs"] = pairs;
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open ground-truth file for writing: " + path);
    out << j.dump() << "\n";
    if (!out) throw ParseError("failed writing ground-truth file: " + path);
}

GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open ground-truth file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("bad ground-truth JSON: " + std::string(e.what()));
    }
    GroundTruth gt;
    if (j.contains("rotation")) {
        RigidTransform t = RigidTransform::identity();
        const auto& rot = j["rotation"];
        if (rot.size() != 9) throw ParseError("ground truth rotation must have 9 entries");
        for (int64_t i = 0; i < 3; ++i)
            for (int64_t k = 0; k < 3; ++k)
                t.rotation(i, k) = rot[static_cast<size_t>(i * 3 + k)].get<double>();
        const auto& tr = j["translation"];
        for (int64_t i = 0; i < 3; ++i) t.translation[i] = tr[static_cast<size_t>(i)].get<double>();
        gt.transform = std::move(t);
    }
    if (j.contains("flow")) {
        const auto& flow = j["flow"];
        Tensor f({static_cast<int64_t>(flow.size()), 3});
        for (size_t i = 0; i < flow.size(); ++i)
            for (size_t d = 0; d < 3; ++d)
                f(static_cast<int64_t>(i), static_cast<int64_t>(d)) = flow[i][d].get<double>();
        gt.flow = std::move(f);
    }
    for (const auto& pr : j["pairs"])
        gt.pairs.emplace_back(pr[0].get<int64_t>(), pr[1].get<int64_t>());
    gt.validate();
    return gt;
}

}  // namespace roitr
