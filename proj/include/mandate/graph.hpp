#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mandate/csr.hpp"
#include "mandate/rng.hpp"
#include "mandate/tensor.hpp"

namespace mandate {

constexpr int kUnlabeled = -1;
constexpr int kBenign = 0;
constexpr int kFraud = 1;

// One node set, one feature matrix, one label vector, R edge sets.
// Immutable once constructed; safe to share across readers.
struct MultiRelGraph {
    std::size_t num_nodes = 0;
    std::size_t feature_dim = 0;
    std::vector<std::string> relation_names;
    Tensor features;                     // n x d
    std::vector<int> labels;             // -1 unlabeled, 0 benign, 1 fraud
    std::vector<CsrMatrix> adjacencies;  // one per relation

    std::size_t num_relations() const { return adjacencies.size(); }

    std::vector<NodeId> labeled_nodes() const {
        std::vector<NodeId> out;
        for (std::size_t i = 0; i < num_nodes; ++i)
            if (labels[i] != kUnlabeled) out.push_back(static_cast<NodeId>(i));
        return out;
    }
};

// Fingerprint over the on-disk representation (float32 features), so an
// in-memory graph and its save/load round trip hash identically.
inline std::uint64_t content_hash(const MultiRelGraph& g) {
    HashStream h;
    h.put_str("MRG1");
    h.put<std::uint64_t>(g.num_nodes);
    h.put<std::uint64_t>(g.num_relations());
    h.put<std::uint64_t>(g.feature_dim);
    for (int l : g.labels) h.put<std::int8_t>(static_cast<std::int8_t>(l));
    for (double v : g.features.data) h.put<float>(static_cast<float>(v));
    for (const CsrMatrix& a : g.adjacencies) {
        for (const Edge& e : csr_upper_edges(a)) {
            h.put<std::uint32_t>(e.first);
            h.put<std::uint32_t>(e.second);
        }
        h.put_str("|rel");
    }
    return h.digest();
}

namespace detail {

inline std::vector<Edge> read_edge_file(const std::filesystem::path& path,
                                        std::size_t num_nodes) {
    std::ifstream in(path);
    if (!in) throw DataError("missing edge file: " + path.string());
    std::vector<Edge> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        long long u = -1, v = -1;
        if (!(ss >> u >> v) || u < 0 || v < 0)
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": expected 'u v' pair");
        if (static_cast<std::size_t>(u) >= num_nodes ||
            static_cast<std::size_t>(v) >= num_nodes)
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": node index out of range (num_nodes=" +
                            std::to_string(num_nodes) + ")");
        edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
    return edges;
}

}  // namespace detail

// Dataset directory layout:
//   meta.json     {"num_nodes", "num_relations", "feature_dim", "relations"}
//   rel_<i>.edges one "u v" pair per line, 0-based
//   features.bin  n x d float32 little-endian, row-major
//   labels.txt    n lines of -1 | 0 | 1
inline MultiRelGraph load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);

    std::ifstream meta_in(root / "meta.json");
    if (!meta_in) throw DataError("missing meta.json in " + dir);
    nlohmann::json meta;
    try {
        meta_in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("meta.json parse failure: " + std::string(e.what()));
    }

    MultiRelGraph g;
    try {
        g.num_nodes = meta.at("num_nodes").get<std::size_t>();
        g.feature_dim = meta.at("feature_dim").get<std::size_t>();
        const std::size_t num_rel = meta.at("num_relations").get<std::size_t>();
        g.relation_names = meta.value("relations", std::vector<std::string>{});
        if (g.relation_names.empty())
            for (std::size_t r = 0; r < num_rel; ++r)
                g.relation_names.push_back("rel_" + std::to_string(r));
        if (g.relation_names.size() != num_rel)
            throw DataError("meta.json: relations list does not match num_relations");
    } catch (const nlohmann::json::exception& e) {
        throw DataError("meta.json field error: " + std::string(e.what()));
    }

    // features
    std::ifstream fin(root / "features.bin", std::ios::binary);
    if (!fin) throw DataError("missing features.bin in " + dir);
    fin.seekg(0, std::ios::end);
    const std::size_t bytes = static_cast<std::size_t>(fin.tellg());
    fin.seekg(0);
    const std::size_t expect = g.num_nodes * g.feature_dim * sizeof(float);
    if (bytes != expect)
        throw DataError("features.bin holds " + std::to_string(bytes / sizeof(float)) +
                        " values, expected " +
                        std::to_string(g.num_nodes * g.feature_dim) + " (" +
                        std::to_string(g.num_nodes) + "x" +
                        std::to_string(g.feature_dim) + ")");
    std::vector<float> raw(g.num_nodes * g.feature_dim);
    fin.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    if (!fin) throw DataError("short read on features.bin");
    g.features = Tensor({g.num_nodes, g.feature_dim});
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i]))
            throw DataError("non-finite feature value at flat index " + std::to_string(i));
        g.features.data[i] = static_cast<double>(raw[i]);
    }

    // labels
    std::ifstream lin(root / "labels.txt");
    if (!lin) throw DataError("missing labels.txt in " + dir);
    g.labels.reserve(g.num_nodes);
    std::string tok;
    while (lin >> tok) {
        if (tok != "-1" && tok != "0" && tok != "1")
            throw DataError("labels.txt: bad label token '" + tok + "'");
        g.labels.push_back(std::stoi(tok));
    }
    if (g.labels.size() != g.num_nodes)
        throw DataError("labels.txt has " + std::to_string(g.labels.size()) +
                        " labels, expected " + std::to_string(g.num_nodes));

    // relations
    for (std::size_t r = 0; r < g.relation_names.size(); ++r) {
        const fs::path p = root / ("rel_" + std::to_string(r) + ".edges");
        g.adjacencies.push_back(
            csr_from_edges(g.num_nodes, detail::read_edge_file(p, g.num_nodes)));
    }
    return g;
}

inline void save_dataset(const MultiRelGraph& g, const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root);

    nlohmann::json meta;
    meta["num_nodes"] = g.num_nodes;
    meta["num_relations"] = g.num_relations();
    meta["feature_dim"] = g.feature_dim;
    meta["relations"] = g.relation_names;
    std::ofstream(root / "meta.json") << meta.dump(2) << "\n";

    for (std::size_t r = 0; r < g.num_relations(); ++r) {
        std::ofstream out(root / ("rel_" + std::to_string(r) + ".edges"));
        for (const Edge& e : csr_upper_edges(g.adjacencies[r]))
            out << e.first << " " << e.second << "\n";
    }

    std::ofstream fout(root / "features.bin", std::ios::binary);
    for (double v : g.features.data) {
        const float f = static_cast<float>(v);
        fout.write(reinterpret_cast<const char*>(&f), sizeof(float));
    }

    std::ofstream lout(root / "labels.txt");
    for (int l : g.labels) lout << l << "\n";
}

// Fraction of fully-labeled edges whose endpoints agree, each undirected
// edge counted once.
inline double homophily_ratio(const MultiRelGraph& g, std::size_t relation) {
    if (relation >= g.num_relations())
        throw UsageError("homophily_ratio: relation index " + std::to_string(relation) +
                         " out of range");
    std::size_t labeled = 0, agree = 0;
    for (const Edge& e : csr_upper_edges(g.adjacencies[relation])) {
        const int lu = g.labels[e.first], lv = g.labels[e.second];
        if (lu == kUnlabeled || lv == kUnlabeled) continue;
        ++labeled;
        if (lu == lv) ++agree;
    }
    if (labeled == 0)
        throw DataError("homophily_ratio undefined: no edge with both endpoints labeled");
    return static_cast<double>(agree) / static_cast<double>(labeled);
}

struct SplitRatios {
    double train = 0.4;
    double val = 0.2;
    double test = 0.4;
};

struct SplitAssignment {
    std::vector<NodeId> train, val, test;

    std::span<const NodeId> by_name(std::string_view name) const {
        if (name == "train") return train;
        if (name == "val") return val;
        if (name == "test") return test;
        throw UsageError("unknown split name '" + std::string(name) +
                         "' (expected train|val|test)");
    }
};

// Stratified over labels, deterministic in the seed. Unlabeled nodes are
// left out entirely.
inline SplitAssignment split_nodes(const MultiRelGraph& g, SplitRatios ratios,
                                   std::uint64_t seed) {
    if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw UsageError("split ratios must sum to 1");
    std::vector<std::vector<NodeId>> per_class(2);
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
        if (g.labels[i] == kBenign) per_class[0].push_back(static_cast<NodeId>(i));
        if (g.labels[i] == kFraud) per_class[1].push_back(static_cast<NodeId>(i));
    }
    if (per_class[0].empty() && per_class[1].empty())
        throw DataError("split_nodes: no labeled nodes");
    SplitAssignment out;
    Rng rng = derive_rng(seed, "split");
    for (std::size_t c = 0; c < 2; ++c) {
        auto& nodes = per_class[c];
        if (nodes.empty()) continue;
        if (nodes.size() < 3)
            throw DataError("split_nodes: class " + std::to_string(c) + " has only " +
                            std::to_string(nodes.size()) + " labeled nodes, fewer than splits");
        rng.shuffle(nodes);
        const std::size_t n = nodes.size();
        const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * n));
        const auto n_trval =
            static_cast<std::size_t>(std::floor((ratios.train + ratios.val) * n));
        for (std::size_t i = 0; i < n; ++i) {
            if (i < n_train)
                out.train.push_back(nodes[i]);
            else if (i < n_trval)
                out.val.push_back(nodes[i]);
            else
                out.test.push_back(nodes[i]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

inline void save_split(const SplitAssignment& s, const std::string& path) {
    nlohmann::json j;
    j["train"] = s.train;
    j["val"] = s.val;
    j["test"] = s.test;
    std::ofstream(path) << j.dump(2) << "\n";
}

inline SplitAssignment load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing split file: " + path);
    nlohmann::json j;
    in >> j;
    SplitAssignment s;
    s.train = j.at("train").get<std::vector<NodeId>>();
    s.val = j.at("val").get<std::vector<NodeId>>();
    s.test = j.at("test").get<std::vector<NodeId>>();
    return s;
}

}  // namespace mandate
