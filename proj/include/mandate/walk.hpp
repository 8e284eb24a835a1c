#pragma once

#include <algorithm>
#include <fstream>
#include <limits>
#include <queue>

#include "mandate/csr.hpp"
#include "mandate/graph.hpp"
#include "mandate/tensor.hpp"

namespace mandate {

// Row-stochastic random-walk operator W = D^{-1} A. Rows that would have
// zero degree get a self loop before normalization, so W is defined on any
// input. Row i of W is {(j, inv_degree[i]) : j in pattern row i}.
struct WalkOperator {
    CsrMatrix pattern;                        // A plus repaired self loops
    std::vector<double> inv_degree;           // value of every entry in row i
    std::vector<NodeId> self_loop_repaired;   // sorted

    std::size_t num_nodes() const { return pattern.rows; }
};

inline WalkOperator walk_operator(const CsrMatrix& adjacency) {
    if (!adjacency.is_square())
        throw UsageError("walk_operator: adjacency must be square, got " +
                         std::to_string(adjacency.rows) + "x" +
                         std::to_string(adjacency.cols));
    const std::size_t n = adjacency.rows;
    WalkOperator w;
    w.inv_degree.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        if (adjacency.degree(i) == 0)
            w.self_loop_repaired.push_back(static_cast<NodeId>(i));

    if (w.self_loop_repaired.empty()) {
        w.pattern = adjacency;
    } else {
        CsrMatrix m;
        m.rows = m.cols = n;
        m.row_ptr.assign(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i)
            m.row_ptr[i + 1] =
                m.row_ptr[i] + std::max<std::size_t>(adjacency.degree(i), 1);
        m.col.resize(m.row_ptr[n]);
        m.val.assign(m.row_ptr[n], 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto cols = adjacency.row_cols(i);
            std::size_t at = m.row_ptr[i];
            if (cols.empty())
                m.col[at] = static_cast<NodeId>(i);
            else
                for (NodeId c : cols) m.col[at++] = c;
        }
        w.pattern = std::move(m);
    }
    for (std::size_t i = 0; i < n; ++i)
        w.inv_degree[i] = 1.0 / static_cast<double>(w.pattern.degree(i));
    return w;
}

inline Tensor walk_dense(const WalkOperator& w) {
    Tensor d({w.num_nodes(), w.num_nodes()});
    for (std::size_t i = 0; i < w.num_nodes(); ++i)
        for (NodeId j : w.pattern.row_cols(i)) d.at(i, j) = w.inv_degree[i];
    return d;
}

namespace detail {

// One step of v <- v W. Contributions into each output entry are summed in
// ascending value order, which makes the result independent of how the
// nodes happen to be numbered: relabeling the graph permutes rows and
// columns bit-exactly.
inline void walk_pull_step(const WalkOperator& w, const std::vector<double>& v,
                           std::vector<double>& out, std::vector<double>& scratch) {
    const std::size_t n = w.num_nodes();
    out.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        scratch.clear();
        for (NodeId i : w.pattern.row_cols(j)) {
            const double t = v[i] * w.inv_degree[i];
            if (t != 0.0) scratch.push_back(t);
        }
        if (scratch.empty()) continue;
        std::sort(scratch.begin(), scratch.end());
        double s = 0.0;
        for (double t : scratch) s += t;
        out[j] = s;
    }
}

}  // namespace detail

// Multi-scale positional encoding rows: hops[k].at(s, a) = W^{k+1}(source_s,
// anchor_a). Computed with K successive sparse products per source; dense
// powers of W are never formed.
struct PeTable {
    std::size_t k_hops = 0;
    std::vector<NodeId> sources;
    std::vector<NodeId> anchors;
    std::vector<Tensor> hops;  // K tensors of shape |sources| x |anchors|

    PeTable truncated(std::size_t k) const {
        if (k == 0 || k > k_hops) throw UsageError("PeTable::truncated: bad hop count");
        PeTable t;
        t.k_hops = k;
        t.sources = sources;
        t.anchors = anchors;
        t.hops.assign(hops.begin(), hops.begin() + static_cast<std::ptrdiff_t>(k));
        return t;
    }
};

inline PeTable pe_rows(const WalkOperator& w, std::span<const NodeId> sources,
                       std::size_t k_hops, std::span<const NodeId> anchors) {
    if (k_hops == 0) throw UsageError("pe_rows: hop count must be at least 1");
    if (anchors.empty()) throw UsageError("pe_rows: anchor set must be nonempty");
    const std::size_t n = w.num_nodes();
    for (NodeId s : sources)
        if (s >= n) throw UsageError("pe_rows: source index out of range");
    for (NodeId a : anchors)
        if (a >= n) throw UsageError("pe_rows: anchor index out of range");

    PeTable pe;
    pe.k_hops = k_hops;
    pe.sources.assign(sources.begin(), sources.end());
    pe.anchors.assign(anchors.begin(), anchors.end());
    for (std::size_t k = 0; k < k_hops; ++k)
        pe.hops.emplace_back(
            std::vector<std::size_t>{sources.size(), anchors.size()});

    std::vector<double> v(n), next(n), scratch;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        std::fill(v.begin(), v.end(), 0.0);
        v[sources[s]] = 1.0;
        for (std::size_t k = 0; k < k_hops; ++k) {
            detail::walk_pull_step(w, v, next, scratch);
            v.swap(next);
            Tensor& hop = pe.hops[k];
            for (std::size_t a = 0; a < anchors.size(); ++a)
                hop.at(s, a) = v[anchors[a]];
        }
    }
    return pe;
}

// p'(u) = sum_k theta_k W^k(u, anchors): the learnable generalized
// propagation row of the multi-scale encoding.
inline Tensor combine_scales(const PeTable& pe, std::span<const double> theta) {
    if (theta.size() != pe.k_hops)
        throw UsageError("combine_scales: got " + std::to_string(theta.size()) +
                         " weights for " + std::to_string(pe.k_hops) + " hops");
    Tensor out({pe.sources.size(), pe.anchors.size()});
    for (std::size_t k = 0; k < pe.k_hops; ++k) {
        const double t = theta[k];
        if (t == 0.0) continue;
        const Tensor& hop = pe.hops[k];
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += t * hop.data[i];
    }
    return out;
}

// theta_k = alpha (1 - alpha)^k for k = 1..K; plugging these into
// combine_scales yields truncated personalized PageRank.
inline std::vector<double> frozen_ppr_theta(double alpha, std::size_t k_hops) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw UsageError("frozen_ppr_theta: alpha must lie in (0,1)");
    std::vector<double> theta(k_hops);
    double w = alpha;
    for (std::size_t k = 0; k < k_hops; ++k) {
        w *= (1.0 - alpha);
        theta[k] = w;
    }
    return theta;
}

constexpr int kUnreachable = -1;

// All-pairs BFS hop distances; verification oracle, deliberately dense and
// simple. Self loops added by degree repair do not exist here.
inline std::vector<int> spd_reference(const MultiRelGraph& g, std::size_t relation) {
    if (relation >= g.num_relations())
        throw UsageError("spd_reference: relation out of range");
    const std::size_t n = g.num_nodes;
    if (n > 1000) throw UsageError("spd_reference: oracle limited to 1000 nodes");
    const CsrMatrix& adj = g.adjacencies[relation];
    std::vector<int> dist(n * n, kUnreachable);
    std::vector<int> d(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::fill(d.begin(), d.end(), kUnreachable);
        d[s] = 0;
        std::queue<NodeId> q;
        q.push(static_cast<NodeId>(s));
        while (!q.empty()) {
            const NodeId u = q.front();
            q.pop();
            for (NodeId v : adj.row_cols(u))
                if (d[v] == kUnreachable) {
                    d[v] = d[u] + 1;
                    q.push(v);
                }
        }
        for (std::size_t j = 0; j < n; ++j) dist[s * n + j] = d[j];
    }
    return dist;
}

// Dense truncated PPR oracle: sum_{k=1..K} alpha (1-alpha)^k W^k via dense
// matrix powers. Independent of the sparse path it verifies.
inline Tensor ppr_reference(const WalkOperator& w, double alpha, std::size_t k_hops) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw UsageError("ppr_reference: alpha must lie in (0,1)");
    if (k_hops == 0) throw UsageError("ppr_reference: hop count must be at least 1");
    const std::size_t n = w.num_nodes();
    if (n > 500) throw UsageError("ppr_reference: oracle limited to 500 nodes");
    const Tensor wd = walk_dense(w);
    Tensor power = wd;
    Tensor acc({n, n});
    double coeff = alpha;
    for (std::size_t k = 1; k <= k_hops; ++k) {
        coeff *= (1.0 - alpha);
        for (std::size_t i = 0; i < acc.numel(); ++i)
            acc.data[i] += coeff * power.data[i];
        if (k == k_hops) break;
        Tensor next({n, n});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t t = 0; t < n; ++t) {
                const double p = power.at(i, t);
                if (p == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) next.at(i, j) += p * wd.at(t, j);
            }
        power = std::move(next);
    }
    return acc;
}

// --- PE cache --------------------------------------------------------------
// header: magic, K, |sources|, m, graph hash; then source ids, anchor ids,
// and the hop payloads as raw little-endian doubles.

constexpr char kPeCacheMagic[8] = {'M', 'N', 'D', 'P', 'E', '0', '0', '1'};

inline void save_pe_cache(const PeTable& pe, std::uint64_t graph_hash,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write PE cache: " + path);
    out.write(kPeCacheMagic, 8);
    const std::uint64_t header[4] = {pe.k_hops, pe.sources.size(), pe.anchors.size(),
                                     graph_hash};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(pe.sources.data()),
              static_cast<std::streamsize>(pe.sources.size() * sizeof(NodeId)));
    out.write(reinterpret_cast<const char*>(pe.anchors.data()),
              static_cast<std::streamsize>(pe.anchors.size() * sizeof(NodeId)));
    for (const Tensor& hop : pe.hops)
        out.write(reinterpret_cast<const char*>(hop.data.data()),
                  static_cast<std::streamsize>(hop.data.size() * sizeof(double)));
    if (!out) throw DataError("short write on PE cache: " + path);
}

inline PeTable load_pe_cache(const std::string& path, std::uint64_t expected_graph_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing PE cache: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || !std::equal(magic, magic + 8, kPeCacheMagic))
        throw DataError("not a PE cache file: " + path);
    std::uint64_t header[4];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) throw DataError("truncated PE cache: " + path);
    if (header[3] != expected_graph_hash)
        throw DataError("stale PE cache " + path + ": graph hash mismatch (cache " +
                        std::to_string(header[3]) + ", dataset " +
                        std::to_string(expected_graph_hash) + ")");
    PeTable pe;
    pe.k_hops = header[0];
    pe.sources.resize(header[1]);
    pe.anchors.resize(header[2]);
    in.read(reinterpret_cast<char*>(pe.sources.data()),
            static_cast<std::streamsize>(pe.sources.size() * sizeof(NodeId)));
    in.read(reinterpret_cast<char*>(pe.anchors.data()),
            static_cast<std::streamsize>(pe.anchors.size() * sizeof(NodeId)));
    for (std::size_t k = 0; k < pe.k_hops; ++k) {
        Tensor hop({pe.sources.size(), pe.anchors.size()});
        in.read(reinterpret_cast<char*>(hop.data.data()),
                static_cast<std::streamsize>(hop.data.size() * sizeof(double)));
        pe.hops.push_back(std::move(hop));
    }
    if (!in) throw DataError("truncated PE cache: " + path);
    return pe;
}

}  // namespace mandate
