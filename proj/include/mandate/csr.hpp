#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mandate/common.hpp"
#include "mandate/tensor.hpp"

namespace mandate {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

// Compressed-row sparse matrix. Adjacencies store 1.0 values; the walk
// operator reuses the structure with per-row probabilities.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr;  // rows + 1
    std::vector<NodeId> col;           // nnz, ascending within a row
    std::vector<double> val;           // nnz

    std::size_t nnz() const { return col.size(); }
    bool is_square() const { return rows == cols; }

    std::span<const NodeId> row_cols(std::size_t i) const {
        return {col.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
    }
    std::span<const double> row_vals(std::size_t i) const {
        return {val.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
    }
    std::size_t degree(std::size_t i) const { return row_ptr[i + 1] - row_ptr[i]; }

    bool has_entry(NodeId u, NodeId v) const {
        auto r = row_cols(u);
        return std::binary_search(r.begin(), r.end(), v);
    }
};

// Builds an undirected simple adjacency: both directions inserted, self
// loops dropped, duplicates collapsed.
inline CsrMatrix csr_from_edges(std::size_t n, std::vector<Edge> edges) {
    for (const Edge& e : edges) {
        if (e.first >= n || e.second >= n)
            throw DataError("edge endpoint " +
                            std::to_string(std::max(e.first, e.second)) +
                            " out of range for " + std::to_string(n) + " nodes");
    }
    std::vector<Edge> dir;
    dir.reserve(edges.size() * 2);
    for (const Edge& e : edges) {
        if (e.first == e.second) continue;  // stored graphs are loop-free
        dir.emplace_back(e.first, e.second);
        dir.emplace_back(e.second, e.first);
    }
    std::sort(dir.begin(), dir.end());
    dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

    CsrMatrix m;
    m.rows = m.cols = n;
    m.row_ptr.assign(n + 1, 0);
    for (const Edge& e : dir) ++m.row_ptr[e.first + 1];
    for (std::size_t i = 0; i < n; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
    m.col.resize(dir.size());
    m.val.assign(dir.size(), 1.0);
    std::vector<std::size_t> cursor(m.row_ptr.begin(), m.row_ptr.end() - 1);
    for (const Edge& e : dir) m.col[cursor[e.first]++] = e.second;
    return m;
}

// Each undirected edge once, u < v, sorted. Canonical form for files and
// hashing.
inline std::vector<Edge> csr_upper_edges(const CsrMatrix& m) {
    std::vector<Edge> out;
    out.reserve(m.nnz() / 2);
    for (std::size_t u = 0; u < m.rows; ++u)
        for (NodeId v : m.row_cols(u))
            if (u < v) out.emplace_back(static_cast<NodeId>(u), v);
    return out;
}

inline Tensor csr_to_dense(const CsrMatrix& m) {
    Tensor d({m.rows, m.cols});
    for (std::size_t i = 0; i < m.rows; ++i) {
        auto cols = m.row_cols(i);
        auto vals = m.row_vals(i);
        for (std::size_t t = 0; t < cols.size(); ++t) d.at(i, cols[t]) = vals[t];
    }
    return d;
}

}  // namespace mandate
