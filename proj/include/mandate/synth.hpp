#pragma once

#include <cmath>
#include <unordered_set>

#include "mandate/graph.hpp"
#include "mandate/rng.hpp"

namespace mandate {

// Homophily-controlled multi-relation generator. Each relation draws edges
// independently: intra-class with the relation's homophily probability,
// cross-class otherwise. With weak per-node features this makes every
// relation an independent noisy view of the labels, so no single relation
// carries the whole signal but their fusion does.
struct SynthConfig {
    std::size_t num_nodes = 1000;
    std::size_t num_relations = 1;
    double fraud_rate = 0.1;
    std::vector<double> homophily = {0.9};     // per relation
    std::vector<double> mean_degree = {6.0};   // per relation
    std::size_t feature_dim = 16;
    double feature_signal = 1.1;  // distance between class means
    std::uint64_t seed = 7;
};

inline void validate(const SynthConfig& cfg) {
    if (cfg.num_nodes < 4) throw UsageError("synth: need at least 4 nodes");
    if (cfg.num_relations == 0) throw UsageError("synth: need at least one relation");
    if (!(cfg.fraud_rate > 0.0 && cfg.fraud_rate < 1.0))
        throw UsageError("synth: fraud_rate must lie in (0,1)");
    if (cfg.homophily.size() != cfg.num_relations)
        throw UsageError("synth: homophily list length must equal num_relations");
    if (cfg.mean_degree.size() != cfg.num_relations)
        throw UsageError("synth: mean_degree list length must equal num_relations");
    for (double h : cfg.homophily)
        if (h < 0.0 || h > 1.0) throw UsageError("synth: homophily must lie in [0,1]");
    for (double d : cfg.mean_degree) {
        if (d <= 0.0) throw UsageError("synth: mean_degree must be positive");
        if (d >= static_cast<double>(cfg.num_nodes))
            throw UsageError("synth: mean_degree must be below num_nodes");
    }
    if (cfg.feature_dim == 0) throw UsageError("synth: feature_dim must be positive");
    if (cfg.feature_signal < 0.0) throw UsageError("synth: feature_signal must be >= 0");
}

inline MultiRelGraph synth_generate(const SynthConfig& cfg) {
    validate(cfg);
    MultiRelGraph g;
    g.num_nodes = cfg.num_nodes;
    g.feature_dim = cfg.feature_dim;

    // labels: exact fraud count, positions shuffled
    const std::size_t n = cfg.num_nodes;
    std::size_t n_fraud = static_cast<std::size_t>(std::llround(cfg.fraud_rate * n));
    n_fraud = std::min(std::max<std::size_t>(n_fraud, 1), n - 1);
    {
        std::vector<NodeId> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<NodeId>(i);
        Rng rng = derive_rng(cfg.seed, "labels");
        rng.shuffle(order);
        g.labels.assign(n, kBenign);
        for (std::size_t i = 0; i < n_fraud; ++i) g.labels[order[i]] = kFraud;
    }
    std::vector<NodeId> members[2];
    for (std::size_t i = 0; i < n; ++i)
        members[g.labels[i]].push_back(static_cast<NodeId>(i));

    // features: class means separated by feature_signal, unit noise.
    // Values pass through float32 so the on-disk form is exact.
    {
        Rng rng = derive_rng(cfg.seed, "features");
        const double off =
            cfg.feature_signal / (2.0 * std::sqrt(static_cast<double>(cfg.feature_dim)));
        g.features = Tensor({n, cfg.feature_dim});
        for (std::size_t i = 0; i < n; ++i) {
            const double mu = g.labels[i] == kFraud ? off : -off;
            for (std::size_t j = 0; j < cfg.feature_dim; ++j)
                g.features.at(i, j) =
                    static_cast<double>(static_cast<float>(mu + rng.normal()));
        }
    }

    // relations
    for (std::size_t r = 0; r < cfg.num_relations; ++r) {
        const double h = cfg.homophily[r];
        const auto target =
            static_cast<std::size_t>(std::llround(cfg.mean_degree[r] * n / 2.0));
        Rng rng = derive_rng(cfg.seed, "edges", r);
        std::unordered_set<std::uint64_t> seen;
        std::vector<Edge> edges;
        edges.reserve(target);
        std::size_t attempts = 0;
        const std::size_t attempt_cap = 200 * target + 10000;
        while (edges.size() < target) {
            if (++attempts > attempt_cap)
                throw NumericError("synth: could not place " + std::to_string(target) +
                                   " edges for relation " + std::to_string(r));
            const bool intra = rng.bernoulli(h);
            const auto u = static_cast<NodeId>(rng.below(n));
            const auto& pool = intra ? members[g.labels[u]] : members[1 - g.labels[u]];
            if (pool.size() < (intra ? 2u : 1u)) continue;
            const NodeId v = pool[rng.below(pool.size())];
            if (u == v) continue;
            const std::uint64_t key =
                (static_cast<std::uint64_t>(std::min(u, v)) << 32) | std::max(u, v);
            if (!seen.insert(key).second) continue;
            edges.emplace_back(u, v);
        }
        g.adjacencies.push_back(csr_from_edges(n, std::move(edges)));
        g.relation_names.push_back("rel_" + std::to_string(r));
    }
    return g;
}

}  // namespace mandate
