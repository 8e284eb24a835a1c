#pragma once

#include <array>

#include "mandate/adam.hpp"
#include "mandate/autodiff.hpp"
#include "mandate/graph.hpp"
#include "mandate/params.hpp"
#include "mandate/walk.hpp"

namespace mandate {

enum class PeMode { kLearned, kFrozenPpr };
enum class OrthMode { kSquaredCosine, kRawCosine };

inline std::string to_string(PeMode m) {
    return m == PeMode::kLearned ? "learned" : "frozen_ppr";
}
inline std::string to_string(OrthMode m) {
    return m == OrthMode::kSquaredCosine ? "cos2" : "cos";
}
inline PeMode pe_mode_from_string(const std::string& s) {
    if (s == "learned") return PeMode::kLearned;
    if (s == "frozen_ppr") return PeMode::kFrozenPpr;
    throw UsageError("unknown pe_mode '" + s + "' (expected learned|frozen_ppr)");
}
inline OrthMode orth_mode_from_string(const std::string& s) {
    if (s == "cos2") return OrthMode::kSquaredCosine;
    if (s == "cos") return OrthMode::kRawCosine;
    throw UsageError("unknown orth_mode '" + s + "' (expected cos2|cos)");
}

struct ModelConfig {
    std::size_t hops = 2;      // K
    std::size_t hidden = 64;   // heterophilic branch and feature encoder width
    std::size_t pos_dim = 64;  // positional embedding width
    std::size_t layers = 2;
    std::size_t heads = 4;
    double lambda_orth = 0.1;
    double dropout = 0.0;
    PeMode pe_mode = PeMode::kLearned;
    double ppr_alpha = 0.15;
    OrthMode orth_mode = OrthMode::kSquaredCosine;

    // Final node embedding width: CONCAT(X, P) for one relation,
    // CONCAT(F', P^1..P^R) otherwise.
    std::size_t embed_dim(std::size_t feature_dim, std::size_t num_relations) const {
        return num_relations == 1 ? feature_dim + pos_dim
                                  : hidden + num_relations * pos_dim;
    }
    // Attention projects into heads * ceil(D/heads) columns so any embedding
    // width splits evenly across heads.
    std::size_t attn_inner(std::size_t d_model) const {
        return heads * ((d_model + heads - 1) / heads);
    }
};

namespace detail {

inline Tensor matmul_plain(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0])
        throw UsageError("matmul_plain: incompatible shapes " + a.shape_str() + " x " +
                         b.shape_str());
    Tensor out({a.shape[0], b.shape[1]});
    as_mat(out, out.shape[0], out.shape[1]).noalias() =
        as_mat(a, a.shape[0], a.shape[1]) * as_mat(b, b.shape[0], b.shape[1]);
    return out;
}

}  // namespace detail

// --- model building blocks ---------------------------------------------------

// Homophilic hop embedding: PE-weighted feature average over the anchor set.
// Parameter-free; depends only on the walk structure and the raw features.
inline Tensor homo_embed(const PeTable& pe, std::size_t hop, const Tensor& features) {
    if (hop >= pe.k_hops) throw UsageError("homo_embed: hop out of range");
    Tensor anchor_feats;
    if (features.rank() != 2)
        throw UsageError("homo_embed: rank-2 feature matrix required");
    if (features.shape[0] == pe.anchors.size() &&
        features.shape[0] != 0) {
        anchor_feats = features;
    } else {
        for (NodeId a : pe.anchors)
            if (a >= features.shape[0])
                throw UsageError(
                    "homo_embed: anchor/feature misalignment (anchor index " +
                    std::to_string(a) + " vs " + std::to_string(features.shape[0]) +
                    " feature rows)");
        anchor_feats = gather_rows_tensor(features, pe.anchors);
    }
    return detail::matmul_plain(pe.hops[hop], anchor_feats);
}

// Heterophilic hop embedding: two-layer relu net on CONCAT(p_k(u), X(u)).
inline Var hete_embed(Tape&, Var pe_hop_rows, Var features, Var w1, Var b1, Var w2,
                      Var b2, double dropout_rate = 0.0, Rng* rng = nullptr) {
    Var in = concat_cols({pe_hop_rows, features});
    Var h = relu(add_bias_row(matmul(in, w1), b1));
    if (dropout_rate > 0.0 && rng != nullptr) h = dropout(h, dropout_rate, *rng);
    return add_bias_row(matmul(h, w2), b2);
}

// Positional embedding: MLP over all hop embeddings plus the combined
// propagation row p'.
inline Var positional_embed(Tape&, std::span<const Var> hop_embeds, Var p_prime,
                            Var w1, Var b1, Var w2, Var b2, double dropout_rate = 0.0,
                            Rng* rng = nullptr) {
    if (hop_embeds.empty()) throw UsageError("positional_embed: need at least one hop");
    std::vector<Var> parts(hop_embeds.begin(), hop_embeds.end());
    parts.push_back(p_prime);
    Var cat = concat_cols(std::span<const Var>(parts));
    Var h = relu(add_bias_row(matmul(cat, w1), b1));
    if (dropout_rate > 0.0 && rng != nullptr) h = dropout(h, dropout_rate, *rng);
    return add_bias_row(matmul(h, w2), b2);
}

// Cross-hop redundancy penalty: mean over nodes of the pairwise squared
// cosine between hop embeddings (raw cosine behind the mode switch). Range
// [0, K(K-1)/2] in the squared mode; zero when K < 2.
inline Var orth_loss(Tape& t, std::span<const Var> hop_embeds,
                     OrthMode mode = OrthMode::kSquaredCosine) {
    if (hop_embeds.size() < 2) return t.constant(Tensor::scalar(0.0));
    std::vector<Var> unit;
    unit.reserve(hop_embeds.size());
    for (Var h : hop_embeds) unit.push_back(row_l2_normalize(h));
    Var acc;
    for (std::size_t a = 0; a < unit.size(); ++a)
        for (std::size_t b = a + 1; b < unit.size(); ++b) {
            Var cos = row_sum(mul(unit[a], unit[b]));
            Var term = mode == OrthMode::kSquaredCosine ? mean_all(mul(cos, cos))
                                                        : mean_all(cos);
            acc = acc.valid() ? add(acc, term) : term;
        }
    return acc;
}

// Softmax-weighted convex combination of per-relation feature embeddings.
inline Var fuse_relations(Tape& t, std::span<const Var> rel_feats, Var logits) {
    if (rel_feats.empty()) throw UsageError("fuse_relations: no relations");
    const Tensor& shape0 = t.value(rel_feats[0]);
    for (Var f : rel_feats)
        if (!t.value(f).same_shape(shape0))
            throw UsageError("fuse_relations: relation embeddings differ in shape");
    if (t.value(logits).numel() != rel_feats.size())
        throw UsageError("fuse_relations: got " +
                         std::to_string(t.value(logits).numel()) + " logits for " +
                         std::to_string(rel_feats.size()) + " relations");
    Var w = softmax_rows(logits);
    Var acc;
    for (std::size_t r = 0; r < rel_feats.size(); ++r) {
        Var term = scale(rel_feats[r], entry(w, r));
        acc = acc.valid() ? add(acc, term) : term;
    }
    return acc;
}

struct AttnLayerVars {
    Var wq, wk, wv, wo;
    Var ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

// L layers of multi-head scaled-dot-product self-attention over the batch
// rows with a pre-norm residual stream: each block reads a row-normalized
// view and adds its output back, and the stream is normalized once at the
// end. The untouched residual path keeps per-node identity through the
// stack, which post-norm variants lose to rank collapse once the attention
// output (a near-uniform batch average early in training) starts dominating
// the normalized sum.
inline Var attention_encode(Tape& t, Var e, std::span<const AttnLayerVars> layers,
                            std::size_t heads, double dropout_rate = 0.0,
                            Rng* rng = nullptr,
                            std::vector<Tensor>* attn_trace = nullptr) {
    const Tensor& ev = t.value(e);
    if (ev.rank() != 2 || ev.shape[0] == 0)
        throw UsageError("attention_encode: empty batch");
    Var x = e;
    for (const AttnLayerVars& lv : layers) {
        Var xn = row_l2_normalize(x);
        Var q = matmul(xn, lv.wq);
        Var k = matmul(xn, lv.wk);
        Var v = matmul(xn, lv.wv);
        const std::size_t inner = t.value(q).shape[1];
        if (inner % heads != 0)
            throw UsageError("attention_encode: projection width not divisible by heads");
        const std::size_t dk = inner / heads;
        const double scale_f = 1.0 / std::sqrt(static_cast<double>(dk));
        std::vector<Var> head_outs;
        for (std::size_t h = 0; h < heads; ++h) {
            Var qh = slice_cols(q, h * dk, (h + 1) * dk);
            Var kh = slice_cols(k, h * dk, (h + 1) * dk);
            Var vh = slice_cols(v, h * dk, (h + 1) * dk);
            Var attn = softmax_rows(mul_const(matmul(qh, transpose(kh)), scale_f));
            if (attn_trace != nullptr) attn_trace->push_back(t.value(attn));
            if (dropout_rate > 0.0 && rng != nullptr)
                attn = dropout(attn, dropout_rate, *rng);
            head_outs.push_back(matmul(attn, vh));
        }
        Var merged = concat_cols(std::span<const Var>(head_outs));
        x = add(x, matmul(merged, lv.wo));

        Var x2 = row_l2_normalize(x);
        Var h1 = relu(add_bias_row(matmul(x2, lv.ffn_w1), lv.ffn_b1));
        if (dropout_rate > 0.0 && rng != nullptr) h1 = dropout(h1, dropout_rate, *rng);
        x = add(x, add_bias_row(matmul(h1, lv.ffn_w2), lv.ffn_b2));
    }
    return row_l2_normalize(x);
}

// Inverse-frequency class weights computed on the training split.
inline std::array<double, 2> inverse_frequency_weights(const MultiRelGraph& g,
                                                       std::span<const NodeId> train_ids) {
    std::array<std::size_t, 2> count = {0, 0};
    for (NodeId id : train_ids) {
        const int l = g.labels[id];
        if (l == kBenign) ++count[0];
        if (l == kFraud) ++count[1];
    }
    if (count[0] == 0 || count[1] == 0)
        throw DataError("training split must contain both classes (benign " +
                        std::to_string(count[0]) + ", fraud " +
                        std::to_string(count[1]) + ")");
    const double total = static_cast<double>(count[0] + count[1]);
    return {total / (2.0 * static_cast<double>(count[0])),
            total / (2.0 * static_cast<double>(count[1]))};
}

// Class-weighted cross-entropy over the labeled rows of a two-column logit
// matrix. Weights are normalized so the balanced case averages plain NLL.
inline Var weighted_cross_entropy(Tape& t, Var logits, std::span<const int> row_labels,
                                  const std::array<double, 2>& class_weights) {
    const Tensor& lv = t.value(logits);
    if (lv.rank() != 2 || lv.shape[1] != 2)
        throw UsageError("weighted_cross_entropy: logits must be (n,2)");
    if (row_labels.size() != lv.shape[0])
        throw UsageError("weighted_cross_entropy: label count mismatch");
    std::vector<std::uint32_t> labeled;
    for (std::size_t i = 0; i < row_labels.size(); ++i)
        if (row_labels[i] != kUnlabeled) labeled.push_back(static_cast<std::uint32_t>(i));
    if (labeled.empty()) throw DataError("no labeled node in batch");

    Tensor onehot({labeled.size(), 2});
    Tensor wcol({labeled.size(), 1});
    double wsum = 0.0;
    for (std::size_t i = 0; i < labeled.size(); ++i)
        wsum += class_weights[static_cast<std::size_t>(row_labels[labeled[i]])];
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        const int y = row_labels[labeled[i]];
        onehot.at(i, static_cast<std::size_t>(y)) = 1.0;
        wcol.at(i, 0) = class_weights[static_cast<std::size_t>(y)] / wsum;
    }
    Var lp = log_softmax_rows(gather_rows(logits, std::move(labeled)));
    Var picked = row_sum(mul(lp, t.constant(std::move(onehot))));
    Var weighted = mul(picked, t.constant(std::move(wcol)));
    return mul_const(sum_all(weighted), -1.0);
}

// --- the assembled model -----------------------------------------------------

class MandateModel {
public:
    struct ForwardBits {
        Var embeddings;  // E, batch x D
        Var encoded;     // Z after attention
        Var logits;      // batch x 2
        Var probs;       // batch x 2
        Var orth;        // scalar, averaged over relations
        Var ce;          // scalar, only when loss requested
        Var loss;        // ce + lambda * orth
        std::vector<Tensor> attn_rows;
    };

    static MandateModel build(const MultiRelGraph& g, const ModelConfig& cfg,
                              std::uint64_t seed, std::vector<PeTable> pe) {
        if (pe.size() != g.num_relations())
            throw UsageError("model build: need one PE table per relation, got " +
                             std::to_string(pe.size()) + " for " +
                             std::to_string(g.num_relations()));
        MandateModel m;
        m.cfg_ = cfg;
        m.seed_ = seed;
        m.n_ = g.num_nodes;
        m.d_ = g.feature_dim;
        m.rel_count_ = g.num_relations();
        m.features_ = g.features;
        m.labels_ = g.labels;

        for (std::size_t r = 0; r < pe.size(); ++r) {
            const PeTable& p = pe[r];
            if (p.k_hops < cfg.hops)
                throw DataError("PE table for relation " + std::to_string(r) + " has " +
                                std::to_string(p.k_hops) + " hops, model needs " +
                                std::to_string(cfg.hops));
            if (p.sources.size() != g.num_nodes)
                throw UsageError("model build: PE sources must cover every node");
            for (std::size_t s = 0; s < p.sources.size(); ++s)
                if (p.sources[s] != s)
                    throw UsageError("model build: PE sources must be the identity order");
            if (r > 0 && p.anchors != pe[0].anchors)
                throw UsageError("model build: anchor sets differ across relations");
        }
        m.anchors_ = pe[0].anchors;

        for (std::size_t r = 0; r < pe.size(); ++r) {
            std::vector<Tensor> homo_r;
            for (std::size_t k = 0; k < cfg.hops; ++k)
                homo_r.push_back(homo_embed(pe[r], k, g.features));
            m.homo_.push_back(std::move(homo_r));
            if (cfg.pe_mode == PeMode::kFrozenPpr)
                m.frozen_pprime_.push_back(combine_scales(
                    pe[r].truncated(cfg.hops), frozen_ppr_theta(cfg.ppr_alpha, cfg.hops)));
            std::vector<Tensor> hops_r;
            for (std::size_t k = 0; k < cfg.hops; ++k)
                hops_r.push_back(std::move(pe[r].hops[k]));
            m.pe_hops_.push_back(std::move(hops_r));
        }

        m.init_params();
        return m;
    }

    const ModelConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }
    std::span<const NodeId> anchors() const { return anchors_; }
    std::size_t num_nodes() const { return n_; }
    std::size_t feature_dim() const { return d_; }
    std::size_t num_relations() const { return rel_count_; }
    std::size_t embed_dim() const { return cfg_.embed_dim(d_, rel_count_); }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

    ForwardBits forward(Tape& t, std::span<const NodeId> batch, bool with_loss,
                        const std::array<double, 2>& class_weights = {1.0, 1.0},
                        Rng* dropout_rng = nullptr, bool trace_attention = false) {
        if (batch.empty()) throw UsageError("forward: empty batch");
        for (NodeId b : batch)
            if (b >= n_) throw UsageError("forward: node index out of range");

        ForwardBits out;
        Var xb = t.constant(gather_rows_tensor(features_, batch));

        std::vector<Var> positional;  // P^r per relation
        std::vector<Var> rel_feats;   // F^r per relation (multi-relation only)
        Var orth_acc;
        for (std::size_t r = 0; r < rel_count_; ++r) {
            std::vector<Var> pe_b;
            for (std::size_t k = 0; k < cfg_.hops; ++k)
                pe_b.push_back(t.constant(gather_rows_tensor(pe_hops_[r][k], batch)));

            std::vector<Var> hop_embeds;
            for (std::size_t k = 0; k < cfg_.hops; ++k) {
                Var homo_b = t.constant(gather_rows_tensor(homo_[r][k], batch));
                Var hete = hete_embed(t, pe_b[k], xb, pvar(t, hete_name(r, k, "w1")),
                                      pvar(t, hete_name(r, k, "b1")),
                                      pvar(t, hete_name(r, k, "w2")),
                                      pvar(t, hete_name(r, k, "b2")), cfg_.dropout,
                                      dropout_rng);
                hop_embeds.push_back(concat_cols({homo_b, hete}));
            }

            Var p_prime;
            if (cfg_.pe_mode == PeMode::kLearned) {
                Var theta = pvar(t, "theta/r" + std::to_string(r));
                for (std::size_t k = 0; k < cfg_.hops; ++k) {
                    Var term = scale(pe_b[k], entry(theta, k));
                    p_prime = p_prime.valid() ? add(p_prime, term) : term;
                }
            } else {
                p_prime = t.constant(gather_rows_tensor(frozen_pprime_[r], batch));
            }

            Var o = orth_loss(t, hop_embeds, cfg_.orth_mode);
            orth_acc = orth_acc.valid() ? add(orth_acc, o) : o;

            positional.push_back(positional_embed(
                t, hop_embeds, p_prime, pvar(t, pos_name(r, "w1")),
                pvar(t, pos_name(r, "b1")), pvar(t, pos_name(r, "w2")),
                pvar(t, pos_name(r, "b2")), cfg_.dropout, dropout_rng));

            if (rel_count_ > 1) {
                Var h = relu(add_bias_row(matmul(xb, pvar(t, feat_name(r, "w1"))),
                                          pvar(t, feat_name(r, "b1"))));
                if (cfg_.dropout > 0.0 && dropout_rng != nullptr)
                    h = dropout(h, cfg_.dropout, *dropout_rng);
                rel_feats.push_back(add_bias_row(matmul(h, pvar(t, feat_name(r, "w2"))),
                                                 pvar(t, feat_name(r, "b2"))));
            }
        }
        out.orth = mul_const(orth_acc, 1.0 / static_cast<double>(rel_count_));

        std::vector<Var> embed_parts;
        if (rel_count_ == 1) {
            embed_parts = {xb, positional[0]};
        } else {
            embed_parts.push_back(fuse_relations(
                t, std::span<const Var>(rel_feats), pvar(t, "fusion/logits")));
            for (Var p : positional) embed_parts.push_back(p);
        }
        out.embeddings = concat_cols(std::span<const Var>(embed_parts));

        std::vector<AttnLayerVars> layer_vars;
        for (std::size_t l = 0; l < cfg_.layers; ++l)
            layer_vars.push_back(AttnLayerVars{
                pvar(t, attn_name(l, "wq")), pvar(t, attn_name(l, "wk")),
                pvar(t, attn_name(l, "wv")), pvar(t, attn_name(l, "wo")),
                pvar(t, attn_name(l, "ffn_w1")), pvar(t, attn_name(l, "ffn_b1")),
                pvar(t, attn_name(l, "ffn_w2")), pvar(t, attn_name(l, "ffn_b2"))});
        out.encoded = attention_encode(t, out.embeddings, layer_vars, cfg_.heads,
                                       cfg_.dropout, dropout_rng,
                                       trace_attention ? &out.attn_rows : nullptr);

        out.logits = add_bias_row(matmul(out.encoded, pvar(t, "head/w")),
                                  pvar(t, "head/b"));
        out.probs = softmax_rows(out.logits);

        if (with_loss) {
            std::vector<int> row_labels(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i)
                row_labels[i] = labels_[batch[i]];
            out.ce = weighted_cross_entropy(t, out.logits, row_labels, class_weights);
            out.loss = add(out.ce, mul_const(out.orth, cfg_.lambda_orth));
        }
        return out;
    }

    // Fraud probability per node, computed in deterministic chunks.
    std::vector<double> score_nodes(std::span<const NodeId> nodes, std::size_t chunk) {
        if (chunk == 0) throw UsageError("score_nodes: chunk must be positive");
        std::vector<double> scores;
        scores.reserve(nodes.size());
        for (std::size_t start = 0; start < nodes.size(); start += chunk) {
            const std::size_t stop = std::min(nodes.size(), start + chunk);
            Tape t;
            ForwardBits fb = forward(t, nodes.subspan(start, stop - start), false);
            const Tensor& probs = t.value(fb.probs);
            for (std::size_t i = 0; i < stop - start; ++i) scores.push_back(probs.at(i, 1));
        }
        return scores;
    }

    std::span<const int> labels() const { return labels_; }

private:
    ModelConfig cfg_;
    std::uint64_t seed_ = 0;
    std::size_t n_ = 0, d_ = 0, rel_count_ = 0;
    std::vector<NodeId> anchors_;
    Tensor features_;
    std::vector<int> labels_;
    std::vector<std::vector<Tensor>> pe_hops_;  // [relation][hop], n x m
    std::vector<std::vector<Tensor>> homo_;     // [relation][hop], n x d
    std::vector<Tensor> frozen_pprime_;         // [relation], n x m
    ParamStore store_;

    static std::string hete_name(std::size_t r, std::size_t k, const char* part) {
        return "hete/r" + std::to_string(r) + "/k" + std::to_string(k) + "/" + part;
    }
    static std::string pos_name(std::size_t r, const char* part) {
        return "posmix/r" + std::to_string(r) + "/" + part;
    }
    static std::string feat_name(std::size_t r, const char* part) {
        return "feat/r" + std::to_string(r) + "/" + part;
    }
    static std::string attn_name(std::size_t l, const char* part) {
        return "attn/l" + std::to_string(l) + "/" + part;
    }

    Var pvar(Tape& t, const std::string& name) { return t.param(store_.at(name)); }

    void init_params() {
        Rng rng = derive_rng(seed_, "init");
        const std::size_t m = anchors_.size();
        const std::size_t K = cfg_.hops;
        const std::size_t H = cfg_.hidden;
        const std::size_t P = cfg_.pos_dim;
        const std::size_t D = embed_dim();
        const std::size_t A = cfg_.attn_inner(D);

        if (cfg_.pe_mode == PeMode::kLearned)
            for (std::size_t r = 0; r < rel_count_; ++r)
                store_.add("theta/r" + std::to_string(r),
                           Tensor({K}, 1.0 / static_cast<double>(K)));
        for (std::size_t r = 0; r < rel_count_; ++r)
            for (std::size_t k = 0; k < K; ++k) {
                store_.add(hete_name(r, k, "w1"), glorot_init(m + d_, H, rng));
                store_.add(hete_name(r, k, "b1"), Tensor({H}));
                store_.add(hete_name(r, k, "w2"), glorot_init(H, H, rng));
                store_.add(hete_name(r, k, "b2"), Tensor({H}));
            }
        const std::size_t pos_in = K * (d_ + H) + m;
        for (std::size_t r = 0; r < rel_count_; ++r) {
            store_.add(pos_name(r, "w1"), glorot_init(pos_in, P, rng));
            store_.add(pos_name(r, "b1"), Tensor({P}));
            store_.add(pos_name(r, "w2"), glorot_init(P, P, rng));
            store_.add(pos_name(r, "b2"), Tensor({P}));
        }
        if (rel_count_ > 1) {
            for (std::size_t r = 0; r < rel_count_; ++r) {
                store_.add(feat_name(r, "w1"), glorot_init(d_, H, rng));
                store_.add(feat_name(r, "b1"), Tensor({H}));
                store_.add(feat_name(r, "w2"), glorot_init(H, H, rng));
                store_.add(feat_name(r, "b2"), Tensor({H}));
            }
            store_.add("fusion/logits", Tensor({rel_count_}));
        }
        for (std::size_t l = 0; l < cfg_.layers; ++l) {
            store_.add(attn_name(l, "wq"), glorot_init(D, A, rng));
            store_.add(attn_name(l, "wk"), glorot_init(D, A, rng));
            store_.add(attn_name(l, "wv"), glorot_init(D, A, rng));
            store_.add(attn_name(l, "wo"), glorot_init(A, D, rng));
            store_.add(attn_name(l, "ffn_w1"), glorot_init(D, D, rng));
            store_.add(attn_name(l, "ffn_b1"), Tensor({D}));
            store_.add(attn_name(l, "ffn_w2"), glorot_init(D, D, rng));
            store_.add(attn_name(l, "ffn_b2"), Tensor({D}));
        }
        store_.add("head/w", glorot_init(D, 2, rng));
        store_.add("head/b", Tensor({2}));
    }
};

// Anchor selection: every node when the graph fits under the cap, otherwise
// a fixed-seed uniform sample, always in ascending order.
inline std::vector<NodeId> select_anchors(std::size_t num_nodes, std::size_t cap,
                                          std::uint64_t seed) {
    if (cap == 0) throw UsageError("select_anchors: cap must be positive");
    if (num_nodes <= cap) {
        std::vector<NodeId> all(num_nodes);
        for (std::size_t i = 0; i < num_nodes; ++i) all[i] = static_cast<NodeId>(i);
        return all;
    }
    Rng rng = derive_rng(seed, "anchors");
    return rng.sample_without_replacement(static_cast<NodeId>(num_nodes),
                                          static_cast<NodeId>(cap));
}

}  // namespace mandate
