#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mandate/common.hpp"
#include "mandate/rng.hpp"
#include "mandate/tensor.hpp"

namespace mandate {

// A named learnable tensor. Gradient and Adam moments live beside the value
// so optimizer state survives across steps while tapes come and go.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m, adam_v;

    Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
        grad = Tensor(value.shape);
    }
    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

class Tape;

struct Var {
    Tape* tape = nullptr;
    std::int32_t id = -1;
    bool valid() const { return tape != nullptr && id >= 0; }
};

namespace detail {
using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

inline CMap as_mat(const Tensor& t, std::size_t r, std::size_t c) {
    return CMap(t.data.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
inline MMap as_mat(Tensor& t, std::size_t r, std::size_t c) {
    return MMap(t.data.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
}  // namespace detail

// Reverse-mode tape over dense tensors. Every recorded operation knows how
// to pull its output gradient back into its inputs; backward walks the tape
// once in reverse creation order.
class Tape {
public:
    Var constant(Tensor v) { return push(std::move(v), false, nullptr, {}); }

    Var leaf(Tensor v, bool requires_grad = true) {
        return push(std::move(v), requires_grad, nullptr, {});
    }

    // Leaf bound to a Param: backward adds into p.grad.
    Var param(Param& p) { return push(p.value, true, &p, {}); }

    const Tensor& value(Var v) const { return node(v).value; }

    const Tensor& grad(Var v) const {
        const Node& n = node(v);
        if (!n.has_grad) throw UsageError("Tape::grad: no gradient recorded for node");
        return n.grad;
    }

    void backward(Var loss) {
        Node& ln = node(loss);
        if (ln.value.numel() != 1)
            throw UsageError("backward requires a scalar loss, got shape " +
                             ln.value.shape_str());
        if (backward_done_)
            throw UsageError("backward already ran on this tape");
        backward_done_ = true;
        if (!ln.requires_grad) return;
        accum_init(loss.id);
        node_at(loss.id).grad.data[0] = 1.0;
        for (std::int32_t i = static_cast<std::int32_t>(nodes_.size()) - 1; i >= 0; --i) {
            Node& n = nodes_[i];
            if (!n.has_grad || !n.requires_grad || !n.pull) continue;
            n.pull(*this, n.grad);
        }
        for (Node& n : nodes_)
            if (n.bound != nullptr && n.has_grad)
                for (std::size_t i = 0; i < n.grad.numel(); ++i)
                    n.bound->grad.data[i] += n.grad.data[i];
    }

    // Smallest |x| that went through a relu; gradient checks use it to spot
    // kinks where finite differences are meaningless.
    double min_relu_input() const { return kink_; }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool has_grad = false;
        bool requires_grad = false;
        Param* bound = nullptr;
        std::function<void(Tape&, const Tensor&)> pull;
    };

    std::vector<Node> nodes_;
    double kink_ = std::numeric_limits<double>::infinity();
    bool backward_done_ = false;

    Node& node_at(std::int32_t id) { return nodes_[static_cast<std::size_t>(id)]; }
    Node& node(Var v) {
        if (!v.valid() || v.tape != this) throw UsageError("Var does not belong to tape");
        return nodes_[static_cast<std::size_t>(v.id)];
    }
    const Node& node(Var v) const {
        if (!v.valid() || v.tape != this) throw UsageError("Var does not belong to tape");
        return nodes_[static_cast<std::size_t>(v.id)];
    }

    void accum_init(std::int32_t id) {
        Node& n = node_at(id);
        if (!n.has_grad) {
            n.grad = Tensor(n.value.shape);
            n.has_grad = true;
        }
    }

    Var push(Tensor value, bool requires_grad, Param* bound,
             std::function<void(Tape&, const Tensor&)> pull) {
        Node n;
        n.value = std::move(value);
        n.requires_grad = requires_grad;
        n.bound = bound;
        n.pull = std::move(pull);
        nodes_.push_back(std::move(n));
        return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
    }

    // ---- helpers shared by the op builders ----------------------------

    static void require_same_tape(Var a, Var b) {
        if (a.tape != b.tape) throw UsageError("operands live on different tapes");
    }

    Tensor& grad_buf(std::int32_t id) {
        accum_init(id);
        return node_at(id).grad;
    }

    void note_kink(double d) { kink_ = std::min(kink_, d); }

    friend Var matmul(Var a, Var b);
    friend Var transpose(Var a);
    friend Var add(Var a, Var b);
    friend Var add_bias_row(Var m, Var bias);
    friend Var mul(Var a, Var b);
    friend Var mul_const(Var a, double c);
    friend Var scale(Var m, Var s);
    friend Var relu(Var a);
    friend Var softmax_rows(Var a);
    friend Var log_softmax_rows(Var a);
    friend Var vlog(Var a);
    friend Var row_l2_normalize(Var a, double eps);
    friend Var concat_cols(std::span<const Var> parts);
    friend Var gather_rows(Var a, std::vector<std::uint32_t> idx);
    friend Var slice_cols(Var a, std::size_t begin, std::size_t end);
    friend Var entry(Var a, std::size_t i);
    friend Var row_sum(Var a);
    friend Var sum_all(Var a);
    friend Var mean_all(Var a);
    friend Var dropout(Var a, double rate, Rng& rng);
};

namespace detail {
// Rank-1 tensors behave as single rows in the row-wise ops.
inline std::pair<std::size_t, std::size_t> as_rows(const Tensor& t,
                                                   const char* op) {
    if (t.rank() == 1) return {1, t.shape[0]};
    if (t.rank() == 2) return {t.shape[0], t.shape[1]};
    throw UsageError(std::string(op) + ": rank-1 or rank-2 input required, got " +
                     t.shape_str());
}
}  // namespace detail

inline Var matmul(Var a, Var b) {
    Tape::require_same_tape(a, b);
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.shape[1] != bv.shape[0])
        throw UsageError("matmul: incompatible shapes " + av.shape_str() + " x " +
                         bv.shape_str());
    const std::size_t p = av.shape[0], q = av.shape[1], r = bv.shape[1];
    Tensor out({p, r});
    detail::as_mat(out, p, r).noalias() =
        detail::as_mat(av, p, q) * detail::as_mat(bv, q, r);
    const bool req = t.node(a).requires_grad || t.node(b).requires_grad;
    const std::int32_t ia = a.id, ib = b.id;
    return t.push(std::move(out), req,
                  nullptr, !req ? std::function<void(Tape&, const Tensor&)>()
                                : [ia, ib, p, q, r](Tape& tp, const Tensor& g) {
        const Tensor& A = tp.node_at(ia).value;
        const Tensor& B = tp.node_at(ib).value;
        auto gm = detail::as_mat(g, p, r);
        if (tp.node_at(ia).requires_grad) {
            Tensor& ga = tp.grad_buf(ia);
            detail::as_mat(ga, p, q).noalias() += gm * detail::as_mat(B, q, r).transpose();
        }
        if (tp.node_at(ib).requires_grad) {
            Tensor& gb = tp.grad_buf(ib);
            detail::as_mat(gb, q, r).noalias() += detail::as_mat(A, p, q).transpose() * gm;
        }
    });
}

inline Var transpose(Var a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    if (av.rank() != 2) throw UsageError("transpose: rank-2 input required");
    const std::size_t r = av.shape[0], c = av.shape[1];
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(j, i) = av.at(i, j);
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia, r, c](Tape& tp, const Tensor& g) {
        Tensor& ga = tp.grad_buf(ia);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) ga.at(i, j) += g.at(j, i);
    });
}

inline Var add(Var a, Var b) {
    Tape::require_same_tape(a, b);
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (!av.same_shape(bv))
        throw UsageError("add: shape mismatch " + av.shape_str() + " vs " +
                         bv.shape_str());
    Tensor out = av;
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += bv.data[i];
    const bool req = t.node(a).requires_grad || t.node(b).requires_grad;
    const std::int32_t ia = a.id, ib = b.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia, ib](Tape& tp, const Tensor& g) {
        if (tp.node_at(ia).requires_grad) {
            Tensor& ga = tp.grad_buf(ia);
            for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
        }
        if (tp.node_at(ib).requires_grad) {
            Tensor& gb = tp.grad_buf(ib);
            for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i];
        }
    });
}

// (r x c) + row-broadcast bias (c,)
inline Var add_bias_row(Var m, Var bias) {
    Tape::require_same_tape(m, bias);
    Tape& t = *m.tape;
    const Tensor& mv = t.value(m);
    const Tensor& bv = t.value(bias);
    if (mv.rank() != 2 || bv.rank() != 1 || bv.shape[0] != mv.shape[1])
        throw UsageError("add_bias_row: shapes " + mv.shape_str() + " and " +
                         bv.shape_str() + " are incompatible");
    const std::size_t r = mv.shape[0], c = mv.shape[1];
    Tensor out = mv;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) += bv.data[j];
    const bool req = t.node(m).requires_grad || t.node(bias).requires_grad;
    const std::int32_t im = m.id, ib = bias.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [im, ib, r, c](Tape& tp, const Tensor& g) {
        if (tp.node_at(im).requires_grad) {
            Tensor& gm = tp.grad_buf(im);
            for (std::size_t i = 0; i < g.numel(); ++i) gm.data[i] += g.data[i];
        }
        if (tp.node_at(ib).requires_grad) {
            Tensor& gb = tp.grad_buf(ib);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gb.data[j] += g.at(i, j);
        }
    });
}

inline Var mul(Var a, Var b) {
    Tape::require_same_tape(a, b);
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (!av.same_shape(bv))
        throw UsageError("mul: shape mismatch " + av.shape_str() + " vs " +
                         bv.shape_str());
    Tensor out = av;
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= bv.data[i];
    const bool req = t.node(a).requires_grad || t.node(b).requires_grad;
    const std::int32_t ia = a.id, ib = b.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia, ib](Tape& tp, const Tensor& g) {
        const Tensor& A = tp.node_at(ia).value;
        const Tensor& B = tp.node_at(ib).value;
        if (tp.node_at(ia).requires_grad) {
            Tensor& ga = tp.grad_buf(ia);
            for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * B.data[i];
        }
        if (tp.node_at(ib).requires_grad) {
            Tensor& gb = tp.grad_buf(ib);
            for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i] * A.data[i];
        }
    });
}

inline Var mul_const(Var a, double c) {
    Tape& t = *a.tape;
    Tensor out = t.value(a);
    for (double& v : out.data) v *= c;
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia, c](Tape& tp, const Tensor& g) {
        Tensor& ga = tp.grad_buf(ia);
        for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += c * g.data[i];
    });
}

// out = s * m where s is a one-element tensor (e.g. one theta entry)
inline Var scale(Var m, Var s) {
    Tape::require_same_tape(m, s);
    Tape& t = *m.tape;
    const Tensor& mv = t.value(m);
    const Tensor& sv = t.value(s);
    if (sv.numel() != 1) throw UsageError("scale: scalar operand must have one element");
    const double sc = sv.data[0];
    Tensor out = mv;
    for (double& v : out.data) v *= sc;
    const bool req = t.node(m).requires_grad || t.node(s).requires_grad;
    const std::int32_t im = m.id, is = s.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [im, is, sc](Tape& tp, const Tensor& g) {
        const Tensor& M = tp.node_at(im).value;
        if (tp.node_at(im).requires_grad) {
            Tensor& gm = tp.grad_buf(im);
            for (std::size_t i = 0; i < g.numel(); ++i) gm.data[i] += sc * g.data[i];
        }
        if (tp.node_at(is).requires_grad) {
            Tensor& gs = tp.grad_buf(is);
            double acc = 0.0;
            for (std::size_t i = 0; i < g.numel(); ++i) acc += g.data[i] * M.data[i];
            gs.data[0] += acc;
        }
    });
}

// Subgradient at 0 is 0.
inline Var relu(Var a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    Tensor out = av;
    for (double v : av.data) t.note_kink(std::abs(v));
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia](Tape& tp, const Tensor& g) {
        const Tensor& A = tp.node_at(ia).value;
        Tensor& ga = tp.grad_buf(ia);
        for (std::size_t i = 0; i < g.numel(); ++i)
            if (A.data[i] > 0.0) ga.data[i] += g.data[i];
    });
}

inline Var softmax_rows(Var a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const auto [r, c] = detail::as_rows(av, "softmax_rows");
    Tensor out = av;
    for (std::size_t i = 0; i < r; ++i) {
        double* row = out.data.data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            row[j] = std::exp(row[j] - mx);
            z += row[j];
        }
        for (std::size_t j = 0; j < c; ++j) row[j] /= z;
    }
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    Var v = t.push(std::move(out), req, nullptr, nullptr);
    if (req) {
        const std::int32_t io = v.id;
        t.node_at(v.id).pull = [ia, io, r, c](Tape& tp, const Tensor& g) {
            const Tensor& Y = tp.node_at(io).value;
            Tensor& ga = tp.grad_buf(ia);
            for (std::size_t i = 0; i < r; ++i) {
                const double* y = Y.data.data() + i * c;
                const double* gr = g.data.data() + i * c;
                double dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += gr[j] * y[j];
                double* out_g = ga.data.data() + i * c;
                for (std::size_t j = 0; j < c; ++j) out_g[j] += y[j] * (gr[j] - dot);
            }
        };
    }
    return v;
}

// Numerically safe log(softmax(x)); the cross-entropy path uses this so
// saturated logits never produce log(0).
inline Var log_softmax_rows(Var a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const auto [r, c] = detail::as_rows(av, "log_softmax_rows");
    Tensor out = av;
    for (std::size_t i = 0; i < r; ++i) {
        double* row = out.data.data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        const double lse = mx + std::log(z);
        for (std::size_t j = 0; j < c; ++j) row[j] -= lse;
    }
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    Var v = t.push(std::move(out), req, nullptr, nullptr);
    if (req) {
        const std::int32_t io = v.id;
        t.node_at(v.id).pull = [ia, io, r, c](Tape& tp, const Tensor& g) {
            const Tensor& Y = tp.node_at(io).value;  // log-probabilities
            Tensor& ga = tp.grad_buf(ia);
            for (std::size_t i = 0; i < r; ++i) {
                const double* y = Y.data.data() + i * c;
                const double* gr = g.data.data() + i * c;
                double gsum = 0.0;
                for (std::size_t j = 0; j < c; ++j) gsum += gr[j];
                double* out_g = ga.data.data() + i * c;
                for (std::size_t j = 0; j < c; ++j)
                    out_g[j] += gr[j] - std::exp(y[j]) * gsum;
            }
        };
    }
    return v;
}

inline Var vlog(Var a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    Tensor out = av;
    for (double& v : out.data) {
        if (v <= 0.0)
            throw NumericError("log of non-positive value " + format_double(v));
        v = std::log(v);
    }
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia](Tape& tp, const Tensor& g) {
        const Tensor& A = tp.node_at(ia).value;
        Tensor& ga = tp.grad_buf(ia);
        for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] / A.data[i];
    });
}

inline Var row_l2_normalize(Var a, double eps = 1e-12) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const auto [r, c] = detail::as_rows(av, "row_l2_normalize");
    Tensor out = av;
    Tensor norms({r});
    for (std::size_t i = 0; i < r; ++i) {
        double* row = out.data.data() + i * c;
        double ss = 0.0;
        for (std::size_t j = 0; j < c; ++j) ss += row[j] * row[j];
        const double nrm = std::sqrt(ss);
        norms.data[i] = nrm;
        const double denom = std::max(nrm, eps);
        for (std::size_t j = 0; j < c; ++j) row[j] /= denom;
    }
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    Var v = t.push(std::move(out), req, nullptr, nullptr);
    if (req) {
        const std::int32_t io = v.id;
        t.node_at(v.id).pull = [ia, io, r, c, eps, norms](Tape& tp, const Tensor& g) {
            const Tensor& Y = tp.node_at(io).value;
            Tensor& ga = tp.grad_buf(ia);
            for (std::size_t i = 0; i < r; ++i) {
                const double nrm = norms.data[i];
                const double* y = Y.data.data() + i * c;
                const double* gr = g.data.data() + i * c;
                double* out_g = ga.data.data() + i * c;
                if (nrm > eps) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < c; ++j) dot += gr[j] * y[j];
                    for (std::size_t j = 0; j < c; ++j)
                        out_g[j] += (gr[j] - y[j] * dot) / nrm;
                } else {
                    for (std::size_t j = 0; j < c; ++j) out_g[j] += gr[j] / eps;
                }
            }
        };
    }
    return v;
}

inline Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw UsageError("concat_cols: nothing to concatenate");
    Tape& t = *parts[0].tape;
    std::size_t rows = 0, total = 0;
    std::vector<std::size_t> widths;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        Tape::require_same_tape(parts[0], parts[p]);
        const Tensor& v = t.value(parts[p]);
        const auto [r, c] = detail::as_rows(v, "concat_cols");
        if (p == 0) rows = r;
        if (r != rows) throw UsageError("concat_cols: row count mismatch");
        widths.push_back(c);
        total += c;
    }
    Tensor out({rows, total});
    std::size_t off = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const Tensor& v = t.value(parts[p]);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < widths[p]; ++j)
                out.at(i, off + j) = v.data[i * widths[p] + j];
        off += widths[p];
    }
    bool req = false;
    std::vector<std::int32_t> ids;
    for (Var p : parts) {
        ids.push_back(p.id);
        req = req || t.node(p).requires_grad;
    }
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ids, widths, rows, total](Tape& tp, const Tensor& g) {
        std::size_t off = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
            if (tp.node_at(ids[p]).requires_grad) {
                Tensor& gp = tp.grad_buf(ids[p]);
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < widths[p]; ++j)
                        gp.data[i * widths[p] + j] += g.at(i, off + j);
            }
            off += widths[p];
        }
    });
}

inline Var concat_cols(std::initializer_list<Var> parts) {
    return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

inline Var gather_rows(Var a, std::vector<std::uint32_t> idx) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    if (av.rank() != 2) throw UsageError("gather_rows: rank-2 input required");
    const std::size_t c = av.shape[1];
    Tensor out({idx.size(), c});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= av.shape[0]) throw UsageError("gather_rows: index out of range");
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) = av.at(idx[i], j);
    }
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia, idx = std::move(idx), c](Tape& tp, const Tensor& g) {
        Tensor& ga = tp.grad_buf(ia);
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < c; ++j) ga.at(idx[i], j) += g.at(i, j);
    });
}

inline Var slice_cols(Var a, std::size_t begin, std::size_t end) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const auto [r, c] = detail::as_rows(av, "slice_cols");
    if (begin >= end || end > c) throw UsageError("slice_cols: bad column range");
    const std::size_t w = end - begin;
    Tensor out({r, w});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < w; ++j) out.at(i, j) = av.data[i * c + begin + j];
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia, begin, r, c, w](Tape& tp, const Tensor& g) {
        Tensor& ga = tp.grad_buf(ia);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < w; ++j) ga.data[i * c + begin + j] += g.at(i, j);
    });
}

inline Var entry(Var a, std::size_t i) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    if (i >= av.numel()) throw UsageError("entry: flat index out of range");
    Tensor out = Tensor::scalar(av.data[i]);
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia, i](Tape& tp, const Tensor& g) {
        tp.grad_buf(ia).data[i] += g.data[0];
    });
}

inline Var row_sum(Var a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const auto [r, c] = detail::as_rows(av, "row_sum");
    Tensor out({r, 1});
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += av.data[i * c + j];
        out.data[i] = s;
    }
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia, r, c](Tape& tp, const Tensor& g) {
        Tensor& ga = tp.grad_buf(ia);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) ga.data[i * c + j] += g.data[i];
    });
}

inline Var sum_all(Var a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    double s = 0.0;
    for (double v : av.data) s += v;
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    return t.push(Tensor::scalar(s), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia](Tape& tp, const Tensor& g) {
        Tensor& ga = tp.grad_buf(ia);
        for (double& v : ga.data) v += g.data[0];
    });
}

inline Var mean_all(Var a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    if (av.numel() == 0) throw UsageError("mean_all: empty tensor");
    double s = 0.0;
    for (double v : av.data) s += v;
    const double inv_n = 1.0 / static_cast<double>(av.numel());
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    return t.push(Tensor::scalar(s * inv_n), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia, inv_n](Tape& tp, const Tensor& g) {
        Tensor& ga = tp.grad_buf(ia);
        for (double& v : ga.data) v += g.data[0] * inv_n;
    });
}

// Inverted dropout. rate 0 is the identity and records nothing.
inline Var dropout(Var a, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw UsageError("dropout: rate must lie in [0,1)");
    if (rate == 0.0) return a;
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    Tensor mask(av.shape);
    const double keep = 1.0 - rate;
    for (double& m : mask.data) m = rng.uniform01() < keep ? 1.0 / keep : 0.0;
    Tensor out = av;
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= mask.data[i];
    const bool req = t.node(a).requires_grad;
    const std::int32_t ia = a.id;
    return t.push(std::move(out), req, nullptr,
                  !req ? std::function<void(Tape&, const Tensor&)>()
                       : [ia, mask = std::move(mask)](Tape& tp, const Tensor& g) {
        Tensor& ga = tp.grad_buf(ia);
        for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * mask.data[i];
    });
}

// --- finite-difference gradient check ---------------------------------------

struct GradCheckResult {
    double max_rel_error = 0.0;
    bool skipped = false;
    std::string warning;
};

// Compares tape gradients with central differences over every component of
// every listed parameter. Relative error uses max(1, |a|, |b|) in the
// denominator. A relu input within 10h of its kink makes the comparison
// meaningless, so the check reports a skip instead of a bogus number.
inline GradCheckResult grad_check(const std::function<Var(Tape&)>& build,
                                  std::span<Param* const> params, double h = 1e-5) {
    for (Param* p : params) p->zero_grad();
    std::vector<Tensor> analytic;
    {
        Tape tape;
        Var loss = build(tape);
        if (!tape.value(loss).all_finite())
            throw NumericError("grad_check: non-finite objective");
        tape.backward(loss);
        if (tape.min_relu_input() < 10.0 * h) {
            GradCheckResult r;
            r.skipped = true;
            r.warning = "relu input within " + format_double(10.0 * h) +
                        " of its kink; finite differences skipped";
            return r;
        }
        for (Param* p : params) analytic.push_back(p->grad);
    }

    auto eval = [&](void) -> double {
        Tape tape;
        Var loss = build(tape);
        const double v = tape.value(loss).data[0];
        if (!std::isfinite(v)) throw NumericError("grad_check: non-finite objective");
        return v;
    };

    GradCheckResult result;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Param& p = *params[pi];
        for (std::size_t i = 0; i < p.value.numel(); ++i) {
            const double saved = p.value.data[i];
            p.value.data[i] = saved + h;
            const double fp = eval();
            p.value.data[i] = saved - h;
            const double fm = eval();
            p.value.data[i] = saved;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[pi].data[i];
            const double rel = std::abs(numeric - a) /
                               std::max({1.0, std::abs(numeric), std::abs(a)});
            result.max_rel_error = std::max(result.max_rel_error, rel);
        }
    }
    return result;
}

}  // namespace mandate
