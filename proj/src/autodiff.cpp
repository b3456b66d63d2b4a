#include "pdn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdn {

DenseMatrix glorot_uniform(Index fan_in, Index fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseMatrix w(fan_in, fan_out);
    for (double& v : w.values()) v = dist(rng);
    return w;
}

DenseMatrix standard_normal(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    DenseMatrix m(rows, cols);
    for (double& v : m.values()) v = dist(rng);
    return m;
}

}  // namespace pdn

namespace pdn::ad {

namespace {

std::string shape_str(const DenseMatrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Tape& tape_of(const Value& v) {
    if (!v.valid()) throw std::logic_error("autodiff: use of an unbound Value");
    return *v.tape();
}

Tape& common_tape(const Value& a, const Value& b) {
    Tape& t = tape_of(a);
    if (&tape_of(b) != &t) throw std::logic_error("autodiff: operands live on different tapes");
    return t;
}

void require_same_shape(const char* op, const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape " + shape_str(a) + " vs " + shape_str(b));
    }
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus_scalar(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Elementwise map; `df(x, y)` is the derivative given input x and output y.
template <typename F, typename DF>
Value unary(const Value& a, F f, DF df) {
    Tape& t = tape_of(a);
    const DenseMatrix& x = a.data();
    DenseMatrix out(x.rows(), x.cols());
    const auto xv = x.values();
    auto ov = out.values();
    for (Index i = 0; i < xv.size(); ++i) ov[i] = f(xv[i]);
    const std::size_t ia = a.id();
    return t.record(std::move(out), a.requires_grad(), [ia, df](Tape& tp, std::size_t io) {
        const auto x = tp.value(ia).values();
        const auto y = tp.value(io).values();
        const auto g = tp.grad(io).values();
        auto gx = tp.grad(ia).values();
        for (Index i = 0; i < g.size(); ++i) gx[i] += g[i] * df(x[i], y[i]);
    });
}

void check_edges(const EdgeVector& e, const char* op) {
    if (!e.pattern) throw std::logic_error(std::string(op) + ": edge vector without pattern");
    if (e.values.rows() != e.pattern->nnz() || e.values.cols() != 1) {
        throw ShapeError(std::string(op) + ": edge values " + shape_str(e.values.data()) +
                         " for nnz " + std::to_string(e.pattern->nnz()));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameter / Value / Tape

Parameter::Parameter(std::string n, DenseMatrix v)
    : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

const DenseMatrix& Value::data() const { return tape_of(*this).value(id_); }
const DenseMatrix& Value::grad() const { return tape_of(*this).grad(id_); }
bool Value::requires_grad() const { return tape_of(*this).requires_grad(id_); }

double Value::scalar() const {
    const DenseMatrix& d = data();
    if (d.rows() != 1 || d.cols() != 1) {
        throw ShapeError("Value::scalar on shape " + shape_str(d));
    }
    return d(0, 0);
}

CsrMatrix EdgeVector::to_csr() const {
    const auto v = values.data().values();
    return CsrMatrix(*pattern, std::vector<double>(v.begin(), v.end()));
}

Value Tape::constant(DenseMatrix value) { return record(std::move(value), false, nullptr); }

Value Tape::constant_view(const DenseMatrix& value) {
    Node node;
    node.external = &value;
    nodes_.push_back(std::move(node));
    return Value(this, nodes_.size() - 1);
}

Value Tape::variable(DenseMatrix value) {
    Node node;
    node.grad = DenseMatrix(value.rows(), value.cols());
    node.value = std::move(value);
    node.requires_grad = true;
    nodes_.push_back(std::move(node));
    return Value(this, nodes_.size() - 1);
}

Value Tape::parameter(Parameter& p) {
    if (!p.grad.same_shape(p.value)) p.grad = DenseMatrix(p.value.rows(), p.value.cols());
    Value v = variable(p.value);
    nodes_.back().param = &p;
    return v;
}

Value Tape::record(DenseMatrix value, bool requires_grad, Backward backward) {
    Node node;
    if (requires_grad) {
        node.grad = DenseMatrix(value.rows(), value.cols());
        node.backward = std::move(backward);
    }
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return Value(this, nodes_.size() - 1);
}

void Tape::backward(const Value& loss) {
    if (loss.tape() != this) throw std::logic_error("backward: loss recorded on another tape");
    if (loss.rows() != 1 || loss.cols() != 1) {
        throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.data()));
    }
    for (auto& node : nodes_) {
        if (node.requires_grad) node.grad.fill(0.0);
    }
    ops_replayed_ = 0;
    if (!nodes_[loss.id()].requires_grad) return;
    nodes_[loss.id()].grad(0, 0) = 1.0;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        Node& node = nodes_[id];
        if (node.backward) {
            node.backward(*this, id);
            ++ops_replayed_;
        }
    }
    for (auto& node : nodes_) {
        if (node.param == nullptr) continue;
        auto dst = node.param->grad.values();
        const auto src = node.grad.values();
        for (Index i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
}

// ---------------------------------------------------------------------------
// Activations

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::softplus: return "softplus";
    }
    return "identity";
}

Activation parse_activation(std::string_view name) {
    if (name == "identity" || name == "linear") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "softplus") return Activation::softplus;
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::identity: return x;
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::sigmoid: return sigmoid_scalar(x);
        case Activation::softplus: return softplus_scalar(x);
    }
    return x;
}

Value relu(const Value& a) {
    return unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Value sigmoid(const Value& a) {
    return unary(a, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Value softplus(const Value& a) {
    return unary(a, softplus_scalar, [](double x, double) { return sigmoid_scalar(x); });
}

Value activate(const Value& a, Activation act) {
    switch (act) {
        case Activation::identity: return a;
        case Activation::relu: return relu(a);
        case Activation::sigmoid: return sigmoid(a);
        case Activation::softplus: return softplus(a);
    }
    return a;
}

// ---------------------------------------------------------------------------
// Dense ops

Value matmul(const Value& a, const Value& b) {
    Tape& t = common_tape(a, b);
    DenseMatrix out = pdn::matmul(a.data(), b.data());
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    const bool rg = a.requires_grad() || b.requires_grad();
    return t.record(std::move(out), rg, [ia, ib](Tape& tp, std::size_t io) {
        const DenseMatrix& g = tp.grad(io);
        const DenseMatrix& av = tp.value(ia);
        const DenseMatrix& bv = tp.value(ib);
        if (tp.requires_grad(ia)) gemm_accumulate(g, false, bv, true, tp.grad(ia));
        if (tp.requires_grad(ib)) gemm_accumulate(av, true, g, false, tp.grad(ib));
    });
}

Value add(const Value& a, const Value& b) {
    Tape& t = common_tape(a, b);
    require_same_shape("add", a.data(), b.data());
    DenseMatrix out = a.data();
    {
        auto o = out.values();
        const auto bv = b.data().values();
        for (Index i = 0; i < o.size(); ++i) o[i] += bv[i];
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                    [ia, ib](Tape& tp, std::size_t io) {
                        const auto g = tp.grad(io).values();
                        for (const std::size_t in : {ia, ib}) {
                            if (!tp.requires_grad(in)) continue;
                            auto gi = tp.grad(in).values();
                            for (Index i = 0; i < g.size(); ++i) gi[i] += g[i];
                        }
                    });
}

Value scale(const Value& a, double c) {
    return unary(
        a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Value add_bias(const Value& a, const Value& bias) {
    Tape& t = common_tape(a, bias);
    if (bias.rows() != 1 || bias.cols() != a.cols()) {
        throw ShapeError("add_bias: bias " + shape_str(bias.data()) + " for input " +
                         shape_str(a.data()));
    }
    DenseMatrix out = a.data();
    const auto b = bias.data().values();
    for (Index r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (Index c = 0; c < row.size(); ++c) row[c] += b[c];
    }
    const std::size_t ia = a.id();
    const std::size_t ib = bias.id();
    return t.record(std::move(out), a.requires_grad() || bias.requires_grad(),
                    [ia, ib](Tape& tp, std::size_t io) {
                        const DenseMatrix& g = tp.grad(io);
                        if (tp.requires_grad(ia)) {
                            auto ga = tp.grad(ia).values();
                            const auto gv = g.values();
                            for (Index i = 0; i < gv.size(); ++i) ga[i] += gv[i];
                        }
                        if (tp.requires_grad(ib)) {
                            auto gb = tp.grad(ib).values();
                            for (Index r = 0; r < g.rows(); ++r) {
                                const auto row = g.row(r);
                                for (Index c = 0; c < row.size(); ++c) gb[c] += row[c];
                            }
                        }
                    });
}

Value softmax_rows(const Value& a) {
    Tape& t = tape_of(a);
    const DenseMatrix& x = a.data();
    DenseMatrix out(x.rows(), x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
        const auto in = x.row(r);
        auto o = out.row(r);
        const double m = *std::max_element(in.begin(), in.end());
        double z = 0.0;
        for (Index c = 0; c < in.size(); ++c) {
            o[c] = std::exp(in[c] - m);
            z += o[c];
        }
        for (double& v : o) v /= z;
    }
    const std::size_t ia = a.id();
    return t.record(std::move(out), a.requires_grad(), [ia](Tape& tp, std::size_t io) {
        const DenseMatrix& y = tp.value(io);
        const DenseMatrix& g = tp.grad(io);
        DenseMatrix& gx = tp.grad(ia);
        for (Index r = 0; r < y.rows(); ++r) {
            const auto yr = y.row(r);
            const auto gr = g.row(r);
            double dot = 0.0;
            for (Index c = 0; c < yr.size(); ++c) dot += gr[c] * yr[c];
            auto gxr = gx.row(r);
            for (Index c = 0; c < yr.size(); ++c) gxr[c] += yr[c] * (gr[c] - dot);
        }
    });
}

Value softmax_vector(const Value& a) {
    Tape& t = tape_of(a);
    const auto x = a.data().values();
    if (x.empty()) throw ShapeError("softmax_vector: empty input");
    DenseMatrix out(a.rows(), a.cols());
    auto o = out.values();
    const double m = *std::max_element(x.begin(), x.end());
    double z = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        o[i] = std::exp(x[i] - m);
        z += o[i];
    }
    for (double& v : o) v /= z;
    const std::size_t ia = a.id();
    return t.record(std::move(out), a.requires_grad(), [ia](Tape& tp, std::size_t io) {
        const auto y = tp.value(io).values();
        const auto g = tp.grad(io).values();
        auto gx = tp.grad(ia).values();
        double dot = 0.0;
        for (Index i = 0; i < y.size(); ++i) dot += g[i] * y[i];
        for (Index i = 0; i < y.size(); ++i) gx[i] += y[i] * (g[i] - dot);
    });
}

Value dropout(const Value& a, double p, bool train, Rng& rng) {
    if (!(p >= 0.0 && p < 1.0)) {
        throw std::invalid_argument("dropout: p must lie in [0, 1), got " + std::to_string(p));
    }
    if (!train || p == 0.0) return a;
    DenseMatrix keep(a.rows(), a.cols());
    std::bernoulli_distribution coin(1.0 - p);
    for (double& k : keep.values()) k = coin(rng) ? 1.0 : 0.0;
    return dropout_with_mask(a, keep, p);
}

Value dropout_with_mask(const Value& a, const DenseMatrix& keep, double p) {
    if (!(p >= 0.0 && p < 1.0)) {
        throw std::invalid_argument("dropout: p must lie in [0, 1), got " + std::to_string(p));
    }
    require_same_shape("dropout", a.data(), keep);
    const double inv = 1.0 / (1.0 - p);
    DenseMatrix factor(keep.rows(), keep.cols());
    {
        auto f = factor.values();
        const auto k = keep.values();
        for (Index i = 0; i < f.size(); ++i) f[i] = k[i] != 0.0 ? inv : 0.0;
    }
    Tape& t = tape_of(a);
    DenseMatrix out = a.data();
    {
        auto o = out.values();
        const auto f = factor.values();
        for (Index i = 0; i < o.size(); ++i) o[i] *= f[i];
    }
    const std::size_t ia = a.id();
    return t.record(std::move(out), a.requires_grad(),
                    [ia, factor = std::move(factor)](Tape& tp, std::size_t io) {
                        const auto g = tp.grad(io).values();
                        const auto f = factor.values();
                        auto gx = tp.grad(ia).values();
                        for (Index i = 0; i < g.size(); ++i) gx[i] += g[i] * f[i];
                    });
}

Value column(const Value& a, Index j) {
    Tape& t = tape_of(a);
    const DenseMatrix& x = a.data();
    if (j >= x.cols()) throw ShapeError("column: index " + std::to_string(j) + " of " + shape_str(x));
    DenseMatrix out(x.rows(), 1);
    for (Index r = 0; r < x.rows(); ++r) out(r, 0) = x(r, j);
    const std::size_t ia = a.id();
    return t.record(std::move(out), a.requires_grad(), [ia, j](Tape& tp, std::size_t io) {
        const DenseMatrix& g = tp.grad(io);
        DenseMatrix& gx = tp.grad(ia);
        for (Index r = 0; r < g.rows(); ++r) gx(r, j) += g(r, 0);
    });
}

Value hstack(std::span<const Value> parts) {
    if (parts.empty()) throw ShapeError("hstack: no inputs");
    Tape& t = tape_of(parts.front());
    const Index rows = parts.front().rows();
    Index cols = 0;
    bool rg = false;
    std::vector<std::size_t> ids;
    for (const auto& p : parts) {
        if (&tape_of(p) != &t) throw std::logic_error("hstack: operands live on different tapes");
        if (p.rows() != rows) throw ShapeError("hstack: row mismatch");
        cols += p.cols();
        rg = rg || p.requires_grad();
        ids.push_back(p.id());
    }
    DenseMatrix out(rows, cols);
    Index offset = 0;
    for (const auto& p : parts) {
        const DenseMatrix& x = p.data();
        for (Index r = 0; r < rows; ++r) {
            for (Index c = 0; c < x.cols(); ++c) out(r, offset + c) = x(r, c);
        }
        offset += x.cols();
    }
    return t.record(std::move(out), rg, [ids = std::move(ids)](Tape& tp, std::size_t io) {
        const DenseMatrix& g = tp.grad(io);
        Index off = 0;
        for (const std::size_t in : ids) {
            const Index w = tp.value(in).cols();
            if (tp.requires_grad(in)) {
                DenseMatrix& gx = tp.grad(in);
                for (Index r = 0; r < g.rows(); ++r) {
                    for (Index c = 0; c < w; ++c) gx(r, c) += g(r, off + c);
                }
            }
            off += w;
        }
    });
}

Value gather_rows(const Value& a, std::span<const Index> rows) {
    Tape& t = tape_of(a);
    const DenseMatrix& x = a.data();
    DenseMatrix out(rows.size(), x.cols());
    for (Index i = 0; i < rows.size(); ++i) {
        if (rows[i] >= x.rows()) throw ShapeError("gather_rows: row index out of range");
        const auto src = x.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    const std::size_t ia = a.id();
    return t.record(std::move(out), a.requires_grad(),
                    [ia, idx = std::vector<Index>(rows.begin(), rows.end())](Tape& tp,
                                                                             std::size_t io) {
                        const DenseMatrix& g = tp.grad(io);
                        DenseMatrix& gx = tp.grad(ia);
                        for (Index i = 0; i < idx.size(); ++i) {
                            const auto gr = g.row(i);
                            auto dst = gx.row(idx[i]);
                            for (Index c = 0; c < gr.size(); ++c) dst[c] += gr[c];
                        }
                    });
}

Value scale_by_entry(const Value& x, const Value& s, Index idx) {
    Tape& t = common_tape(x, s);
    if (idx >= s.data().size()) throw ShapeError("scale_by_entry: index out of range");
    const double c = s.data().values()[idx];
    DenseMatrix out = x.data();
    for (double& v : out.values()) v *= c;
    const std::size_t ix = x.id();
    const std::size_t is = s.id();
    return t.record(std::move(out), x.requires_grad() || s.requires_grad(),
                    [ix, is, idx](Tape& tp, std::size_t io) {
                        const auto g = tp.grad(io).values();
                        const double c = tp.value(is).values()[idx];
                        if (tp.requires_grad(ix)) {
                            auto gx = tp.grad(ix).values();
                            for (Index i = 0; i < g.size(); ++i) gx[i] += c * g[i];
                        }
                        if (tp.requires_grad(is)) {
                            const auto xv = tp.value(ix).values();
                            double dot = 0.0;
                            for (Index i = 0; i < g.size(); ++i) dot += g[i] * xv[i];
                            tp.grad(is).values()[idx] += dot;
                        }
                    });
}

// ---------------------------------------------------------------------------
// Sparse ops

Value spmm_var(const EdgeVector& edges, const Value& x) {
    check_edges(edges, "spmm_var");
    Tape& t = common_tape(edges.values, x);
    const SupportPattern& pat = *edges.pattern;
    if (pat.n_cols() != x.rows()) {
        throw ShapeError("spmm_var: pattern " + std::to_string(pat.n_rows()) + "x" +
                         std::to_string(pat.n_cols()) + " times " + shape_str(x.data()));
    }
    const auto offsets = pat.row_offsets();
    const auto cols = pat.col_indices();
    const auto w = edges.values.data().values();
    const DenseMatrix& xv = x.data();
    DenseMatrix out(pat.n_rows(), xv.cols());
    for (Index r = 0; r < pat.n_rows(); ++r) {
        auto o = out.row(r);
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            const auto xr = xv.row(cols[k]);
            const double wk = w[k];
            for (Index c = 0; c < o.size(); ++c) o[c] += wk * xr[c];
        }
    }
    const std::size_t iw = edges.values.id();
    const std::size_t ix = x.id();
    return t.record(std::move(out), edges.values.requires_grad() || x.requires_grad(),
                    [iw, ix, pattern = edges.pattern](Tape& tp, std::size_t io) {
                        const auto offsets = pattern->row_offsets();
                        const auto cols = pattern->col_indices();
                        const DenseMatrix& g = tp.grad(io);
                        const DenseMatrix& xv = tp.value(ix);
                        const auto w = tp.value(iw).values();
                        const bool need_w = tp.requires_grad(iw);
                        const bool need_x = tp.requires_grad(ix);
                        for (Index r = 0; r < pattern->n_rows(); ++r) {
                            const auto gr = g.row(r);
                            for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
                                if (need_w) {
                                    const auto xr = xv.row(cols[k]);
                                    double s = 0.0;
                                    for (Index c = 0; c < gr.size(); ++c) s += gr[c] * xr[c];
                                    tp.grad(iw).values()[k] += s;
                                }
                                if (need_x) {
                                    auto gx = tp.grad(ix).row(cols[k]);
                                    const double wk = w[k];
                                    for (Index c = 0; c < gr.size(); ++c) gx[c] += wk * gr[c];
                                }
                            }
                        }
                    });
}

Value spmm_const(std::shared_ptr<const CsrMatrix> a, const Value& x) {
    Tape& t = tape_of(x);
    DenseMatrix out = pdn::spmm(*a, x.data());
    const std::size_t ix = x.id();
    return t.record(std::move(out), x.requires_grad(), [ix, a = std::move(a)](Tape& tp, std::size_t io) {
        const auto offsets = a->row_offsets();
        const auto cols = a->col_indices();
        const auto w = a->values();
        const DenseMatrix& g = tp.grad(io);
        DenseMatrix& gx = tp.grad(ix);
        for (Index r = 0; r < a->n_rows(); ++r) {
            const auto gr = g.row(r);
            for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
                auto dst = gx.row(cols[k]);
                const double wk = w[k];
                for (Index c = 0; c < gr.size(); ++c) dst[c] += wk * gr[c];
            }
        }
    });
}

EdgeVector sym_normalize_var(const EdgeVector& edges, double eps) {
    check_edges(edges, "sym_normalize_var");
    const SupportPattern& pat = *edges.pattern;
    if (!pat.square()) throw ShapeError("sym_normalize_var: non-square pattern");
    Tape& t = tape_of(edges.values);
    const auto offsets = pat.row_offsets();
    const auto cols = pat.col_indices();
    const auto w = edges.values.data().values();
    const Index n = pat.n_rows();
    std::vector<double> degree(n, 0.0);
    for (Index r = 0; r < n; ++r) {
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            if (w[k] < 0.0 || std::isnan(w[k])) {
                throw std::domain_error("sym_normalize_var: negative edge weight " +
                                        std::to_string(w[k]) + " at edge (" + std::to_string(r) +
                                        "," + std::to_string(cols[k]) + ")");
            }
            degree[r] += w[k];
        }
    }
    std::vector<double> inv_sqrt(n);
    for (Index r = 0; r < n; ++r) inv_sqrt[r] = 1.0 / std::sqrt(std::max(degree[r], eps));
    DenseMatrix out(pat.nnz(), 1);
    for (Index r = 0; r < n; ++r) {
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            out(k, 0) = w[k] * inv_sqrt[r] * inv_sqrt[cols[k]];
        }
    }
    const std::size_t iw = edges.values.id();
    Value result = t.record(
        std::move(out), edges.values.requires_grad(),
        [iw, eps, pattern = edges.pattern, degree = std::move(degree),
         inv_sqrt = std::move(inv_sqrt)](Tape& tp, std::size_t io) {
            const auto offsets = pattern->row_offsets();
            const auto cols = pattern->col_indices();
            const Index n = pattern->n_rows();
            const auto g = tp.grad(io).values();
            const auto y = tp.value(io).values();
            auto gw = tp.grad(iw).values();
            // d out_k / d deg_r = -out_k / (2 deg_r) for each endpoint r of k
            std::vector<double> g_degree(n, 0.0);
            for (Index r = 0; r < n; ++r) {
                for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
                    gw[k] += g[k] * inv_sqrt[r] * inv_sqrt[cols[k]];
                    const double half = -0.5 * g[k] * y[k];
                    if (degree[r] > eps) g_degree[r] += half / degree[r];
                    if (degree[cols[k]] > eps) g_degree[cols[k]] += half / degree[cols[k]];
                }
            }
            for (Index r = 0; r < n; ++r) {
                for (Index k = offsets[r]; k < offsets[r + 1]; ++k) gw[k] += g_degree[r];
            }
        });
    return {edges.pattern, result};
}

SelfLoopPlan make_self_loop_plan(std::shared_ptr<const SupportPattern> base) {
    if (!base->square()) throw ShapeError("make_self_loop_plan: non-square pattern");
    const Index n = base->n_rows();
    const SupportPattern diag = CsrMatrix::identity(n).pattern();
    const std::vector<SupportPattern> parts{*base, diag};
    auto looped = std::make_shared<const SupportPattern>(support_union(std::span(parts)));
    SelfLoopPlan plan;
    plan.embed = embed_positions(*base, *looped);
    plan.diagonal.resize(n);
    for (Index r = 0; r < n; ++r) plan.diagonal[r] = *looped->find(r, r);
    plan.base = std::move(base);
    plan.looped = std::move(looped);
    return plan;
}

EdgeVector add_self_loops_var(const EdgeVector& edges, const SelfLoopPlan& plan, double w) {
    check_edges(edges, "add_self_loops_var");
    if (edges.pattern != plan.base && *edges.pattern != *plan.base) {
        throw StructuralError("add_self_loops_var: plan built for a different pattern");
    }
    EdgeVector out = scatter_to_pattern(edges, plan.looped, plan.embed);
    if (w == 0.0) return out;
    Tape& t = tape_of(out.values);
    DenseMatrix shifted = out.values.data();
    for (const Index pos : plan.diagonal) shifted(pos, 0) += w;
    const std::size_t ia = out.values.id();
    Value v = t.record(std::move(shifted), out.values.requires_grad(), [ia](Tape& tp, std::size_t io) {
        const auto g = tp.grad(io).values();
        auto gx = tp.grad(ia).values();
        for (Index i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
    return {plan.looped, v};
}

EdgeVector scatter_to_pattern(const EdgeVector& edges, std::shared_ptr<const SupportPattern> target,
                              std::span<const Index> embed) {
    check_edges(edges, "scatter_to_pattern");
    if (embed.size() != edges.nnz()) throw ShapeError("scatter_to_pattern: map size mismatch");
    Tape& t = tape_of(edges.values);
    DenseMatrix out(target->nnz(), 1);
    const auto w = edges.values.data().values();
    for (Index k = 0; k < embed.size(); ++k) out(embed[k], 0) += w[k];
    const std::size_t iw = edges.values.id();
    Value v = t.record(std::move(out), edges.values.requires_grad(),
                       [iw, map = std::vector<Index>(embed.begin(), embed.end())](Tape& tp,
                                                                                std::size_t io) {
                           const auto g = tp.grad(io).values();
                           auto gw = tp.grad(iw).values();
                           for (Index k = 0; k < map.size(); ++k) gw[k] += g[map[k]];
                       });
    return {std::move(target), v};
}

EdgeVector edge_dot(const Value& h, std::shared_ptr<const SupportPattern> pattern) {
    Tape& t = tape_of(h);
    const DenseMatrix& hv = h.data();
    if (pattern->n_rows() != hv.rows() || pattern->n_cols() != hv.rows()) {
        throw ShapeError("edge_dot: pattern does not match " + shape_str(hv));
    }
    const auto offsets = pattern->row_offsets();
    const auto cols = pattern->col_indices();
    DenseMatrix out(pattern->nnz(), 1);
    for (Index r = 0; r < pattern->n_rows(); ++r) {
        const auto hr = hv.row(r);
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            const auto hc = hv.row(cols[k]);
            double s = 0.0;
            for (Index c = 0; c < hr.size(); ++c) s += hr[c] * hc[c];
            out(k, 0) = s;
        }
    }
    const std::size_t ih = h.id();
    Value v = t.record(std::move(out), h.requires_grad(), [ih, pattern](Tape& tp, std::size_t io) {
        const auto offsets = pattern->row_offsets();
        const auto cols = pattern->col_indices();
        const auto g = tp.grad(io).values();
        const DenseMatrix& hv = tp.value(ih);
        DenseMatrix& gh = tp.grad(ih);
        for (Index r = 0; r < pattern->n_rows(); ++r) {
            const auto hr = hv.row(r);
            for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
                const auto hc = hv.row(cols[k]);
                auto gr = gh.row(r);
                auto gc = gh.row(cols[k]);
                for (Index c = 0; c < hr.size(); ++c) {
                    gr[c] += g[k] * hc[c];
                    gc[c] += g[k] * hr[c];
                }
            }
        }
    });
    return {std::move(pattern), v};
}

// ---------------------------------------------------------------------------
// Losses

Value softmax_cross_entropy(const Value& logits, std::span<const int> labels,
                            std::span<const std::uint8_t> mask) {
    Tape& t = tape_of(logits);
    const DenseMatrix& z = logits.data();
    if (labels.size() != z.rows() || mask.size() != z.rows()) {
        throw ShapeError("softmax_cross_entropy: labels/mask length does not match logits rows");
    }
    Index count = 0;
    for (Index r = 0; r < z.rows(); ++r) {
        if (!mask[r]) continue;
        ++count;
        if (labels[r] < 0 || static_cast<Index>(labels[r]) >= z.cols()) {
            throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(labels[r]) +
                                    " out of range at row " + std::to_string(r));
        }
    }
    if (count == 0) throw std::invalid_argument("softmax_cross_entropy: empty mask");
    DenseMatrix probs(z.rows(), z.cols());
    double total = 0.0;
    for (Index r = 0; r < z.rows(); ++r) {
        if (!mask[r]) continue;
        const auto zr = z.row(r);
        const double m = *std::max_element(zr.begin(), zr.end());
        double s = 0.0;
        for (const double v : zr) s += std::exp(v - m);
        const double lse = m + std::log(s);
        total += lse - zr[static_cast<Index>(labels[r])];
        auto pr = probs.row(r);
        for (Index c = 0; c < zr.size(); ++c) pr[c] = std::exp(zr[c] - lse);
    }
    const double inv_count = 1.0 / static_cast<double>(count);
    DenseMatrix out(1, 1, total * inv_count);
    const std::size_t il = logits.id();
    return t.record(std::move(out), logits.requires_grad(),
                    [il, inv_count, probs = std::move(probs),
                     lab = std::vector<int>(labels.begin(), labels.end()),
                     msk = std::vector<std::uint8_t>(mask.begin(), mask.end())](Tape& tp,
                                                                              std::size_t io) {
                        const double g = tp.grad(io)(0, 0) * inv_count;
                        DenseMatrix& gz = tp.grad(il);
                        for (Index r = 0; r < probs.rows(); ++r) {
                            if (!msk[r]) continue;
                            auto gr = gz.row(r);
                            const auto pr = probs.row(r);
                            for (Index c = 0; c < pr.size(); ++c) gr[c] += g * pr[c];
                            gr[static_cast<Index>(lab[r])] -= g;
                        }
                    });
}

Value l2_penalty(std::span<const Value> params, double coeff) {
    if (coeff < 0.0) throw std::invalid_argument("l2_penalty: negative coefficient");
    if (params.empty()) throw std::invalid_argument("l2_penalty: no parameters");
    Tape& t = tape_of(params.front());
    double sum = 0.0;
    std::vector<std::size_t> ids;
    bool rg = false;
    for (const auto& p : params) {
        if (&tape_of(p) != &t) throw std::logic_error("l2_penalty: operands live on different tapes");
        for (const double v : p.data().values()) sum += v * v;
        ids.push_back(p.id());
        rg = rg || p.requires_grad();
    }
    return t.record(DenseMatrix(1, 1, coeff * sum), rg,
                    [ids = std::move(ids), coeff](Tape& tp, std::size_t io) {
                        const double g = tp.grad(io)(0, 0);
                        for (const std::size_t id : ids) {
                            if (!tp.requires_grad(id)) continue;
                            const auto v = tp.value(id).values();
                            auto gv = tp.grad(id).values();
                            for (Index i = 0; i < v.size(); ++i) gv[i] += 2.0 * coeff * v[i] * g;
                        }
                    });
}

}  // namespace pdn::ad
