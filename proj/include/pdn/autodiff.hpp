#pragma once

// Minimal reverse-mode automatic differentiation.
//
// A Tape records every operation of one forward pass. Values are cheap
// handles into the tape; the tape owns the data. Trainable state lives in
// Parameter objects outside the tape, and Tape::backward accumulates into
// Parameter::grad so gradients from repeated passes add up.

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdn/random.hpp"
#include "pdn/sparse.hpp"

namespace pdn::ad {

struct Parameter {
    std::string name;
    DenseMatrix value;
    DenseMatrix grad;

    Parameter() = default;
    Parameter(std::string name, DenseMatrix value);

    void zero_grad() { grad.fill(0.0); }
};

class Tape;

class Value {
public:
    Value() = default;

    const DenseMatrix& data() const;
    const DenseMatrix& grad() const;
    Index rows() const { return data().rows(); }
    Index cols() const { return data().cols(); }
    double scalar() const;

    std::size_t id() const noexcept { return id_; }
    Tape* tape() const noexcept { return tape_; }
    bool valid() const noexcept { return tape_ != nullptr; }
    bool requires_grad() const;

private:
    friend class Tape;
    Value(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Per-edge values (nnz x 1) laid out in the storage order of `pattern`.
struct EdgeVector {
    std::shared_ptr<const SupportPattern> pattern;
    Value values;

    Index nnz() const { return pattern->nnz(); }
    CsrMatrix to_csr() const;
};

class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t out)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Value constant(DenseMatrix value);
    /// Constant that refers to `value` without copying; `value` must outlive
    /// the tape.
    Value constant_view(const DenseMatrix& value);
    /// Leaf that receives a gradient but is not bound to a Parameter.
    Value variable(DenseMatrix value);
    Value parameter(Parameter& p);

    /// Records an op output. `backward` runs only when some input requires a
    /// gradient, which the caller signals through `requires_grad`.
    Value record(DenseMatrix value, bool requires_grad, Backward backward);

    /// Reverse sweep from a 1x1 loss. Tape-level grads are reset first;
    /// parameter grads accumulate.
    void backward(const Value& loss);

    const DenseMatrix& value(std::size_t id) const {
        const Node& n = nodes_[id];
        return n.external ? *n.external : n.value;
    }
    DenseMatrix& grad(std::size_t id) { return nodes_[id].grad; }
    const DenseMatrix& grad(std::size_t id) const { return nodes_[id].grad; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t ops_replayed() const noexcept { return ops_replayed_; }

private:
    struct Node {
        DenseMatrix value;
        const DenseMatrix* external = nullptr;
        DenseMatrix grad;
        Backward backward;
        Parameter* param = nullptr;
        bool requires_grad = false;
    };

    std::deque<Node> nodes_;
    std::size_t ops_replayed_ = 0;
};

enum class Activation { identity, relu, sigmoid, softplus };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);
double apply_activation(Activation a, double x);

// Dense ops -----------------------------------------------------------------

Value matmul(const Value& a, const Value& b);
Value add(const Value& a, const Value& b);
Value scale(const Value& a, double c);
/// Adds a 1 x cols row vector to every row.
Value add_bias(const Value& a, const Value& bias);
Value relu(const Value& a);
Value sigmoid(const Value& a);
Value softplus(const Value& a);
Value activate(const Value& a, Activation act);
Value softmax_rows(const Value& a);
/// Softmax over all entries, shape preserved.
Value softmax_vector(const Value& a);
/// Inverted dropout; identity when !train or p == 0.
Value dropout(const Value& a, double p, bool train, Rng& rng);
/// Dropout with a caller-supplied keep mask (entries 0 or 1).
Value dropout_with_mask(const Value& a, const DenseMatrix& keep, double p);
Value column(const Value& a, Index j);
Value hstack(std::span<const Value> parts);
Value gather_rows(const Value& a, std::span<const Index> rows);
/// s(0, idx) * x, where s is a 1 x k or k x 1 value.
Value scale_by_entry(const Value& x, const Value& s, Index idx);

// Sparse ops ----------------------------------------------------------------

/// Product of the sparse matrix (pattern, edge values) with x.
Value spmm_var(const EdgeVector& edges, const Value& x);
Value spmm_const(std::shared_ptr<const CsrMatrix> a, const Value& x);

/// D^{-1/2} G D^{-1/2} on the stored entries, differentiated through the
/// degrees. Negative entries throw std::domain_error naming the edge.
EdgeVector sym_normalize_var(const EdgeVector& edges, double eps = 1e-12);

struct SelfLoopPlan {
    std::shared_ptr<const SupportPattern> base;
    std::shared_ptr<const SupportPattern> looped;
    std::vector<Index> embed;     // base position -> looped position
    std::vector<Index> diagonal;  // row -> looped position of (row, row)
};

SelfLoopPlan make_self_loop_plan(std::shared_ptr<const SupportPattern> base);
EdgeVector add_self_loops_var(const EdgeVector& edges, const SelfLoopPlan& plan, double w);

/// Moves edge values onto a superset pattern, zero elsewhere.
EdgeVector scatter_to_pattern(const EdgeVector& edges, std::shared_ptr<const SupportPattern> target,
                              std::span<const Index> embed);

/// Per stored edge (u, v): h[u, :] . h[v, :]. Work is O(nnz * cols).
EdgeVector edge_dot(const Value& h, std::shared_ptr<const SupportPattern> pattern);

// Losses --------------------------------------------------------------------

/// Mean negative log-likelihood over rows where mask is true.
Value softmax_cross_entropy(const Value& logits, std::span<const int> labels,
                            std::span<const std::uint8_t> mask);
Value l2_penalty(std::span<const Value> params, double coeff);

}  // namespace pdn::ad
