#pragma once

// Shared test oracles: naive dense algebra, random inputs, and a central
// finite-difference gradient checker independent of the library kernels.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pdn/autodiff.hpp"
#include "pdn/random.hpp"
#include "pdn/sparse.hpp"

namespace testing {

using pdn::DenseMatrix;
using pdn::Index;

inline DenseMatrix random_dense(Index rows, Index cols, pdn::Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    DenseMatrix m(rows, cols);
    for (auto& v : m.values()) v = u(rng);
    return m;
}

/// Triple-loop product, kept deliberately naive.
inline DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix out(a.rows(), b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    }
    return out;
}

inline DenseMatrix dense_add(const DenseMatrix& a, const DenseMatrix& b, double scale_b = 1.0) {
    DenseMatrix out = a;
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) out(i, j) += scale_b * b(i, j);
    }
    return out;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    double m = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    }
    return m;
}

/// Symmetric 0/1 graph without self-loops, each pair present with prob p.
inline pdn::CsrMatrix random_graph(Index n, double p, pdn::Rng& rng, bool weighted = false) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<pdn::Triplet> t;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            if (u(rng) < p) t.push_back({i, j, weighted ? 0.2 + u(rng) : 1.0});
        }
    }
    return pdn::symmetric_from_edges(n, t);
}

/// Dense D^{-1/2} A D^{-1/2} with plain row sums.
inline DenseMatrix dense_sym_normalize(const DenseMatrix& a) {
    const Index n = a.rows();
    std::vector<double> d(n, 0.0);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) d[i] += std::abs(a(i, j));
    }
    DenseMatrix out(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (a(i, j) != 0.0) out(i, j) = a(i, j) / std::sqrt(d[i] * d[j]);
        }
    }
    return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// sum_ij out_ij * r_ij as a tape op, so an arbitrary upstream gradient r is
/// exercised rather than all-ones.
inline pdn::ad::Value weighted_sum(const pdn::ad::Value& out, const DenseMatrix& r) {
    pdn::ad::Tape& tape = *out.tape();
    double s = 0.0;
    const auto v = out.data().values();
    const auto w = r.values();
    REQUIRE(v.size() == w.size());
    for (Index i = 0; i < v.size(); ++i) s += v[i] * w[i];
    const std::size_t in = out.id();
    return tape.record(DenseMatrix(1, 1, s), out.requires_grad(), [in, r](pdn::ad::Tape& tp, std::size_t io) {
        const double g = tp.grad(io)(0, 0);
        auto gi = tp.grad(in).values();
        const auto rv = r.values();
        for (Index i = 0; i < gi.size(); ++i) gi[i] += g * rv[i];
    });
}

struct GradCheckResult {
    double worst_excess = 0.0;  // max of |a - n| - allowed; <= 0 means pass
    std::string where;
};

inline bool grad_close(double analytic, double numeric, double rel = 1e-4, double abs_floor = 1e-7) {
    return std::abs(analytic - numeric) <= std::max(abs_floor, rel * std::max(std::abs(analytic), std::abs(numeric)));
}

/// `build` records a computation on the given leaves and returns any-shaped
/// output; the checker contracts it with a fixed random weight matrix.
using Builder = std::function<pdn::ad::Value(pdn::ad::Tape&, const std::vector<pdn::ad::Value>&)>;

inline GradCheckResult check_gradients(const Builder& build, const std::vector<DenseMatrix>& inputs,
                                       std::uint64_t seed, double h = 1e-6, double rel = 1e-4,
                                       double abs_floor = 1e-7) {
    pdn::Rng rng = pdn::make_rng(seed, 777);
    DenseMatrix r;
    std::vector<DenseMatrix> analytic;
    {
        pdn::ad::Tape tape;
        std::vector<pdn::ad::Value> leaves;
        for (const auto& in : inputs) leaves.push_back(tape.variable(in));
        const auto out = build(tape, leaves);
        r = random_dense(out.rows(), out.cols(), rng);
        tape.backward(weighted_sum(out, r));
        for (const auto& l : leaves) analytic.push_back(l.grad());
    }
    const auto eval = [&](const std::vector<DenseMatrix>& xs) {
        pdn::ad::Tape tape;
        std::vector<pdn::ad::Value> leaves;
        for (const auto& in : xs) leaves.push_back(tape.constant(in));
        const auto out = build(tape, leaves);
        double s = 0.0;
        for (Index i = 0; i < out.data().size(); ++i) s += out.data().values()[i] * r.values()[i];
        return s;
    };
    GradCheckResult res{-1.0, ""};
    std::vector<DenseMatrix> xs = inputs;
    for (Index k = 0; k < xs.size(); ++k) {
        for (Index i = 0; i < xs[k].size(); ++i) {
            const double x0 = xs[k].values()[i];
            xs[k].values()[i] = x0 + h;
            const double fp = eval(xs);
            xs[k].values()[i] = x0 - h;
            const double fm = eval(xs);
            xs[k].values()[i] = x0;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[k].values()[i];
            const double allowed = std::max(abs_floor, rel * std::max(std::abs(a), std::abs(numeric)));
            const double excess = std::abs(a - numeric) - allowed;
            if (excess > res.worst_excess) {
                res.worst_excess = excess;
                res.where = "input " + std::to_string(k) + " entry " + std::to_string(i) + ": analytic " +
                            std::to_string(a) + " numeric " + std::to_string(numeric);
            }
        }
    }
    return res;
}

/// Same check over Parameter objects driven by a scalar loss closure.
inline GradCheckResult check_parameter_gradients(const std::vector<pdn::ad::Parameter*>& params,
                                                 const std::function<pdn::ad::Value(pdn::ad::Tape&)>& loss,
                                                 double h = 1e-5, double rel = 1e-4, double abs_floor = 1e-7) {
    for (auto* p : params) p->zero_grad();
    {
        pdn::ad::Tape tape;
        tape.backward(loss(tape));
    }
    std::vector<DenseMatrix> analytic;
    for (auto* p : params) analytic.push_back(p->grad);
    GradCheckResult res{-1.0, ""};
    for (Index k = 0; k < params.size(); ++k) {
        auto vals = params[k]->value.values();
        for (Index i = 0; i < vals.size(); ++i) {
            const double x0 = vals[i];
            vals[i] = x0 + h;
            double fp;
            {
                pdn::ad::Tape t;
                fp = loss(t).scalar();
            }
            vals[i] = x0 - h;
            double fm;
            {
                pdn::ad::Tape t;
                fm = loss(t).scalar();
            }
            vals[i] = x0;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[k].values()[i];
            const double allowed = std::max(abs_floor, rel * std::max(std::abs(a), std::abs(numeric)));
            const double excess = std::abs(a - numeric) - allowed;
            if (excess > res.worst_excess) {
                res.worst_excess = excess;
                res.where = params[k]->name + "[" + std::to_string(i) + "]: analytic " + std::to_string(a) +
                            " numeric " + std::to_string(numeric);
            }
        }
    }
    return res;
}

}  // namespace testing
