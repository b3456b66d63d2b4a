#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdn {

using Index = std::size_t;

/// Raised when sparse structure is malformed (index out of range, broken
/// row offsets, unsorted columns, support escaping a pattern).
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on incompatible operand shapes.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(Index rows, Index cols, double fill = 0.0);
    DenseMatrix(Index rows, Index cols, std::vector<double> values);

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static DenseMatrix identity(Index n);

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }
    Index size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(Index r, Index c) { return values_[r * cols_ + c]; }
    double operator()(Index r, Index c) const { return values_[r * cols_ + c]; }

    std::span<double> row(Index r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(Index r) const { return {values_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    void fill(double v);
    bool all_finite() const;
    bool same_shape(const DenseMatrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    DenseMatrix transposed() const;

    bool operator==(const DenseMatrix& other) const = default;

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<double> values_;
};

struct Triplet {
    Index row;
    Index col;
    double value;

    bool operator==(const Triplet& other) const = default;
};

struct CooMatrix {
    Index n_rows = 0;
    Index n_cols = 0;
    std::vector<Triplet> entries;
};

/// Sparsity structure without values; shared between a learned graph's
/// edge vector and the kernels that consume it.
class SupportPattern {
public:
    SupportPattern() = default;
    SupportPattern(Index n_rows, Index n_cols, std::vector<Index> row_offsets,
                   std::vector<Index> col_indices);

    Index n_rows() const noexcept { return n_rows_; }
    Index n_cols() const noexcept { return n_cols_; }
    Index nnz() const noexcept { return col_indices_.size(); }
    bool square() const noexcept { return n_rows_ == n_cols_; }

    std::span<const Index> row_offsets() const noexcept { return row_offsets_; }
    std::span<const Index> col_indices() const noexcept { return col_indices_; }

    /// Row index of every stored entry, in storage order.
    std::vector<Index> row_indices() const;

    /// Storage position of (r, c), if present.
    std::optional<Index> find(Index r, Index c) const;

    bool operator==(const SupportPattern& other) const = default;

private:
    Index n_rows_ = 0;
    Index n_cols_ = 0;
    std::vector<Index> row_offsets_{0};
    std::vector<Index> col_indices_;
};

class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(Index n_rows, Index n_cols, std::vector<Index> row_offsets,
              std::vector<Index> col_indices, std::vector<double> values);
    CsrMatrix(SupportPattern pattern, std::vector<double> values);

    static CsrMatrix identity(Index n);
    static CsrMatrix zeros(Index n_rows, Index n_cols);

    Index n_rows() const noexcept { return pattern_.n_rows(); }
    Index n_cols() const noexcept { return pattern_.n_cols(); }
    Index nnz() const noexcept { return values_.size(); }

    const SupportPattern& pattern() const noexcept { return pattern_; }
    std::span<const Index> row_offsets() const noexcept { return pattern_.row_offsets(); }
    std::span<const Index> col_indices() const noexcept { return pattern_.col_indices(); }
    std::span<const double> values() const noexcept { return values_; }

    /// Value at (r, c); zero when not stored.
    double at(Index r, Index c) const;

    CooMatrix to_coo() const;
    DenseMatrix to_dense() const;
    bool is_symmetric() const;

    bool operator==(const CsrMatrix& other) const = default;

private:
    SupportPattern pattern_;
    std::vector<double> values_;
};

CooMatrix canonicalize(const CooMatrix& coo);
CsrMatrix to_csr(const CooMatrix& coo);

/// Builds a symmetric matrix from undirected (u, v, w) entries; each entry is
/// stored at (u, v) and (v, u). Duplicates are summed.
CsrMatrix symmetric_from_edges(Index n, std::span<const Triplet> edges);

DenseMatrix spmm(const CsrMatrix& a, const DenseMatrix& x);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// c += op(a) op(b), op = transpose when the flag is set.
void gemm_accumulate(const DenseMatrix& a, bool transpose_a, const DenseMatrix& b, bool transpose_b,
                     DenseMatrix& c);

CsrMatrix add_self_loops(const CsrMatrix& a, double w);

/// D^{-1/2} A D^{-1/2} with degrees taken as absolute row sums floored at eps.
CsrMatrix sym_normalize(const CsrMatrix& a, double eps = 1e-12);

SupportPattern support_union(std::span<const CsrMatrix> mats);
SupportPattern support_union(std::span<const SupportPattern> patterns);

/// Per-position weighted sum of `mats` stored on `pattern`.
CsrMatrix weighted_sum_on_support(const SupportPattern& pattern, std::span<const CsrMatrix> mats,
                                  std::span<const double> betas);

/// Values of `m` laid out in `pattern` storage order (zeros where `m` has no
/// entry). Throws StructuralError when `m` stores an entry outside `pattern`.
std::vector<double> values_on_pattern(const SupportPattern& pattern, const CsrMatrix& m);

/// For each stored position of `from`, its position in `to`. Throws
/// StructuralError when `from` is not contained in `to`.
std::vector<Index> embed_positions(const SupportPattern& from, const SupportPattern& to);

/// Storage position of the transposed entry (c, r) for every stored (r, c).
/// Requires a structurally symmetric pattern.
std::vector<Index> transpose_positions(const SupportPattern& pattern);

}  // namespace pdn
