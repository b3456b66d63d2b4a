#include "pdn/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Core>

namespace pdn {

namespace {

std::string shape_str(Index r, Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

void check_structure(Index n_rows, Index n_cols, std::span<const Index> offsets,
                     std::span<const Index> cols) {
    if (offsets.size() != n_rows + 1) {
        throw StructuralError("row_offsets length " + std::to_string(offsets.size()) +
                              " != n_rows + 1");
    }
    if (offsets.front() != 0 || offsets.back() != cols.size()) {
        throw StructuralError("row_offsets must start at 0 and end at nnz");
    }
    for (Index r = 0; r < n_rows; ++r) {
        if (offsets[r] > offsets[r + 1]) {
            throw StructuralError("row_offsets decrease at row " + std::to_string(r));
        }
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            if (cols[k] >= n_cols) {
                throw StructuralError("column index " + std::to_string(cols[k]) +
                                      " out of range in row " + std::to_string(r));
            }
            if (k > offsets[r] && cols[k] <= cols[k - 1]) {
                throw StructuralError("column indices not strictly increasing in row " +
                                      std::to_string(r));
            }
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// DenseMatrix

DenseMatrix::DenseMatrix(Index rows, Index cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(Index rows, Index cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw ShapeError("DenseMatrix: " + std::to_string(values_.size()) +
                         " values for shape " + shape_str(rows, cols));
    }
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const Index n_rows = rows.size();
    const Index n_cols = n_rows ? rows.begin()->size() : 0;
    std::vector<double> values;
    values.reserve(n_rows * n_cols);
    for (const auto& r : rows) {
        if (r.size() != n_cols) {
            throw ShapeError("DenseMatrix::from_rows: ragged rows");
        }
        values.insert(values.end(), r.begin(), r.end());
    }
    return DenseMatrix(n_rows, n_cols, std::move(values));
}

DenseMatrix DenseMatrix::identity(Index n) {
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void DenseMatrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool DenseMatrix::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (Index r = 0; r < rows_; ++r) {
        for (Index c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    }
    return t;
}

// ---------------------------------------------------------------------------
// SupportPattern

SupportPattern::SupportPattern(Index n_rows, Index n_cols, std::vector<Index> row_offsets,
                               std::vector<Index> col_indices)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)) {
    check_structure(n_rows_, n_cols_, row_offsets_, col_indices_);
}

std::vector<Index> SupportPattern::row_indices() const {
    std::vector<Index> rows(nnz());
    for (Index r = 0; r < n_rows_; ++r) {
        std::fill(rows.begin() + static_cast<std::ptrdiff_t>(row_offsets_[r]),
                  rows.begin() + static_cast<std::ptrdiff_t>(row_offsets_[r + 1]), r);
    }
    return rows;
}

std::optional<Index> SupportPattern::find(Index r, Index c) const {
    if (r >= n_rows_) return std::nullopt;
    const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[r]);
    const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[r + 1]);
    const auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return std::nullopt;
    return static_cast<Index>(it - col_indices_.begin());
}

// ---------------------------------------------------------------------------
// CsrMatrix

CsrMatrix::CsrMatrix(Index n_rows, Index n_cols, std::vector<Index> row_offsets,
                     std::vector<Index> col_indices, std::vector<double> values)
    : CsrMatrix(SupportPattern(n_rows, n_cols, std::move(row_offsets), std::move(col_indices)),
                std::move(values)) {}

CsrMatrix::CsrMatrix(SupportPattern pattern, std::vector<double> values)
    : pattern_(std::move(pattern)), values_(std::move(values)) {
    if (values_.size() != pattern_.nnz()) {
        throw StructuralError("CsrMatrix: " + std::to_string(values_.size()) +
                              " values for nnz " + std::to_string(pattern_.nnz()));
    }
}

CsrMatrix CsrMatrix::identity(Index n) {
    std::vector<Index> offsets(n + 1);
    std::iota(offsets.begin(), offsets.end(), Index{0});
    std::vector<Index> cols(n);
    std::iota(cols.begin(), cols.end(), Index{0});
    return CsrMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

CsrMatrix CsrMatrix::zeros(Index n_rows, Index n_cols) {
    return CsrMatrix(n_rows, n_cols, std::vector<Index>(n_rows + 1, 0), {}, {});
}

double CsrMatrix::at(Index r, Index c) const {
    const auto pos = pattern_.find(r, c);
    return pos ? values_[*pos] : 0.0;
}

CooMatrix CsrMatrix::to_coo() const {
    CooMatrix coo{n_rows(), n_cols(), {}};
    coo.entries.reserve(nnz());
    const auto offsets = row_offsets();
    const auto cols = col_indices();
    for (Index r = 0; r < n_rows(); ++r) {
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            coo.entries.push_back({r, cols[k], values_[k]});
        }
    }
    return coo;
}

DenseMatrix CsrMatrix::to_dense() const {
    DenseMatrix d(n_rows(), n_cols());
    const auto offsets = row_offsets();
    const auto cols = col_indices();
    for (Index r = 0; r < n_rows(); ++r) {
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) d(r, cols[k]) = values_[k];
    }
    return d;
}

bool CsrMatrix::is_symmetric() const {
    if (n_rows() != n_cols()) return false;
    const auto offsets = row_offsets();
    const auto cols = col_indices();
    for (Index r = 0; r < n_rows(); ++r) {
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            const auto t = pattern_.find(cols[k], r);
            if (!t || values_[*t] != values_[k]) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Construction

CooMatrix canonicalize(const CooMatrix& coo) {
    for (const auto& e : coo.entries) {
        if (e.row >= coo.n_rows || e.col >= coo.n_cols) {
            throw StructuralError("COO entry (" + std::to_string(e.row) + "," +
                                  std::to_string(e.col) + ") out of range for shape " +
                                  shape_str(coo.n_rows, coo.n_cols));
        }
    }
    std::vector<Triplet> sorted = coo.entries;
    // stable: duplicates are summed in input order
    std::stable_sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    CooMatrix out{coo.n_rows, coo.n_cols, {}};
    out.entries.reserve(sorted.size());
    for (const auto& e : sorted) {
        if (!out.entries.empty() && out.entries.back().row == e.row &&
            out.entries.back().col == e.col) {
            out.entries.back().value += e.value;
        } else {
            out.entries.push_back(e);
        }
    }
    return out;
}

CsrMatrix to_csr(const CooMatrix& coo) {
    const CooMatrix canon = canonicalize(coo);
    std::vector<Index> offsets(canon.n_rows + 1, 0);
    std::vector<Index> cols;
    std::vector<double> values;
    cols.reserve(canon.entries.size());
    values.reserve(canon.entries.size());
    for (const auto& e : canon.entries) {
        ++offsets[e.row + 1];
        cols.push_back(e.col);
        values.push_back(e.value);
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return CsrMatrix(canon.n_rows, canon.n_cols, std::move(offsets), std::move(cols),
                     std::move(values));
}

CsrMatrix symmetric_from_edges(Index n, std::span<const Triplet> edges) {
    CooMatrix coo{n, n, {}};
    coo.entries.reserve(2 * edges.size());
    for (const auto& e : edges) {
        coo.entries.push_back(e);
        if (e.row != e.col) coo.entries.push_back({e.col, e.row, e.value});
    }
    return to_csr(coo);
}

// ---------------------------------------------------------------------------
// Kernels

DenseMatrix spmm(const CsrMatrix& a, const DenseMatrix& x) {
    if (a.n_cols() != x.rows()) {
        throw ShapeError("spmm: " + shape_str(a.n_rows(), a.n_cols()) + " times " +
                         shape_str(x.rows(), x.cols()));
    }
    DenseMatrix out(a.n_rows(), x.cols());
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (Index r = 0; r < a.n_rows(); ++r) {
        auto out_row = out.row(r);
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            const double w = vals[k];
            const auto x_row = x.row(cols[k]);
            for (Index c = 0; c < x.cols(); ++c) out_row[c] += w * x_row[c];
        }
    }
    return out;
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> view(const DenseMatrix& m) {
    return {m.values().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

Eigen::Map<RowMajor> view(DenseMatrix& m) {
    return {m.values().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + shape_str(a.rows(), a.cols()) + " times " +
                         shape_str(b.rows(), b.cols()));
    }
    DenseMatrix out(a.rows(), b.cols());
    if (out.empty() || a.cols() == 0) return out;
    view(out).noalias() = view(a) * view(b);
    return out;
}

void gemm_accumulate(const DenseMatrix& a, bool transpose_a, const DenseMatrix& b, bool transpose_b,
                     DenseMatrix& c) {
    const Index m = transpose_a ? a.cols() : a.rows();
    const Index k = transpose_a ? a.rows() : a.cols();
    const Index kb = transpose_b ? b.cols() : b.rows();
    const Index n = transpose_b ? b.rows() : b.cols();
    if (k != kb || c.rows() != m || c.cols() != n) {
        throw ShapeError("gemm_accumulate: incompatible shapes");
    }
    if (c.empty() || k == 0) return;
    auto out = view(c);
    if (transpose_a && transpose_b) out.noalias() += view(a).transpose() * view(b).transpose();
    else if (transpose_a) out.noalias() += view(a).transpose() * view(b);
    else if (transpose_b) out.noalias() += view(a) * view(b).transpose();
    else out.noalias() += view(a) * view(b);
}

CsrMatrix add_self_loops(const CsrMatrix& a, double w) {
    if (a.n_rows() != a.n_cols()) {
        throw ShapeError("add_self_loops: non-square " + shape_str(a.n_rows(), a.n_cols()));
    }
    const Index n = a.n_rows();
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    std::vector<Index> new_offsets(n + 1, 0);
    std::vector<Index> new_cols;
    std::vector<double> new_vals;
    new_cols.reserve(a.nnz() + n);
    new_vals.reserve(a.nnz() + n);
    for (Index r = 0; r < n; ++r) {
        bool placed = false;
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            if (!placed && cols[k] >= r) {
                if (cols[k] == r) {
                    new_cols.push_back(r);
                    new_vals.push_back(vals[k] + w);
                    placed = true;
                    continue;
                }
                new_cols.push_back(r);
                new_vals.push_back(w);
                placed = true;
            }
            new_cols.push_back(cols[k]);
            new_vals.push_back(vals[k]);
        }
        if (!placed) {
            new_cols.push_back(r);
            new_vals.push_back(w);
        }
        new_offsets[r + 1] = new_cols.size();
    }
    return CsrMatrix(n, n, std::move(new_offsets), std::move(new_cols), std::move(new_vals));
}

CsrMatrix sym_normalize(const CsrMatrix& a, double eps) {
    if (a.n_rows() != a.n_cols()) {
        throw ShapeError("sym_normalize: non-square " + shape_str(a.n_rows(), a.n_cols()));
    }
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    std::vector<double> inv_sqrt(a.n_rows());
    for (Index r = 0; r < a.n_rows(); ++r) {
        double d = 0.0;
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            if (vals[k] < 0.0) {
                throw std::domain_error("sym_normalize: negative entry at (" + std::to_string(r) +
                                        "," + std::to_string(cols[k]) + ")");
            }
            d += std::abs(vals[k]);
        }
        inv_sqrt[r] = 1.0 / std::sqrt(std::max(d, eps));
    }
    std::vector<double> out(a.nnz());
    for (Index r = 0; r < a.n_rows(); ++r) {
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            out[k] = vals[k] * inv_sqrt[r] * inv_sqrt[cols[k]];
        }
    }
    return CsrMatrix(a.pattern(), std::move(out));
}

SupportPattern support_union(std::span<const SupportPattern> patterns) {
    if (patterns.empty()) {
        throw ShapeError("support_union: no inputs");
    }
    const Index n_rows = patterns.front().n_rows();
    const Index n_cols = patterns.front().n_cols();
    for (const auto& p : patterns) {
        if (p.n_rows() != n_rows || p.n_cols() != n_cols) {
            throw ShapeError("support_union: shape mismatch " + shape_str(p.n_rows(), p.n_cols()) +
                             " vs " + shape_str(n_rows, n_cols));
        }
    }
    std::vector<Index> offsets(n_rows + 1, 0);
    std::vector<Index> cols;
    std::vector<Index> scratch;
    for (Index r = 0; r < n_rows; ++r) {
        scratch.clear();
        for (const auto& p : patterns) {
            const auto pc = p.col_indices();
            scratch.insert(scratch.end(), pc.begin() + static_cast<std::ptrdiff_t>(p.row_offsets()[r]),
                           pc.begin() + static_cast<std::ptrdiff_t>(p.row_offsets()[r + 1]));
        }
        std::sort(scratch.begin(), scratch.end());
        scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
        cols.insert(cols.end(), scratch.begin(), scratch.end());
        offsets[r + 1] = cols.size();
    }
    return SupportPattern(n_rows, n_cols, std::move(offsets), std::move(cols));
}

SupportPattern support_union(std::span<const CsrMatrix> mats) {
    std::vector<SupportPattern> patterns;
    patterns.reserve(mats.size());
    for (const auto& m : mats) patterns.push_back(m.pattern());
    return support_union(std::span<const SupportPattern>(patterns));
}

std::vector<Index> embed_positions(const SupportPattern& from, const SupportPattern& to) {
    if (from.n_rows() != to.n_rows() || from.n_cols() != to.n_cols()) {
        throw ShapeError("embed_positions: shape mismatch");
    }
    std::vector<Index> map(from.nnz());
    const auto f_off = from.row_offsets();
    const auto f_cols = from.col_indices();
    const auto t_off = to.row_offsets();
    const auto t_cols = to.col_indices();
    for (Index r = 0; r < from.n_rows(); ++r) {
        Index t = t_off[r];
        for (Index k = f_off[r]; k < f_off[r + 1]; ++k) {
            while (t < t_off[r + 1] && t_cols[t] < f_cols[k]) ++t;
            if (t == t_off[r + 1] || t_cols[t] != f_cols[k]) {
                throw StructuralError("support escapes pattern at (" + std::to_string(r) + "," +
                                      std::to_string(f_cols[k]) + ")");
            }
            map[k] = t;
        }
    }
    return map;
}

std::vector<double> values_on_pattern(const SupportPattern& pattern, const CsrMatrix& m) {
    const auto map = embed_positions(m.pattern(), pattern);
    std::vector<double> out(pattern.nnz(), 0.0);
    const auto vals = m.values();
    for (Index k = 0; k < map.size(); ++k) out[map[k]] = vals[k];
    return out;
}

CsrMatrix weighted_sum_on_support(const SupportPattern& pattern, std::span<const CsrMatrix> mats,
                                  std::span<const double> betas) {
    if (mats.size() != betas.size()) {
        throw ShapeError("weighted_sum_on_support: " + std::to_string(mats.size()) +
                         " matrices but " + std::to_string(betas.size()) + " betas");
    }
    std::vector<double> out(pattern.nnz(), 0.0);
    for (Index i = 0; i < mats.size(); ++i) {
        const auto map = embed_positions(mats[i].pattern(), pattern);
        const auto vals = mats[i].values();
        for (Index k = 0; k < map.size(); ++k) out[map[k]] += betas[i] * vals[k];
    }
    return CsrMatrix(pattern, std::move(out));
}

std::vector<Index> transpose_positions(const SupportPattern& pattern) {
    if (!pattern.square()) throw ShapeError("transpose_positions: non-square pattern");
    std::vector<Index> out(pattern.nnz());
    const auto offsets = pattern.row_offsets();
    const auto cols = pattern.col_indices();
    for (Index r = 0; r < pattern.n_rows(); ++r) {
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            const auto t = pattern.find(cols[k], r);
            if (!t) {
                throw StructuralError("pattern not symmetric at (" + std::to_string(r) + "," +
                                      std::to_string(cols[k]) + ")");
            }
            out[k] = *t;
        }
    }
    return out;
}

}  // namespace pdn
