#include "pdn/edge_features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pdn/io.hpp"

namespace pdn {

std::string_view to_string(SimilarityMetric m) {
    switch (m) {
        case SimilarityMetric::common_neighbors: return "common_neighbors";
        case SimilarityMetric::jaccard: return "jaccard";
        case SimilarityMetric::salton_cosine: return "salton_cosine";
        case SimilarityMetric::sorensen: return "sorensen";
        case SimilarityMetric::hub_promoted: return "hub_promoted";
        case SimilarityMetric::hub_depressed: return "hub_depressed";
        case SimilarityMetric::association_strength: return "association_strength";
        case SimilarityMetric::degree_product: return "degree_product";
        case SimilarityMetric::adamic_adar: return "adamic_adar";
        case SimilarityMetric::resource_allocation: return "resource_allocation";
    }
    return "unknown";
}

namespace {

std::span<const Index> neighbors(const CsrMatrix& g, Index u) {
    const auto offsets = g.row_offsets();
    return g.col_indices().subspan(offsets[u], offsets[u + 1] - offsets[u]);
}

Index degree(const CsrMatrix& g, Index u) { return g.row_offsets()[u + 1] - g.row_offsets()[u]; }

struct Overlap {
    double cn = 0.0;
    double adamic_adar = 0.0;
    double resource_allocation = 0.0;
};

Overlap overlap(const CsrMatrix& g, Index u, Index v) {
    const auto nu = neighbors(g, u);
    const auto nv = neighbors(g, v);
    Overlap o;
    Index i = 0;
    Index j = 0;
    while (i < nu.size() && j < nv.size()) {
        if (nu[i] < nv[j]) {
            ++i;
        } else if (nv[j] < nu[i]) {
            ++j;
        } else {
            const auto dw = static_cast<double>(degree(g, nu[i]));
            o.cn += 1.0;
            if (dw > 1.0) o.adamic_adar += 1.0 / std::log(dw);
            o.resource_allocation += 1.0 / dw;
            ++i;
            ++j;
        }
    }
    return o;
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double metric_value(SimilarityMetric metric, const Overlap& o, double du, double dv) {
    switch (metric) {
        case SimilarityMetric::common_neighbors: return o.cn;
        case SimilarityMetric::jaccard: return ratio(o.cn, du + dv - o.cn);
        case SimilarityMetric::salton_cosine: return ratio(o.cn, std::sqrt(du * dv));
        case SimilarityMetric::sorensen: return ratio(2.0 * o.cn, du + dv);
        case SimilarityMetric::hub_promoted: return ratio(o.cn, std::min(du, dv));
        case SimilarityMetric::hub_depressed: return ratio(o.cn, std::max(du, dv));
        case SimilarityMetric::association_strength: return ratio(o.cn, du * dv);
        case SimilarityMetric::degree_product: return du * dv;
        case SimilarityMetric::adamic_adar: return o.adamic_adar;
        case SimilarityMetric::resource_allocation: return o.resource_allocation;
    }
    return 0.0;
}

void check_simple_undirected(const CsrMatrix& g) {
    if (g.n_rows() != g.n_cols()) throw std::invalid_argument("edge features: graph must be square");
    for (const double v : g.values()) {
        if (v != 1.0) throw std::invalid_argument("edge features: graph must be unweighted (multigraph?)");
    }
    if (!g.is_symmetric()) throw std::invalid_argument("edge features: graph must be undirected");
    for (Index u = 0; u < g.n_rows(); ++u) {
        if (g.pattern().find(u, u)) throw std::invalid_argument("edge features: self-loop at node " + std::to_string(u));
    }
}

}  // namespace

double similarity(SimilarityMetric metric, const CsrMatrix& graph, Index u, Index v) {
    if (u == v) throw std::invalid_argument("similarity: u == v");
    if (u >= graph.n_rows() || v >= graph.n_rows()) throw std::out_of_range("similarity: node out of range");
    if (!graph.pattern().find(u, v)) {
        throw std::invalid_argument("similarity: (" + std::to_string(u) + "," + std::to_string(v) +
                                    ") is not an edge");
    }
    return metric_value(metric, overlap(graph, u, v), static_cast<double>(degree(graph, u)),
                        static_cast<double>(degree(graph, v)));
}

void scale_columns(DenseMatrix& m, FeatureScaling scaling) {
    if (scaling == FeatureScaling::none || m.rows() == 0) return;
    const auto n = static_cast<double>(m.rows());
    for (Index c = 0; c < m.cols(); ++c) {
        if (scaling == FeatureScaling::standardize) {
            double mean = 0.0;
            for (Index r = 0; r < m.rows(); ++r) mean += m(r, c);
            mean /= n;
            double var = 0.0;
            for (Index r = 0; r < m.rows(); ++r) var += (m(r, c) - mean) * (m(r, c) - mean);
            var /= n;
            const double sd = std::sqrt(var);
            for (Index r = 0; r < m.rows(); ++r) m(r, c) = sd > 0.0 ? (m(r, c) - mean) / sd : 0.0;
        } else {
            double lo = m(0, c);
            double hi = m(0, c);
            for (Index r = 0; r < m.rows(); ++r) {
                lo = std::min(lo, m(r, c));
                hi = std::max(hi, m(r, c));
            }
            for (Index r = 0; r < m.rows(); ++r) m(r, c) = hi > lo ? (m(r, c) - lo) / (hi - lo) : 0.0;
        }
    }
}

EdgeFeatureMatrix feature_matrix(const CsrMatrix& graph, FeatureScaling scaling) {
    check_simple_undirected(graph);
    EdgeFeatureMatrix out{graph.pattern(), DenseMatrix(graph.nnz(), kAllMetrics.size())};
    const auto offsets = graph.row_offsets();
    const auto cols = graph.col_indices();
    for (Index u = 0; u < graph.n_rows(); ++u) {
        const auto du = static_cast<double>(degree(graph, u));
        for (Index k = offsets[u]; k < offsets[u + 1]; ++k) {
            const Index v = cols[k];
            const Overlap o = overlap(graph, u, v);
            const auto dv = static_cast<double>(degree(graph, v));
            for (Index m = 0; m < kAllMetrics.size(); ++m) {
                out.values(k, m) = metric_value(kAllMetrics[m], o, du, dv);
            }
        }
    }
    scale_columns(out.values, scaling);
    return out;
}

void EdgeFeatureMatrix::write_csv(std::ostream& out) const {
    out << "u,v";
    for (const auto m : kAllMetrics) out << ',' << to_string(m);
    out << '\n';
    const auto offsets = pattern.row_offsets();
    const auto cols = pattern.col_indices();
    for (Index u = 0; u < pattern.n_rows(); ++u) {
        for (Index k = offsets[u]; k < offsets[u + 1]; ++k) {
            if (cols[k] <= u) continue;
            out << u << ',' << cols[k];
            for (Index m = 0; m < values.cols(); ++m) out << ',' << format_double(values(k, m));
            out << '\n';
        }
    }
}

}  // namespace pdn
