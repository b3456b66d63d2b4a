#pragma once

#include <array>
#include <ostream>
#include <string_view>

#include "pdn/sparse.hpp"

namespace pdn {

/// Neighbourhood-overlap (tie strength) metrics of an edge (u, v).
enum class SimilarityMetric {
    common_neighbors,
    jaccard,
    salton_cosine,
    sorensen,
    hub_promoted,   // minimal overlap: CN / min(du, dv)
    hub_depressed,  // maximal overlap: CN / max(du, dv)
    association_strength,
    degree_product,
    adamic_adar,
    resource_allocation,
};

inline constexpr std::array<SimilarityMetric, 10> kAllMetrics{
    SimilarityMetric::common_neighbors, SimilarityMetric::jaccard,
    SimilarityMetric::salton_cosine,    SimilarityMetric::sorensen,
    SimilarityMetric::hub_promoted,     SimilarityMetric::hub_depressed,
    SimilarityMetric::association_strength, SimilarityMetric::degree_product,
    SimilarityMetric::adamic_adar,      SimilarityMetric::resource_allocation,
};

std::string_view to_string(SimilarityMetric m);

/// Metric value for the pair (u, v) of a simple undirected graph. Zero
/// denominators yield 0.
double similarity(SimilarityMetric metric, const CsrMatrix& graph, Index u, Index v);

enum class FeatureScaling { none, standardize, min_max };

/// All metrics for every stored entry of `graph` (rows in storage order).
struct EdgeFeatureMatrix {
    SupportPattern pattern;
    DenseMatrix values;  // nnz x kAllMetrics.size()

    /// One row per undirected edge (u < v), in pattern order.
    void write_csv(std::ostream& out) const;
};

/// Throws std::invalid_argument for directed graphs, self-loops, or
/// non-unit weights.
EdgeFeatureMatrix feature_matrix(const CsrMatrix& graph, FeatureScaling scaling = FeatureScaling::standardize);

/// Per-column scaling over rows; constant columns map to 0.
void scale_columns(DenseMatrix& m, FeatureScaling scaling);

}  // namespace pdn
