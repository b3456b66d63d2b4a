#pragma once

// Synthetic multiplex benchmark: correlated node features, quantile-binned
// labels, a stochastic block model graph, and edge features whose spread
// depends on whether an edge joins two classes.

#include <cstdint>
#include <span>
#include <vector>

#include "pdn/models.hpp"
#include "pdn/random.hpp"
#include "pdn/sparse.hpp"

namespace pdn {

struct SyntheticConfig {
    int C = 3;          // classes
    Index n = 500;      // nodes per class
    double P = 0.01;    // intra-class edge probability
    double Q = 0.005;   // inter-class edge probability
    Index F = 32;       // node feature dim
    Index D = 32;       // edge feature dim
    double sigma_F = 5.0;  // label noise std
    double sigma_D = 2.0;  // inter-class edge feature std
    std::uint64_t seed = 0;

    Index node_count() const { return static_cast<Index>(C) * n; }
    /// Throws std::invalid_argument on an unusable configuration.
    void validate() const;
};

/// Edge list of an undirected simple graph plus the intra/inter flag of
/// every edge (1 = inter-class).
struct SbmEdges {
    std::vector<UndirectedEdge> edges;
    std::vector<std::uint8_t> inter;

    Index intra_count() const;
    Index inter_count() const { return edges.size() - intra_count(); }
};

struct SyntheticDataset {
    SyntheticConfig config;
    DenseMatrix node_features;  // N x F
    DenseMatrix edge_features;  // |E| x D, one row per undirected edge
    std::vector<int> labels;
    int num_classes = 0;
    SbmEdges edges;

    Index node_count() const { return node_features.rows(); }
    /// Unit-weight symmetric adjacency.
    CsrMatrix graph() const;
    GraphData to_graph_data() const;

    bool operator==(const SyntheticDataset& other) const;
};

DenseMatrix random_correlation_matrix(Index F, Rng& rng);

/// Lower-triangular L with L L^T = a. Throws std::domain_error when a is not
/// symmetric positive definite.
DenseMatrix cholesky(const DenseMatrix& a);

/// Rows i.i.d. N(0, corr).
DenseMatrix sample_correlated_features(Index n_total, const DenseMatrix& corr, Rng& rng);

struct LabelDraw {
    std::vector<int> labels;
    std::vector<double> target;  // continuous target before binning
};

/// Class of rank r (stable ascending order of target) is floor(r * C / N).
std::vector<int> quantile_bins(std::span<const double> target, int C);

/// target = X w + N(0, sigma_F^2), then quantile binning into C classes.
LabelDraw make_labels(const DenseMatrix& x, std::span<const double> w, double sigma_F, int C, Rng& rng);

/// Every unordered pair is drawn once: probability P within a class, Q across.
SbmEdges sample_sbm_edges(std::span<const int> labels, double P, double Q, Rng& rng);

/// Intra-class rows ~ N(0, 1), inter-class rows ~ N(0, sigma_D^2). The number
/// of draws does not depend on sigma_D.
DenseMatrix sample_edge_features(const SbmEdges& edges, Index D, double sigma_D, Rng& rng);

SyntheticDataset generate(const SyntheticConfig& config);

/// Ring lattice with k/2 neighbours per side, each lattice edge rewired with
/// probability p to a uniform target that is neither the source nor one of
/// its current neighbours.
std::vector<UndirectedEdge> watts_strogatz_edges(Index n, Index k, double p, Rng& rng);
CsrMatrix watts_strogatz(Index n, Index k, double p, Rng& rng);

}  // namespace pdn
