#include "pdn/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pdn {

namespace {

// Independent RNG streams for the generator steps.
enum Stream : std::uint64_t { kCorrelation = 1, kFeatures = 2, kLabels = 3, kEdges = 4, kEdgeFeatures = 5 };

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void SyntheticConfig::validate() const {
    if (C < 2) throw std::invalid_argument("synthetic config: C must be >= 2");
    if (n < 1) throw std::invalid_argument("synthetic config: n must be >= 1");
    if (!is_probability(P) || !is_probability(Q)) {
        throw std::invalid_argument("synthetic config: P and Q must lie in [0, 1]");
    }
    if (F < 1 || D < 1) throw std::invalid_argument("synthetic config: F and D must be >= 1");
    if (!(sigma_F >= 0.0) || !(sigma_D >= 0.0)) {
        throw std::invalid_argument("synthetic config: standard deviations must be >= 0");
    }
}

Index SbmEdges::intra_count() const {
    return static_cast<Index>(std::count(inter.begin(), inter.end(), std::uint8_t{0}));
}

CsrMatrix SyntheticDataset::graph() const {
    std::vector<Triplet> t;
    t.reserve(edges.edges.size());
    for (const auto& e : edges.edges) t.push_back({e.u, e.v, 1.0});
    return symmetric_from_edges(node_count(), t);
}

GraphData SyntheticDataset::to_graph_data() const {
    return make_graph_data(edges.edges, node_features, edge_features, labels, num_classes);
}

bool SyntheticDataset::operator==(const SyntheticDataset& o) const {
    if (edges.edges.size() != o.edges.edges.size()) return false;
    for (Index i = 0; i < edges.edges.size(); ++i) {
        if (edges.edges[i].u != o.edges.edges[i].u || edges.edges[i].v != o.edges.edges[i].v) return false;
    }
    return num_classes == o.num_classes && labels == o.labels && edges.inter == o.edges.inter &&
           node_features == o.node_features && edge_features == o.edge_features;
}

DenseMatrix random_correlation_matrix(Index F, Rng& rng) {
    if (F < 1) throw std::invalid_argument("random_correlation_matrix: F must be >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> eig(F);
    double total = 0.0;
    while (true) {
        total = 0.0;
        for (auto& e : eig) {
            e = std::abs(normal(rng));
            total += e;
        }
        if (total > 0.0 && std::all_of(eig.begin(), eig.end(), [](double e) { return e > 0.0; })) break;
    }
    for (auto& e : eig) e *= static_cast<double>(F) / total;

    // Orthonormal basis by modified Gram-Schmidt on the columns of a Gaussian
    // matrix; a rank-deficient draw is redrawn.
    DenseMatrix q(F, F);
    while (true) {
        for (auto& v : q.values()) v = normal(rng);
        bool ok = true;
        for (Index j = 0; j < F && ok; ++j) {
            for (Index i = 0; i < j; ++i) {
                double dot = 0.0;
                for (Index r = 0; r < F; ++r) dot += q(r, i) * q(r, j);
                for (Index r = 0; r < F; ++r) q(r, j) -= dot * q(r, i);
            }
            double norm = 0.0;
            for (Index r = 0; r < F; ++r) norm += q(r, j) * q(r, j);
            norm = std::sqrt(norm);
            if (norm < 1e-10) {
                ok = false;
                break;
            }
            for (Index r = 0; r < F; ++r) q(r, j) /= norm;
        }
        if (ok) break;
    }

    DenseMatrix sigma(F, F);
    for (Index i = 0; i < F; ++i) {
        for (Index j = 0; j <= i; ++j) {
            double s = 0.0;
            for (Index k = 0; k < F; ++k) s += q(i, k) * eig[k] * q(j, k);
            sigma(i, j) = s;
            sigma(j, i) = s;
        }
    }
    std::vector<double> scale(F);
    for (Index i = 0; i < F; ++i) scale[i] = 1.0 / std::sqrt(sigma(i, i));
    for (Index i = 0; i < F; ++i) {
        for (Index j = 0; j < F; ++j) sigma(i, j) *= scale[i] * scale[j];
    }
    for (Index i = 0; i < F; ++i) {
        sigma(i, i) = 1.0;
        for (Index j = 0; j < i; ++j) sigma(j, i) = sigma(i, j);
    }
    return sigma;
}

DenseMatrix cholesky(const DenseMatrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("cholesky: matrix must be square");
    const Index n = a.rows();
    DenseMatrix l(n, n);
    for (Index j = 0; j < n; ++j) {
        double d = a(j, j);
        for (Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) {
            throw std::domain_error("cholesky: matrix is not positive definite (pivot " + std::to_string(j) + ")");
        }
        l(j, j) = std::sqrt(d);
        for (Index i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

DenseMatrix sample_correlated_features(Index n_total, const DenseMatrix& corr, Rng& rng) {
    const DenseMatrix l = cholesky(corr);
    const Index f = corr.rows();
    std::normal_distribution<double> normal(0.0, 1.0);
    DenseMatrix x(n_total, f);
    std::vector<double> z(f);
    for (Index r = 0; r < n_total; ++r) {
        for (auto& v : z) v = normal(rng);
        for (Index i = 0; i < f; ++i) {
            double s = 0.0;
            for (Index k = 0; k <= i; ++k) s += l(i, k) * z[k];
            x(r, i) = s;
        }
    }
    return x;
}

std::vector<int> quantile_bins(std::span<const double> target, int C) {
    if (C < 2) throw std::invalid_argument("quantile_bins: C must be >= 2");
    const Index n = target.size();
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return target[a] < target[b]; });
    std::vector<int> labels(n);
    for (Index rank = 0; rank < n; ++rank) {
        labels[order[rank]] = static_cast<int>(rank * static_cast<Index>(C) / n);
    }
    return labels;
}

LabelDraw make_labels(const DenseMatrix& x, std::span<const double> w, double sigma_F, int C, Rng& rng) {
    if (w.size() != x.cols()) throw ShapeError("make_labels: weight length != feature dim");
    std::normal_distribution<double> normal(0.0, 1.0);
    LabelDraw out;
    out.target.resize(x.rows());
    for (Index r = 0; r < x.rows(); ++r) {
        double s = 0.0;
        for (Index c = 0; c < x.cols(); ++c) s += x(r, c) * w[c];
        out.target[r] = s + sigma_F * normal(rng);
    }
    out.labels = quantile_bins(out.target, C);
    return out;
}

SbmEdges sample_sbm_edges(std::span<const int> labels, double P, double Q, Rng& rng) {
    if (!is_probability(P) || !is_probability(Q)) {
        throw std::invalid_argument("sample_sbm_edges: P and Q must lie in [0, 1]");
    }
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    SbmEdges out;
    const Index n = labels.size();
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const bool same = labels[i] == labels[j];
            if (uniform(rng) < (same ? P : Q)) {
                out.edges.push_back({i, j});
                out.inter.push_back(same ? 0 : 1);
            }
        }
    }
    return out;
}

DenseMatrix sample_edge_features(const SbmEdges& edges, Index D, double sigma_D, Rng& rng) {
    if (edges.inter.size() != edges.edges.size()) throw ShapeError("sample_edge_features: mask length != edge count");
    std::normal_distribution<double> normal(0.0, 1.0);
    DenseMatrix out(edges.edges.size(), D);
    for (Index e = 0; e < edges.edges.size(); ++e) {
        const double s = edges.inter[e] ? sigma_D : 1.0;
        for (Index d = 0; d < D; ++d) out(e, d) = s * normal(rng);
    }
    return out;
}

SyntheticDataset generate(const SyntheticConfig& config) {
    config.validate();
    SyntheticDataset ds;
    ds.config = config;
    ds.num_classes = config.C;

    Rng corr_rng = make_rng(config.seed, kCorrelation);
    const DenseMatrix corr = random_correlation_matrix(config.F, corr_rng);

    Rng feat_rng = make_rng(config.seed, kFeatures);
    ds.node_features = sample_correlated_features(config.node_count(), corr, feat_rng);

    Rng label_rng = make_rng(config.seed, kLabels);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> w(config.F);
    for (auto& v : w) v = normal(label_rng);
    ds.labels = make_labels(ds.node_features, w, config.sigma_F, config.C, label_rng).labels;

    Rng edge_rng = make_rng(config.seed, kEdges);
    ds.edges = sample_sbm_edges(ds.labels, config.P, config.Q, edge_rng);

    Rng ef_rng = make_rng(config.seed, kEdgeFeatures);
    ds.edge_features = sample_edge_features(ds.edges, config.D, config.sigma_D, ef_rng);
    return ds;
}

std::vector<UndirectedEdge> watts_strogatz_edges(Index n, Index k, double p, Rng& rng) {
    if (k % 2 != 0) throw std::invalid_argument("watts_strogatz: k must be even");
    if (k >= n) throw std::invalid_argument("watts_strogatz: k must be < n");
    if (!is_probability(p)) throw std::invalid_argument("watts_strogatz: p must lie in [0, 1]");

    std::vector<std::vector<Index>> adj(n);
    const auto has = [&](Index a, Index b) { return std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end(); };
    const auto drop = [&](Index a, Index b) { adj[a].erase(std::find(adj[a].begin(), adj[a].end(), b)); };
    for (Index u = 0; u < n; ++u) {
        for (Index j = 1; j <= k / 2; ++j) {
            const Index v = (u + j) % n;
            adj[u].push_back(v);
            adj[v].push_back(u);
        }
    }

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (Index j = 1; j <= k / 2; ++j) {
        for (Index u = 0; u < n; ++u) {
            const Index v = (u + j) % n;
            if (uniform(rng) >= p) continue;
            if (!has(u, v) || adj[u].size() >= n - 1) continue;
            Index w = pick(rng);
            while (w == u || has(u, w)) w = pick(rng);
            drop(u, v);
            drop(v, u);
            adj[u].push_back(w);
            adj[w].push_back(u);
        }
    }

    std::vector<UndirectedEdge> edges;
    edges.reserve(n * k / 2);
    for (Index u = 0; u < n; ++u) {
        std::sort(adj[u].begin(), adj[u].end());
        for (const Index v : adj[u]) {
            if (v > u) edges.push_back({u, v});
        }
    }
    return edges;
}

CsrMatrix watts_strogatz(Index n, Index k, double p, Rng& rng) {
    const auto edges = watts_strogatz_edges(n, k, p, rng);
    std::vector<Triplet> t;
    t.reserve(edges.size());
    for (const auto& e : edges) t.push_back({e.u, e.v, 1.0});
    return symmetric_from_edges(n, t);
}

}  // namespace pdn
