#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pdn/layers.hpp"

namespace pdn {

/// Node-classification input: one undirected graph, node features, and edge
/// features stored once per undirected edge.
struct GraphData {
    std::shared_ptr<const SupportPattern> pattern;  // symmetric, no self-loops
    DenseMatrix node_features;                      // n x F
    DenseMatrix edge_features;                      // |E| x D, one row per undirected edge
    std::vector<Index> edge_row;                    // pattern position -> edge_features row
    std::vector<int> labels;
    int num_classes = 0;

    Index node_count() const { return node_features.rows(); }
    /// Edge features expanded to pattern storage order.
    DenseMatrix pattern_edge_features() const;
};

struct UndirectedEdge {
    Index u;
    Index v;
};

/// Builds GraphData from an undirected edge list (u != v, no duplicates);
/// row i of `edge_features` belongs to edges[i].
GraphData make_graph_data(std::span<const UndirectedEdge> edges, DenseMatrix node_features,
                          DenseMatrix edge_features, std::vector<int> labels, int num_classes);

enum class ModelKind { gcn, pdn, pdn_edgeconv, pdn_multiscale, pdn_linear };

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
    ModelKind kind = ModelKind::pdn;
    std::vector<Index> pathfinder_hidden{16};
    Activation pathfinder_output = Activation::sigmoid;
    Index gcn_hidden = 32;
    bool self_loops = true;
    Index hops = 2;  // multi-scale powers, or edge-conv hop graphs
    Index edgeconv_hidden = 16;
    Activation edgeconv_embedding = Activation::relu;
    Activation edgeconv_score = Activation::sigmoid;
    Activation edgeconv_combine = Activation::relu;
};

struct ModelDims {
    Index node_features = 0;
    Index edge_features = 0;
    Index classes = 0;

    static ModelDims of(const GraphData& data);
};

class Model {
public:
    Model(ModelSpec spec, ModelDims dims) : spec_(std::move(spec)), dims_(dims) {}
    virtual ~Model() = default;

    virtual Value forward(Tape& tape, const GraphData& data, bool train, Rng& rng) = 0;
    virtual std::vector<Parameter*> parameters() = 0;
    /// Interpretable mixing weights (multi-scale P or linear attention); empty
    /// for models without one.
    virtual std::vector<double> attention() const { return {}; }
    virtual void set_dropout(double p) = 0;

    const ModelSpec& spec() const noexcept { return spec_; }
    const ModelDims& dims() const noexcept { return dims_; }

private:
    ModelSpec spec_;
    ModelDims dims_;
};

std::unique_ptr<Model> make_model(const ModelSpec& spec, const ModelDims& dims, Rng& rng);

/// Support of A^2 without the diagonal.
SupportPattern two_hop_pattern(const SupportPattern& adjacency);

}  // namespace pdn
