#include "pdn/models.hpp"

#include <algorithm>
#include <stdexcept>

namespace pdn {

// ---------------------------------------------------------------------------
// GraphData

DenseMatrix GraphData::pattern_edge_features() const {
    DenseMatrix out(edge_row.size(), edge_features.cols());
    for (Index k = 0; k < edge_row.size(); ++k) {
        const auto src = edge_features.row(edge_row[k]);
        std::copy(src.begin(), src.end(), out.row(k).begin());
    }
    return out;
}

GraphData make_graph_data(std::span<const UndirectedEdge> edges, DenseMatrix node_features,
                          DenseMatrix edge_features, std::vector<int> labels, int num_classes) {
    const Index n = node_features.rows();
    if (labels.size() != n) throw ShapeError("make_graph_data: labels length != node count");
    if (edge_features.rows() != edges.size()) {
        throw ShapeError("make_graph_data: edge feature rows != edge count");
    }
    // value = edge id + 1 so the symmetric build carries the row index along
    std::vector<Triplet> triplets;
    triplets.reserve(edges.size());
    for (Index i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        if (e.u >= n || e.v >= n) throw StructuralError("make_graph_data: edge endpoint out of range");
        if (e.u == e.v) throw StructuralError("make_graph_data: self-loop in edge list");
        triplets.push_back({e.u, e.v, static_cast<double>(i + 1)});
    }
    const CsrMatrix ids = symmetric_from_edges(n, triplets);
    GraphData data;
    data.edge_row.resize(ids.nnz());
    const auto vals = ids.values();
    for (Index k = 0; k < ids.nnz(); ++k) {
        const auto id = static_cast<Index>(vals[k]);
        if (static_cast<double>(id) != vals[k] || id == 0 || id > edges.size()) {
            throw StructuralError("make_graph_data: duplicate undirected edge");
        }
        data.edge_row[k] = id - 1;
    }
    if (ids.nnz() != 2 * edges.size()) throw StructuralError("make_graph_data: duplicate undirected edge");
    data.pattern = std::make_shared<const SupportPattern>(ids.pattern());
    data.node_features = std::move(node_features);
    data.edge_features = std::move(edge_features);
    data.labels = std::move(labels);
    data.num_classes = num_classes;
    for (const int l : data.labels) {
        if (l < 0 || l >= num_classes) throw std::out_of_range("make_graph_data: label out of range");
    }
    return data;
}

ModelDims ModelDims::of(const GraphData& data) {
    return {data.node_features.cols(), data.edge_features.cols(),
            static_cast<Index>(data.num_classes)};
}

std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::gcn: return "gcn";
        case ModelKind::pdn: return "pdn";
        case ModelKind::pdn_edgeconv: return "pdn_edgeconv";
        case ModelKind::pdn_multiscale: return "pdn_multiscale";
        case ModelKind::pdn_linear: return "pdn_linear";
    }
    return "gcn";
}

ModelKind parse_model_kind(std::string_view name) {
    for (const auto k : {ModelKind::gcn, ModelKind::pdn, ModelKind::pdn_edgeconv,
                         ModelKind::pdn_multiscale, ModelKind::pdn_linear}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

SupportPattern two_hop_pattern(const SupportPattern& a) {
    if (!a.square()) throw ShapeError("two_hop_pattern: non-square adjacency");
    const Index n = a.n_rows();
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    std::vector<Index> out_offsets(n + 1, 0);
    std::vector<Index> out_cols;
    std::vector<Index> marker(n, n);
    std::vector<Index> row;
    for (Index r = 0; r < n; ++r) {
        row.clear();
        for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
            const Index mid = cols[k];
            for (Index j = offsets[mid]; j < offsets[mid + 1]; ++j) {
                const Index c = cols[j];
                if (c == r || marker[c] == r) continue;
                marker[c] = r;
                row.push_back(c);
            }
        }
        std::sort(row.begin(), row.end());
        out_cols.insert(out_cols.end(), row.begin(), row.end());
        out_offsets[r + 1] = out_cols.size();
    }
    return SupportPattern(n, n, std::move(out_offsets), std::move(out_cols));
}

namespace {

void check_data(const GraphData& data, const ModelDims& dims) {
    if (data.node_features.cols() != dims.node_features) {
        throw ShapeError("model: node feature width " + std::to_string(data.node_features.cols()) +
                         " but model expects " + std::to_string(dims.node_features));
    }
    if (static_cast<Index>(data.num_classes) != dims.classes) {
        throw ShapeError("model: class count does not match the model");
    }
}

Value unique_edge_weights_to_pattern(const Value& per_edge, const GraphData& data) {
    return ad::gather_rows(per_edge, data.edge_row);
}

// Fixed unit edge weights; the same head as every PDN.
class GcnModel final : public Model {
public:
    GcnModel(const ModelSpec& spec, const ModelDims& dims, Rng& rng)
        : Model(spec, dims), head_(dims.node_features, spec.gcn_hidden, dims.classes, 0.5, rng) {
        head_.self_loops = spec.self_loops;
    }

    Value forward(Tape& tape, const GraphData& data, bool train, Rng& rng) override {
        check_data(data, dims());
        const EdgeVector unit{data.pattern, tape.constant(DenseMatrix(data.pattern->nnz(), 1, 1.0))};
        return head_.forward(tape, unit, tape.constant_view(data.node_features), train, rng);
    }
    std::vector<Parameter*> parameters() override { return head_.parameters(); }
    void set_dropout(double p) override { head_.dropout = p; }

private:
    GcnHead head_;
};

// Per-edge MLP over edge features feeding the GCN head.
class PdnModel final : public Model {
public:
    PdnModel(const ModelSpec& spec, const ModelDims& dims, Rng& rng)
        : Model(spec, dims),
          mlp_(dims.edge_features, spec.pathfinder_hidden, spec.pathfinder_output, rng),
          head_(dims.node_features, spec.gcn_hidden, dims.classes, 0.5, rng) {
        head_.self_loops = spec.self_loops;
    }

    Value forward(Tape& tape, const GraphData& data, bool train, Rng& rng) override {
        check_data(data, dims());
        const Value per_edge = mlp_.forward(tape, tape.constant_view(data.edge_features));
        const EdgeVector learned{data.pattern, unique_edge_weights_to_pattern(per_edge, data)};
        return head_.forward(tape, learned, tape.constant_view(data.node_features), train, rng);
    }
    std::vector<Parameter*> parameters() override {
        auto out = mlp_.parameters();
        for (auto* p : head_.parameters()) out.push_back(p);
        return out;
    }
    void set_dropout(double p) override { head_.dropout = p; }

private:
    PathfinderMlp mlp_;
    GcnHead head_;
};

// Softmax attention over (nonnegative) edge features.
class LinearPdnModel final : public Model {
public:
    LinearPdnModel(const ModelSpec& spec, const ModelDims& dims, Rng& rng)
        : Model(spec, dims),
          logits_("linear.logits", DenseMatrix(dims.edge_features, 1)),
          head_(dims.node_features, spec.gcn_hidden, dims.classes, 0.5, rng) {
        head_.self_loops = spec.self_loops;
    }

    Value forward(Tape& tape, const GraphData& data, bool train, Rng& rng) override {
        check_data(data, dims());
        const Value attention = ad::softmax_vector(tape.parameter(logits_));
        const Value per_edge = ad::matmul(tape.constant_view(data.edge_features), attention);
        const EdgeVector learned{data.pattern, unique_edge_weights_to_pattern(per_edge, data)};
        return head_.forward(tape, learned, tape.constant_view(data.node_features), train, rng);
    }
    std::vector<Parameter*> parameters() override {
        return {&logits_, &head_.w1(), &head_.w2()};
    }
    std::vector<double> attention() const override {
        MultiScaleMixer tmp(logits_.value.rows());
        tmp.logits.value = logits_.value;
        return tmp.weights();
    }
    void set_dropout(double p) override { head_.dropout = p; }

private:
    Parameter logits_;
    GcnHead head_;
};

// Learned similarities from node embeddings on the 1..hops hop graphs.
class EdgeConvModel final : public Model {
public:
    EdgeConvModel(const ModelSpec& spec, const ModelDims& dims, Rng& rng)
        : Model(spec, dims),
          betas_("edgeconv.betas", DenseMatrix(spec.hops, 1, 1.0)),
          head_(dims.node_features, spec.gcn_hidden, dims.classes, 0.5, rng) {
        if (spec.hops < 1 || spec.hops > 2) {
            throw std::invalid_argument("pdn_edgeconv supports 1 or 2 hop graphs");
        }
        head_.self_loops = spec.self_loops;
        for (Index i = 0; i < spec.hops; ++i) {
            const std::string tag = "edgeconv." + std::to_string(i);
            modalities_.push_back(
                {Parameter(tag + ".weight", glorot_uniform(dims.node_features, spec.edgeconv_hidden, rng)),
                 Parameter(tag + ".bias", DenseMatrix(1, spec.edgeconv_hidden)), spec.edgeconv_embedding,
                 spec.edgeconv_score});
        }
    }

    Value forward(Tape& tape, const GraphData& data, bool train, Rng& rng) override {
        check_data(data, dims());
        prepare(data);
        const Value x = tape.constant_view(data.node_features);
        std::vector<EdgeVector> graphs;
        for (Index i = 0; i < modalities_.size(); ++i) {
            EdgeVector scores = edgeconv_scores(tape, hop_patterns_[i], x, modalities_[i]);
            graphs.push_back(ad::scatter_to_pattern(scores, union_, embeds_[i]));
        }
        const EdgeVector learned =
            edgeconv_combine(tape, graphs, tape.parameter(betas_), spec().edgeconv_combine);
        return head_.forward(tape, learned, x, train, rng);
    }
    std::vector<Parameter*> parameters() override {
        std::vector<Parameter*> out;
        for (auto& m : modalities_) {
            out.push_back(&m.weight);
            out.push_back(&m.bias);
        }
        out.push_back(&betas_);
        for (auto* p : head_.parameters()) out.push_back(p);
        return out;
    }
    void set_dropout(double p) override { head_.dropout = p; }

private:
    void prepare(const GraphData& data) {
        if (prepared_for_ == data.pattern) return;
        hop_patterns_.clear();
        embeds_.clear();
        hop_patterns_.push_back(data.pattern);
        if (modalities_.size() > 1) {
            hop_patterns_.push_back(std::make_shared<const SupportPattern>(two_hop_pattern(*data.pattern)));
        }
        std::vector<SupportPattern> parts;
        for (const auto& p : hop_patterns_) parts.push_back(*p);
        union_ = std::make_shared<const SupportPattern>(support_union(std::span<const SupportPattern>(parts)));
        for (const auto& p : hop_patterns_) embeds_.push_back(embed_positions(*p, *union_));
        prepared_for_ = data.pattern;
    }

    std::vector<EdgeConvModality> modalities_;
    Parameter betas_;
    GcnHead head_;
    std::shared_ptr<const SupportPattern> prepared_for_;
    std::vector<std::shared_ptr<const SupportPattern>> hop_patterns_;
    std::shared_ptr<const SupportPattern> union_;
    std::vector<std::vector<Index>> embeds_;
};

// Softmax-weighted adjacency powers as the propagation matrix of both hops.
class MultiScaleModel final : public Model {
public:
    MultiScaleModel(const ModelSpec& spec, const ModelDims& dims, Rng& rng)
        : Model(spec, dims),
          mixer_(spec.hops),
          w1_("gcn.w1", glorot_uniform(dims.node_features, spec.gcn_hidden, rng)),
          w2_("gcn.w2", glorot_uniform(spec.gcn_hidden, dims.classes, rng)) {}

    Value forward(Tape& tape, const GraphData& data, bool train, Rng& rng) override {
        check_data(data, dims());
        prepare(data);
        const Value p = ad::softmax_vector(tape.parameter(mixer_.logits));
        Value h = ad::dropout(tape.constant_view(data.node_features), dropout_, train, rng);
        h = multiscale_propagate(tape, norm_adj_, ad::matmul(h, tape.parameter(w1_)), p);
        h = ad::dropout(ad::relu(h), dropout_, train, rng);
        return multiscale_propagate(tape, norm_adj_, ad::matmul(h, tape.parameter(w2_)), p);
    }
    std::vector<Parameter*> parameters() override { return {&mixer_.logits, &w1_, &w2_}; }
    std::vector<double> attention() const override { return mixer_.weights(); }
    void set_dropout(double p) override { dropout_ = p; }

private:
    void prepare(const GraphData& data) {
        if (prepared_for_ == data.pattern) return;
        CsrMatrix a(*data.pattern, std::vector<double>(data.pattern->nnz(), 1.0));
        if (spec().self_loops) a = add_self_loops(a, 1.0);
        norm_adj_ = std::make_shared<const CsrMatrix>(sym_normalize(a));
        prepared_for_ = data.pattern;
    }

    MultiScaleMixer mixer_;
    Parameter w1_;
    Parameter w2_;
    double dropout_ = 0.5;
    std::shared_ptr<const SupportPattern> prepared_for_;
    std::shared_ptr<const CsrMatrix> norm_adj_;
};

}  // namespace

std::unique_ptr<Model> make_model(const ModelSpec& spec, const ModelDims& dims, Rng& rng) {
    if (dims.node_features == 0 || dims.classes < 2) {
        throw std::invalid_argument("make_model: need node features and at least two classes");
    }
    switch (spec.kind) {
        case ModelKind::gcn: return std::make_unique<GcnModel>(spec, dims, rng);
        case ModelKind::pdn:
            if (dims.edge_features == 0) throw std::invalid_argument("pdn: edge features required");
            return std::make_unique<PdnModel>(spec, dims, rng);
        case ModelKind::pdn_linear:
            if (dims.edge_features == 0) throw std::invalid_argument("pdn_linear: edge features required");
            return std::make_unique<LinearPdnModel>(spec, dims, rng);
        case ModelKind::pdn_edgeconv: return std::make_unique<EdgeConvModel>(spec, dims, rng);
        case ModelKind::pdn_multiscale: return std::make_unique<MultiScaleModel>(spec, dims, rng);
    }
    throw std::invalid_argument("make_model: unknown model kind");
}

}  // namespace pdn
