#include "pdn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdn {

// ---------------------------------------------------------------------------
// MultiplexGraph

MultiplexGraph::MultiplexGraph(std::vector<CsrMatrix> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("MultiplexGraph: no layers");
    const Index n = layers_.front().n_rows();
    for (const auto& l : layers_) {
        if (l.n_rows() != n || l.n_cols() != n) {
            throw ShapeError("MultiplexGraph: layers must share one square n x n shape");
        }
    }
    support_ = std::make_shared<const SupportPattern>(support_union(std::span<const CsrMatrix>(layers_)));
    stacked_ = DenseMatrix(support_->nnz(), layers_.size());
    for (Index i = 0; i < layers_.size(); ++i) {
        const auto vals = values_on_pattern(*support_, layers_[i]);
        for (Index k = 0; k < vals.size(); ++k) stacked_(k, i) = vals[k];
    }
}

std::vector<EdgeVector> MultiplexGraph::as_edge_vectors(Tape& tape) const {
    std::vector<EdgeVector> out;
    out.reserve(layers_.size());
    for (Index i = 0; i < layers_.size(); ++i) {
        DenseMatrix col(stacked_.rows(), 1);
        for (Index k = 0; k < stacked_.rows(); ++k) col(k, 0) = stacked_(k, i);
        out.push_back({support_, tape.constant(std::move(col))});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pathfinder neurons and layers

PathfinderNeuron::PathfinderNeuron(DenseMatrix b, Activation act)
    : betas("betas", std::move(b)), activation(act) {
    if (betas.value.cols() != 1 || betas.value.rows() == 0) {
        throw ShapeError("PathfinderNeuron: betas must be a non-empty column");
    }
}

PathfinderNeuron PathfinderNeuron::random(Index input_count, Activation act, Rng& rng) {
    return PathfinderNeuron(glorot_uniform(input_count, 1, rng), act);
}

EdgeVector pathfinder_neuron_forward(Tape& tape, const MultiplexGraph& graph,
                                     PathfinderNeuron& neuron) {
    if (neuron.betas.value.rows() != graph.layer_count()) {
        throw ShapeError("pathfinder_neuron_forward: " + std::to_string(neuron.betas.value.rows()) +
                         " betas for " + std::to_string(graph.layer_count()) + " input graphs");
    }
    const Value inputs = tape.constant(graph.stacked_values());
    const Value pre = ad::matmul(inputs, tape.parameter(neuron.betas));
    return {graph.support(), ad::activate(pre, neuron.activation)};
}

std::vector<EdgeVector> pathfinder_layer_forward(Tape& tape, std::span<const EdgeVector> inputs,
                                                 std::span<PathfinderNeuron> neurons) {
    if (neurons.empty()) throw std::invalid_argument("pathfinder_layer_forward: no neurons");
    if (inputs.empty()) throw std::invalid_argument("pathfinder_layer_forward: no input graphs");
    const auto& pattern = inputs.front().pattern;
    std::vector<Value> columns;
    for (const auto& in : inputs) {
        if (in.pattern != pattern && *in.pattern != *pattern) {
            throw ShapeError("pathfinder_layer_forward: inputs must share one support pattern");
        }
        columns.push_back(in.values);
    }
    const Value stacked = ad::hstack(columns);
    std::vector<EdgeVector> out;
    out.reserve(neurons.size());
    for (auto& neuron : neurons) {
        if (neuron.betas.value.rows() != inputs.size()) {
            throw ShapeError("pathfinder_layer_forward: neuron expects " +
                             std::to_string(neuron.betas.value.rows()) + " inputs, got " +
                             std::to_string(inputs.size()));
        }
        const Value pre = ad::matmul(stacked, tape.parameter(neuron.betas));
        out.push_back({pattern, ad::activate(pre, neuron.activation)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-edge MLP

PathfinderMlp::PathfinderMlp(Index input_dim, std::vector<Index> hidden, Activation output, Rng& rng)
    : output_(output) {
    if (input_dim == 0) throw std::invalid_argument("PathfinderMlp: input dimension must be > 0");
    Index fan_in = input_dim;
    hidden.push_back(1);
    for (Index i = 0; i < hidden.size(); ++i) {
        if (hidden[i] == 0) throw std::invalid_argument("PathfinderMlp: zero-width hidden layer");
        const std::string tag = i + 1 == hidden.size() ? "out" : "h" + std::to_string(i);
        layers_.push_back({Parameter("mlp." + tag + ".weight", glorot_uniform(fan_in, hidden[i], rng)),
                           Parameter("mlp." + tag + ".bias", DenseMatrix(1, hidden[i]))});
        fan_in = hidden[i];
    }
}

PathfinderMlp::PathfinderMlp(std::vector<DenseLayer> layers, Activation output)
    : layers_(std::move(layers)), output_(output) {
    if (layers_.empty()) throw std::invalid_argument("PathfinderMlp: no layers");
    for (Index i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.bias.value.rows() != 1 || l.bias.value.cols() != l.weight.value.cols()) {
            throw ShapeError("PathfinderMlp: bias shape does not match weight");
        }
        if (i > 0 && layers_[i - 1].weight.value.cols() != l.weight.value.rows()) {
            throw ShapeError("PathfinderMlp: consecutive layer widths disagree");
        }
    }
    if (layers_.back().weight.value.cols() != 1) {
        throw ShapeError("PathfinderMlp: output layer must produce one value per edge");
    }
}

std::vector<Index> PathfinderMlp::hidden_sizes() const {
    std::vector<Index> sizes;
    for (Index i = 0; i + 1 < layers_.size(); ++i) sizes.push_back(layers_[i].weight.value.cols());
    return sizes;
}

Value PathfinderMlp::forward(Tape& tape, const Value& features) {
    if (features.cols() != input_dim()) {
        throw ShapeError("PathfinderMlp: feature width " + std::to_string(features.cols()) +
                         " but module expects " + std::to_string(input_dim()));
    }
    Value h = features;
    for (Index i = 0; i < layers_.size(); ++i) {
        auto& l = layers_[i];
        h = ad::add_bias(ad::matmul(h, tape.parameter(l.weight)), tape.parameter(l.bias));
        h = i + 1 == layers_.size() ? ad::activate(h, output_) : ad::relu(h);
    }
    return h;
}

std::vector<DenseMatrix> PathfinderMlp::evaluate(const DenseMatrix& features) const {
    if (features.cols() != input_dim()) throw ShapeError("PathfinderMlp::evaluate: feature width mismatch");
    std::vector<DenseMatrix> states;
    DenseMatrix h = features;
    for (Index i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        DenseMatrix z = pdn::matmul(h, l.weight.value);
        const Activation act = i + 1 == layers_.size() ? output_ : Activation::relu;
        for (Index r = 0; r < z.rows(); ++r) {
            auto row = z.row(r);
            for (Index c = 0; c < row.size(); ++c) {
                row[c] = ad::apply_activation(act, row[c] + l.bias.value(0, c));
            }
        }
        states.push_back(z);
        h = std::move(z);
    }
    return states;
}

std::vector<Parameter*> PathfinderMlp::parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers_) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}

EdgeVector pathfinder_mlp_forward(Tape& tape, const DenseMatrix& edge_features,
                                  std::shared_ptr<const SupportPattern> pattern, PathfinderMlp& mlp) {
    if (edge_features.rows() != pattern->nnz()) {
        throw ShapeError("pathfinder_mlp_forward: " + std::to_string(edge_features.rows()) +
                         " feature rows for " + std::to_string(pattern->nnz()) + " edges");
    }
    if (edge_features.cols() != mlp.input_dim()) {
        throw ShapeError("pathfinder_mlp_forward: feature width " +
                         std::to_string(edge_features.cols()) + " but module expects " +
                         std::to_string(mlp.input_dim()));
    }
    return {std::move(pattern), mlp.forward(tape, tape.constant(edge_features))};
}

PathfinderMlp xor_reference_weights() {
    std::vector<DenseLayer> layers;
    layers.push_back({Parameter("mlp.h0.weight", DenseMatrix::from_rows({{1.0, 1.0}, {1.0, 1.0}})),
                      Parameter("mlp.h0.bias", DenseMatrix::from_rows({{0.0, -1.0}}))});
    layers.push_back({Parameter("mlp.out.weight", DenseMatrix::from_rows({{1.0}, {-2.0}})),
                      Parameter("mlp.out.bias", DenseMatrix::from_rows({{0.0}}))});
    return PathfinderMlp(std::move(layers), Activation::identity);
}

// ---------------------------------------------------------------------------
// GCN head

GcnHead::GcnHead(Index in_dim, Index hidden_dim, Index classes, double drop, Rng& rng)
    : dropout(drop),
      w1_("gcn.w1", glorot_uniform(in_dim, hidden_dim, rng)),
      w2_("gcn.w2", glorot_uniform(hidden_dim, classes, rng)) {
    if (!(drop >= 0.0 && drop < 1.0)) throw std::invalid_argument("GcnHead: dropout must lie in [0, 1)");
}

const ad::SelfLoopPlan& GcnHead::plan_for(const std::shared_ptr<const SupportPattern>& pattern) {
    if (!plan_ || plan_->base != pattern) {
        plan_ = std::make_shared<ad::SelfLoopPlan>(ad::make_self_loop_plan(pattern));
    }
    return *plan_;
}

Value GcnHead::forward(Tape& tape, const EdgeVector& learned, const Value& x, bool train, Rng& rng) {
    if (x.rows() != learned.pattern->n_rows()) {
        throw ShapeError("gcn_forward: " + std::to_string(x.rows()) + " feature rows for " +
                         std::to_string(learned.pattern->n_rows()) + " nodes");
    }
    EdgeVector graph = learned;
    if (self_loops) graph = ad::add_self_loops_var(learned, plan_for(learned.pattern), self_loop_weight);
    const EdgeVector norm = ad::sym_normalize_var(graph, eps);

    Value h = ad::dropout(x, dropout, train, rng);
    h = ad::spmm_var(norm, ad::matmul(h, tape.parameter(w1_)));
    h = ad::relu(h);
    h = ad::dropout(h, dropout, train, rng);
    return ad::spmm_var(norm, ad::matmul(h, tape.parameter(w2_)));
}

Value gcn_forward(Tape& tape, const EdgeVector& learned, const Value& x, GcnHead& head, bool train,
                  Rng& rng) {
    return head.forward(tape, learned, x, train, rng);
}

// ---------------------------------------------------------------------------
// Edge convolution

EdgeVector edgeconv_scores(Tape& tape, std::shared_ptr<const SupportPattern> pattern, const Value& x,
                           EdgeConvModality& m) {
    if (x.rows() != pattern->n_rows()) throw ShapeError("edgeconv_scores: feature rows do not match nodes");
    Value h = ad::add_bias(ad::matmul(x, tape.parameter(m.weight)), tape.parameter(m.bias));
    h = ad::activate(h, m.hidden);
    EdgeVector raw = ad::edge_dot(h, std::move(pattern));
    return {raw.pattern, ad::activate(raw.values, m.score)};
}

EdgeVector edgeconv_scores(Tape& tape, const CsrMatrix& adjacency, const Value& x,
                           EdgeConvModality& m) {
    for (const double v : adjacency.values()) {
        if (v != 1.0) throw std::invalid_argument("edgeconv_scores: adjacency must be binary");
    }
    return edgeconv_scores(tape, std::make_shared<const SupportPattern>(adjacency.pattern()), x, m);
}

EdgeVector edgeconv_combine(Tape& /*tape*/, std::span<const EdgeVector> graphs, const Value& betas,
                            Activation act) {
    if (graphs.empty()) throw std::invalid_argument("edgeconv_combine: no graphs");
    if (betas.data().size() != graphs.size()) {
        throw ShapeError("edgeconv_combine: " + std::to_string(betas.data().size()) + " betas for " +
                         std::to_string(graphs.size()) + " graphs");
    }
    const bool shared = std::all_of(graphs.begin(), graphs.end(), [&](const EdgeVector& g) {
        return g.pattern == graphs.front().pattern || *g.pattern == *graphs.front().pattern;
    });
    std::shared_ptr<const SupportPattern> target = graphs.front().pattern;
    std::vector<Value> columns;
    if (shared) {
        for (const auto& g : graphs) columns.push_back(g.values);
    } else {
        std::vector<SupportPattern> patterns;
        for (const auto& g : graphs) patterns.push_back(*g.pattern);
        target = std::make_shared<const SupportPattern>(support_union(std::span<const SupportPattern>(patterns)));
        for (const auto& g : graphs) {
            const auto map = embed_positions(*g.pattern, *target);
            columns.push_back(ad::scatter_to_pattern(g, target, map).values);
        }
    }
    if (betas.cols() != 1) throw ShapeError("edgeconv_combine: betas must be a column vector");
    const Value stacked = ad::hstack(columns);
    return {target, ad::activate(ad::matmul(stacked, betas), act)};
}

// ---------------------------------------------------------------------------
// Multi-scale mixing

MultiScaleMixer::MultiScaleMixer(Index hops) : logits("multiscale.logits", DenseMatrix(hops, 1)) {
    if (hops < 1) throw std::invalid_argument("MultiScaleMixer: at least one hop required");
}

std::vector<double> MultiScaleMixer::weights() const {
    const auto a = logits.value.values();
    const double m = *std::max_element(a.begin(), a.end());
    std::vector<double> p(a.size());
    double z = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
        p[i] = std::exp(a[i] - m);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

Value multiscale_propagate(Tape& /*tape*/, std::shared_ptr<const CsrMatrix> norm_adj, const Value& h,
                           const Value& mixture_weights) {
    const Index hops = mixture_weights.data().size();
    if (hops < 1) throw std::invalid_argument("multiscale_propagate: at least one hop required");
    if (norm_adj->n_cols() != h.rows()) throw ShapeError("multiscale_propagate: adjacency/feature mismatch");
    Value current = h;
    Value acc;
    for (Index i = 0; i < hops; ++i) {
        current = ad::spmm_const(norm_adj, current);
        const Value term = ad::scale_by_entry(current, mixture_weights, i);
        acc = i == 0 ? term : ad::add(acc, term);
    }
    return acc;
}

Value multiscale_forward(Tape& tape, std::shared_ptr<const CsrMatrix> norm_adj, const Value& x,
                         MultiScaleMixer& mixer, const Value& w) {
    const Value p = ad::softmax_vector(tape.parameter(mixer.logits));
    return multiscale_propagate(tape, std::move(norm_adj), ad::matmul(x, w), p);
}

// ---------------------------------------------------------------------------
// Linear attention and degree-limit demonstrators

std::pair<EdgeVector, Value> linear_pdn_attention(Tape& tape, const DenseMatrix& edge_features,
                                                  std::shared_ptr<const SupportPattern> pattern,
                                                  Parameter& logits) {
    if (edge_features.rows() != pattern->nnz()) {
        throw ShapeError("linear_pdn_attention: feature rows do not match edges");
    }
    if (logits.value.rows() != edge_features.cols() || logits.value.cols() != 1) {
        throw ShapeError("linear_pdn_attention: one logit per feature column required");
    }
    const Value attention = ad::softmax_vector(tape.parameter(logits));
    const Value weights = ad::matmul(tape.constant(edge_features), attention);
    return {EdgeVector{std::move(pattern), weights}, attention};
}

double pdn_edge_weight_linear(std::span<const double> features, std::span<const double> betas) {
    if (features.size() != betas.size()) {
        throw std::invalid_argument("pdn_edge_weight_linear: feature/beta length mismatch");
    }
    double s = 0.0;
    for (Index i = 0; i < features.size(); ++i) s += betas[i] * features[i];
    return s;
}

double softmax_neighbor_weight(std::span<const double> scores, Index target) {
    if (scores.empty()) throw std::invalid_argument("softmax_neighbor_weight: empty neighbourhood");
    if (target >= scores.size()) throw std::out_of_range("softmax_neighbor_weight: target out of range");
    const double m = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (const double s : scores) z += std::exp(s - m);
    return std::exp(scores[target] - m) / z;
}

}  // namespace pdn
