#pragma once

// Pathfinder learning module and its variants.
//
// Every learned graph is an ad::EdgeVector: one value per stored position of
// a shared support pattern. Activations act on stored entries only, so a
// learned graph never grows beyond the union of its input supports.

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "pdn/autodiff.hpp"
#include "pdn/sparse.hpp"

namespace pdn {

using ad::Activation;
using ad::EdgeVector;
using ad::Parameter;
using ad::Tape;
using ad::Value;

/// D weighted adjacency layers over one node set, aligned on their support
/// union. Column i of `stacked_values` holds layer i in union storage order.
class MultiplexGraph {
public:
    explicit MultiplexGraph(std::vector<CsrMatrix> layers);

    Index node_count() const noexcept { return support_->n_rows(); }
    Index layer_count() const noexcept { return layers_.size(); }
    const std::vector<CsrMatrix>& layers() const noexcept { return layers_; }
    const std::shared_ptr<const SupportPattern>& support() const noexcept { return support_; }
    const DenseMatrix& stacked_values() const noexcept { return stacked_; }

    /// The layers as constant edge vectors on the union support.
    std::vector<EdgeVector> as_edge_vectors(Tape& tape) const;

private:
    std::vector<CsrMatrix> layers_;
    std::shared_ptr<const SupportPattern> support_;
    DenseMatrix stacked_;
};

struct PathfinderNeuron {
    Parameter betas;  // input_count x 1, no bias
    Activation activation = Activation::relu;

    PathfinderNeuron(DenseMatrix betas, Activation act);
    static PathfinderNeuron random(Index input_count, Activation act, Rng& rng);
};

/// sigma(sum_i beta_i A_i) on the union support.
EdgeVector pathfinder_neuron_forward(Tape& tape, const MultiplexGraph& graph,
                                     PathfinderNeuron& neuron);
/// One output graph per neuron; inputs must share one pattern.
std::vector<EdgeVector> pathfinder_layer_forward(Tape& tape, std::span<const EdgeVector> inputs,
                                                 std::span<PathfinderNeuron> neurons);

struct DenseLayer {
    Parameter weight;  // in x out
    Parameter bias;    // 1 x out
};

/// Per-edge feed-forward aggregator: ReLU hidden layers, one scalar output.
/// An empty hidden list gives the generalized linear form out_act(f.w + b).
class PathfinderMlp {
public:
    PathfinderMlp(Index input_dim, std::vector<Index> hidden, Activation output, Rng& rng);
    PathfinderMlp(std::vector<DenseLayer> layers, Activation output);

    Index input_dim() const { return layers_.front().weight.value.rows(); }
    Activation output_activation() const noexcept { return output_; }
    std::vector<Index> hidden_sizes() const;

    Value forward(Tape& tape, const Value& features);
    /// Plain evaluation; element i holds the activations after layer i
    /// (hidden layers first, output last).
    std::vector<DenseMatrix> evaluate(const DenseMatrix& features) const;

    std::vector<Parameter*> parameters();
    std::vector<DenseLayer>& layers() noexcept { return layers_; }

private:
    std::vector<DenseLayer> layers_;
    Activation output_;
};

/// One weight per row of `edge_features`, which must be aligned with
/// `pattern` storage order.
EdgeVector pathfinder_mlp_forward(Tape& tape, const DenseMatrix& edge_features,
                                  std::shared_ptr<const SupportPattern> pattern, PathfinderMlp& mlp);

/// The two-neuron module whose output is the exclusive-or of two binary
/// edge indicators: h1 = relu(a + b), h2 = relu(a + b - 1), out = h1 - 2 h2.
PathfinderMlp xor_reference_weights();

/// Two-hop spectral GCN over a learned graph:
/// Z = N relu(N dropout(X) W1) W2 with N the normalized graph (+ self-loops).
class GcnHead {
public:
    GcnHead(Index in_dim, Index hidden_dim, Index classes, double dropout, Rng& rng);

    Value forward(Tape& tape, const EdgeVector& learned, const Value& x, bool train, Rng& rng);

    Parameter& w1() noexcept { return w1_; }
    Parameter& w2() noexcept { return w2_; }
    std::vector<Parameter*> parameters() { return {&w1_, &w2_}; }

    double dropout = 0.5;
    bool self_loops = true;
    double self_loop_weight = 1.0;
    double eps = 1e-12;

private:
    const ad::SelfLoopPlan& plan_for(const std::shared_ptr<const SupportPattern>& pattern);

    Parameter w1_;
    Parameter w2_;
    std::shared_ptr<ad::SelfLoopPlan> plan_;
};

/// Free-function form of GcnHead::forward.
Value gcn_forward(Tape& tape, const EdgeVector& learned, const Value& x, GcnHead& head,
                  bool train, Rng& rng);

/// Node embedding H = act(X W + b) followed by masked edge scores
/// score_act(H[u] . H[v]) on the stored edges of a binary adjacency.
struct EdgeConvModality {
    Parameter weight;
    Parameter bias;
    Activation hidden = Activation::relu;
    Activation score = Activation::sigmoid;
};

EdgeVector edgeconv_scores(Tape& tape, const CsrMatrix& adjacency, const Value& x,
                           EdgeConvModality& modality);
EdgeVector edgeconv_scores(Tape& tape, std::shared_ptr<const SupportPattern> pattern, const Value& x,
                           EdgeConvModality& modality);

/// act(sum_i beta_i G_i) on the support union of the inputs.
EdgeVector edgeconv_combine(Tape& tape, std::span<const EdgeVector> graphs, const Value& betas,
                            Activation act);

/// Softmax-weighted mixture of adjacency powers.
struct MultiScaleMixer {
    Parameter logits;  // hops x 1, zero initialised

    explicit MultiScaleMixer(Index hops);
    Index hops() const { return logits.value.rows(); }
    std::vector<double> weights() const;
};

/// (sum_{i=1..hops} P_i A^i) h, computed by repeated propagation without
/// forming any power of A.
Value multiscale_propagate(Tape& tape, std::shared_ptr<const CsrMatrix> norm_adj, const Value& h,
                           const Value& mixture_weights);
/// (sum_i P_i A^i) X W with P = softmax(mixer logits).
Value multiscale_forward(Tape& tape, std::shared_ptr<const CsrMatrix> norm_adj, const Value& x,
                         MultiScaleMixer& mixer, const Value& w);

/// Linear pathfinder with softmax weights over the edge features. Returns the
/// per-edge weights and the attention vector.
std::pair<EdgeVector, Value> linear_pdn_attention(Tape& tape, const DenseMatrix& edge_features,
                                                  std::shared_ptr<const SupportPattern> pattern,
                                                  Parameter& logits);

/// beta . features for one edge; independent of neighbourhood size.
double pdn_edge_weight_linear(std::span<const double> features, std::span<const double> betas);

/// exp(s_target) / sum_w exp(s_w) over one neighbourhood.
double softmax_neighbor_weight(std::span<const double> scores, Index target);

}  // namespace pdn
