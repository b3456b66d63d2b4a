#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdn/edge_features.hpp"
#include "pdn/models.hpp"
#include "pdn/synthgen.hpp"
#include "pdn/trainer.hpp"

namespace pdn {

// Exclusive-or -----------------------------------------------------------------

struct XorRow {
    double a = 0.0;
    double b = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    double alpha = 0.0;
};

/// The four binary input pairs pushed through xor_reference_weights().
std::array<XorRow, 4> xor_truth_table();

/// Two classes; every edge lives in exactly one layer when it joins a class
/// to itself and in both layers when it crosses classes, so the useful edges
/// are exactly those where the layer indicators differ. Edge features are the
/// two indicators.
struct XorTaskConfig {
    Index nodes = 300;
    Index feature_dim = 8;
    double feature_shift = 0.15;  // class mean offset per feature
    double intra_degree = 4.0;    // expected same-class neighbours
    double inter_degree = 4.0;    // expected other-class neighbours
    std::uint64_t seed = 0;
};

struct XorTask {
    GraphData data;
    Index intra_edges = 0;
    Index inter_edges = 0;
};

XorTask make_xor_task(const XorTaskConfig& config);

struct XorExperimentConfig {
    XorTaskConfig task;
    TrainConfig train;
    double train_fraction = 0.8;
    Index hidden = 2;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    unsigned workers = 0;
};

struct XorOutcome {
    std::uint64_t seed = 0;
    double pdn_acc = 0.0;
    double gcn_acc = 0.0;
};

std::vector<XorOutcome> run_xor_experiment(const XorExperimentConfig& config);

// Scenario sweeps ----------------------------------------------------------------

inline constexpr std::array<const char*, 8> kSweepParameters{"C", "n", "P", "Q", "F", "D", "sigma_F", "sigma_D"};

/// Sets one generator parameter by name; integer parameters must receive
/// integral values.
void apply_parameter(SyntheticConfig& config, const std::string& name, double value);

struct ScenarioSpec {
    std::string name = "scenario";
    std::string parameter = "Q";
    std::vector<double> values{0.001, 0.002, 0.005, 0.01, 0.02, 0.05};
    int repetitions = 10;
    SyntheticConfig base;
    std::vector<ModelKind> models{ModelKind::gcn, ModelKind::pdn};
    ModelSpec model;  // template; kind is overwritten per run
    TrainConfig train;
    double train_fraction = 0.8;
    unsigned workers = 0;

    void validate() const;
};

struct RunRecord {
    std::string scenario;
    std::string parameter;
    double value = 0.0;
    ModelKind model = ModelKind::gcn;
    std::uint64_t seed = 0;
    double test_acc = 0.0;
    double epoch_seconds = 0.0;
};

struct ScenarioSummary {
    double value = 0.0;
    ModelKind model = ModelKind::gcn;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for one run
    Index runs = 0;
};

/// Dataset seed of repetition r is base.seed + r, so repetitions of one sweep
/// value never share a dataset. `on_record` sees records in sweep order.
std::vector<RunRecord> run_scenario(const ScenarioSpec& spec,
                                    const std::function<void(const RunRecord&)>& on_record = {});

std::vector<ScenarioSummary> summarize(const std::vector<RunRecord>& records);

/// Streams run rows as they arrive, then mean and std rows.
class ScenarioCsv {
public:
    explicit ScenarioCsv(std::ostream& out);
    void record(const RunRecord& r);
    void summary(const std::vector<ScenarioSummary>& rows, const std::string& scenario, const std::string& parameter);

private:
    std::ostream* out_;
};

// Runtime benchmark ----------------------------------------------------------------

struct RuntimeConfig {
    std::vector<Index> node_counts{4096};
    Index k = 16;
    double p = 0.5;
    Index F = 128;
    Index D = 128;
    int C = 4;
    int epochs = 20;
    int warmup = 3;
    int rounds = 3;  // timed rounds per model, interleaved; the fastest is kept
    std::uint64_t seed = 0;
};

struct RuntimeModel {
    std::string name;
    ModelSpec spec;
};

/// gcn, linear (no hidden layer), shallow {32}, deep {32, 16}.
std::vector<RuntimeModel> runtime_models();

struct RuntimeRecord {
    Index nodes = 0;
    Index edges = 0;
    std::string model;
    double seconds_per_epoch = 0.0;
    double relative = 0.0;  // to gcn at the same size
};

/// Watts-Strogatz graph with random features and labels.
GraphData runtime_graph(Index n, const RuntimeConfig& config);

std::vector<RuntimeRecord> run_runtime_benchmark(const RuntimeConfig& config);
void write_runtime_csv(std::ostream& out, const std::vector<RuntimeRecord>& records);

// Attention ------------------------------------------------------------------

struct MultiscaleAttentionConfig {
    Index hops = 5;
    int repetitions = 10;
    TrainConfig train;
    SplitSpec split = SplitSpec::per_class(100);
    std::uint64_t seed = 0;
    unsigned workers = 0;
};

struct MultiscaleAttentionResult {
    std::vector<std::vector<double>> mean_trace;  // epoch x hops
    std::vector<std::vector<double>> final_weights;  // repetition x hops
    double max_sum_error = 0.0;  // max |sum(P) - 1| over every logged vector

    /// Repetitions whose final P_1 is the strict maximum.
    Index first_hop_wins() const;
};

MultiscaleAttentionResult run_multiscale_attention(const GraphData& data, const MultiscaleAttentionConfig& config);
void write_multiscale_trace_csv(std::ostream& out, const MultiscaleAttentionResult& result);

struct LinearAttentionConfig {
    int repetitions = 10;
    TrainConfig train;
    SplitSpec split = SplitSpec::per_class(100);
    std::uint64_t seed = 0;
    unsigned workers = 0;
};

struct LinearAttentionResult {
    std::vector<std::string> metrics;
    std::vector<double> mean_attention;  // final epoch, averaged over runs
    std::vector<std::vector<double>> final_attention;  // run x metric
    double max_sum_error = 0.0;
};

/// Replaces the edge features with the min-max scaled similarity metrics.
GraphData with_similarity_features(const GraphData& data);

LinearAttentionResult run_linear_attention(const GraphData& data, const LinearAttentionConfig& config);
void write_linear_attention_csv(std::ostream& out, const LinearAttentionResult& result);

}  // namespace pdn
