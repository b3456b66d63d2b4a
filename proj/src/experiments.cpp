#include "pdn/experiments.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "pdn/io.hpp"

namespace pdn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// RNG stream ids derived from one experiment seed.
enum Stream : std::uint64_t {
    kTaskLabels = 11,
    kTaskFeatures = 12,
    kTaskEdges = 13,
    kModelInit = 21,
    kRuntimeGraph = 31,
    kRuntimeFeatures = 32,
};

}  // namespace

// ---------------------------------------------------------------------------
// Exclusive-or

std::array<XorRow, 4> xor_truth_table() {
    const PathfinderMlp mlp = xor_reference_weights();
    const DenseMatrix inputs = DenseMatrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const auto acts = mlp.evaluate(inputs);
    std::array<XorRow, 4> rows;
    for (Index i = 0; i < 4; ++i) {
        rows[i] = {inputs(i, 0), inputs(i, 1), acts[0](i, 0), acts[0](i, 1), acts[1](i, 0)};
    }
    return rows;
}

XorTask make_xor_task(const XorTaskConfig& config) {
    if (config.nodes < 4) throw std::invalid_argument("xor task: need at least 4 nodes");
    const Index n = config.nodes;
    std::vector<int> labels(n);
    for (Index i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
    Rng label_rng = make_rng(config.seed, kTaskLabels);
    std::shuffle(labels.begin(), labels.end(), label_rng);

    Rng feat_rng = make_rng(config.seed, kTaskFeatures);
    DenseMatrix x = standard_normal(n, config.feature_dim, feat_rng);
    for (Index i = 0; i < n; ++i) {
        const double shift = labels[i] == 1 ? config.feature_shift : -config.feature_shift;
        for (auto& v : x.row(i)) v += shift;
    }

    const double half = static_cast<double>(n) / 2.0;
    const double p_in = std::min(1.0, config.intra_degree / (half - 1.0));
    const double p_out = std::min(1.0, config.inter_degree / half);
    Rng edge_rng = make_rng(config.seed, kTaskEdges);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    XorTask task;
    std::vector<UndirectedEdge> edges;
    std::vector<double> feats;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const bool same = labels[i] == labels[j];
            const double draw = uniform(edge_rng);
            const double which = uniform(edge_rng);
            if (draw >= (same ? p_in : p_out)) continue;
            edges.push_back({i, j});
            if (same) {
                const bool first = which < 0.5;
                feats.push_back(first ? 1.0 : 0.0);
                feats.push_back(first ? 0.0 : 1.0);
                ++task.intra_edges;
            } else {
                feats.push_back(1.0);
                feats.push_back(1.0);
                ++task.inter_edges;
            }
        }
    }
    DenseMatrix ef(edges.size(), 2, std::move(feats));
    task.data = make_graph_data(edges, std::move(x), std::move(ef), std::move(labels), 2);
    return task;
}

std::vector<XorOutcome> run_xor_experiment(const XorExperimentConfig& config) {
    auto results = run_seeds(
        config.seeds,
        [&](std::uint64_t seed) {
            XorTaskConfig tc = config.task;
            tc.seed = seed;
            const XorTask task = make_xor_task(tc);
            const Split sp = split(task.data.node_count(), task.data.labels,
                                   SplitSpec::fraction(config.train_fraction, seed));
            TrainConfig train = config.train;
            train.seed = seed;
            XorOutcome out;
            out.seed = seed;
            for (const auto kind : {ModelKind::pdn, ModelKind::gcn}) {
                ModelSpec spec;
                spec.kind = kind;
                spec.pathfinder_hidden = {config.hidden};
                Rng init = make_rng(seed, kModelInit);
                auto model = make_model(spec, ModelDims::of(task.data), init);
                const double acc = pdn::train(*model, task.data, sp, train).last().test_acc;
                (kind == ModelKind::pdn ? out.pdn_acc : out.gcn_acc) = acc;
            }
            return out;
        },
        config.workers);
    std::vector<XorOutcome> out;
    for (auto& [seed, r] : results) out.push_back(r);
    return out;
}

// ---------------------------------------------------------------------------
// Scenario sweeps

void apply_parameter(SyntheticConfig& c, const std::string& name, double value) {
    const auto as_count = [&](double v) -> Index {
        if (!(v >= 0.0) || std::floor(v) != v) {
            throw std::invalid_argument("parameter " + name + " needs a non-negative integer, got " + format_double(v));
        }
        return static_cast<Index>(v);
    };
    if (name == "C") c.C = static_cast<int>(as_count(value));
    else if (name == "n") c.n = as_count(value);
    else if (name == "P") c.P = value;
    else if (name == "Q") c.Q = value;
    else if (name == "F") c.F = as_count(value);
    else if (name == "D") c.D = as_count(value);
    else if (name == "sigma_F") c.sigma_F = value;
    else if (name == "sigma_D") c.sigma_D = value;
    else throw std::invalid_argument("unknown sweep parameter '" + name + "'");
}

void ScenarioSpec::validate() const {
    if (values.empty()) throw std::invalid_argument("scenario: no sweep values");
    if (repetitions < 1) throw std::invalid_argument("scenario: repetitions must be >= 1");
    if (models.empty()) throw std::invalid_argument("scenario: no models");
    for (const double v : values) {
        SyntheticConfig c = base;
        apply_parameter(c, parameter, v);
        c.validate();
    }
    train.validate();
}

std::vector<RunRecord> run_scenario(const ScenarioSpec& spec, const std::function<void(const RunRecord&)>& on_record) {
    spec.validate();
    std::vector<RunRecord> all;
    for (const double value : spec.values) {
        std::vector<std::uint64_t> seeds;
        for (int r = 0; r < spec.repetitions; ++r) seeds.push_back(spec.base.seed + static_cast<std::uint64_t>(r));
        auto batch = run_seeds(
            seeds,
            [&](std::uint64_t seed) {
                SyntheticConfig cfg = spec.base;
                apply_parameter(cfg, spec.parameter, value);
                cfg.seed = seed;
                const GraphData data = generate(cfg).to_graph_data();
                const Split sp = split(data.node_count(), data.labels, SplitSpec::fraction(spec.train_fraction, seed));
                std::vector<RunRecord> recs;
                for (Index m = 0; m < spec.models.size(); ++m) {
                    ModelSpec ms = spec.model;
                    ms.kind = spec.models[m];
                    Rng init = make_rng(seed, kModelInit + 100 * m);
                    auto model = make_model(ms, ModelDims::of(data), init);
                    TrainConfig tc = spec.train;
                    tc.seed = seed;
                    const auto t0 = Clock::now();
                    const History h = train(*model, data, sp, tc);
                    const double secs = seconds_since(t0) / static_cast<double>(tc.epochs);
                    recs.push_back({spec.name, spec.parameter, value, ms.kind, seed, h.last().test_acc, secs});
                }
                return recs;
            },
            spec.workers);
        for (auto& [seed, recs] : batch) {
            for (auto& r : recs) {
                if (on_record) on_record(r);
                all.push_back(std::move(r));
            }
        }
    }
    return all;
}

std::vector<ScenarioSummary> summarize(const std::vector<RunRecord>& records) {
    std::vector<ScenarioSummary> out;
    for (const auto& r : records) {
        const auto it = std::find_if(out.begin(), out.end(),
                                     [&](const ScenarioSummary& s) { return s.value == r.value && s.model == r.model; });
        if (it == out.end()) out.push_back({r.value, r.model, 0.0, 0.0, 0});
    }
    for (auto& s : out) {
        std::vector<double> acc;
        for (const auto& r : records) {
            if (r.value == s.value && r.model == s.model) acc.push_back(r.test_acc);
        }
        s.runs = acc.size();
        s.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
        double ss = 0.0;
        for (const double a : acc) ss += (a - s.mean) * (a - s.mean);
        s.std = acc.size() > 1 ? std::sqrt(ss / static_cast<double>(acc.size() - 1)) : 0.0;
    }
    return out;
}

namespace {
const std::vector<std::string> kScenarioColumns{"row_type", "scenario", "parameter", "value", "model",
                                                "seed",     "runs",     "test_acc",  "epoch_seconds"};
}

ScenarioCsv::ScenarioCsv(std::ostream& out) : out_(&out) {
    CsvWriter header(out, "scenario", kScenarioSchemaVersion, kScenarioColumns);
}

void ScenarioCsv::record(const RunRecord& r) {
    CsvWriter::row_to(*out_, kScenarioColumns.size(),
                      {"run", r.scenario, r.parameter, format_double(r.value), std::string(to_string(r.model)),
                       std::to_string(r.seed), "1", format_double(r.test_acc), format_double(r.epoch_seconds)});
}

void ScenarioCsv::summary(const std::vector<ScenarioSummary>& rows, const std::string& scenario,
                          const std::string& parameter) {
    for (const auto& s : rows) {
        CsvWriter::row_to(*out_, kScenarioColumns.size(),
                          {"mean", scenario, parameter, format_double(s.value), std::string(to_string(s.model)), "",
                           std::to_string(s.runs), format_double(s.mean), ""});
    }
    for (const auto& s : rows) {
        CsvWriter::row_to(*out_, kScenarioColumns.size(),
                          {"std", scenario, parameter, format_double(s.value), std::string(to_string(s.model)), "",
                           std::to_string(s.runs), format_double(s.std), ""});
    }
}

// ---------------------------------------------------------------------------
// Runtime benchmark

std::vector<RuntimeModel> runtime_models() {
    std::vector<RuntimeModel> out;
    ModelSpec gcn;
    gcn.kind = ModelKind::gcn;
    out.push_back({"gcn", gcn});
    const std::vector<std::pair<std::string, std::vector<Index>>> pdns{
        {"linear", {}}, {"shallow", {32}}, {"deep", {32, 16}}};
    for (const auto& [name, hidden] : pdns) {
        ModelSpec s;
        s.kind = ModelKind::pdn;
        s.pathfinder_hidden = hidden;
        out.push_back({name, s});
    }
    return out;
}

GraphData runtime_graph(Index n, const RuntimeConfig& config) {
    Rng graph_rng = make_rng(config.seed + n, kRuntimeGraph);
    const auto edges = watts_strogatz_edges(n, config.k, config.p, graph_rng);
    Rng feat_rng = make_rng(config.seed + n, kRuntimeFeatures);
    DenseMatrix x = standard_normal(n, config.F, feat_rng);
    DenseMatrix ef = standard_normal(edges.size(), config.D, feat_rng);
    std::uniform_int_distribution<int> cls(0, config.C - 1);
    std::vector<int> labels(n);
    for (auto& l : labels) l = cls(feat_rng);
    return make_graph_data(edges, std::move(x), std::move(ef), std::move(labels), config.C);
}

std::vector<RuntimeRecord> run_runtime_benchmark(const RuntimeConfig& config) {
    if (config.epochs < 1 || config.warmup < 0 || config.rounds < 1) {
        throw std::invalid_argument("runtime: epochs and rounds must be >= 1, warmup >= 0");
    }
    // Per-epoch buffers are large; keep freed pages mapped so timings are not
    // dominated by page faults.
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
    const auto models = runtime_models();
    std::vector<RuntimeRecord> out;
    for (const Index n : config.node_counts) {
        GraphData data;
        try {
            data = runtime_graph(n, config);
        } catch (const std::bad_alloc&) {
            throw std::runtime_error("runtime: out of memory building a graph with " + std::to_string(n) +
                                     " nodes; try smaller --nodes");
        }
        const Split sp = split(n, data.labels, SplitSpec::fraction(0.8, config.seed));
        TrainConfig tc;
        tc.seed = config.seed;

        std::vector<std::unique_ptr<Model>> instances;
        std::vector<AdamState> adams(models.size());
        std::vector<Rng> rngs;
        for (Index m = 0; m < models.size(); ++m) {
            Rng init = make_rng(config.seed, kModelInit + m);
            instances.push_back(make_model(models[m].spec, ModelDims::of(data), init));
            instances.back()->set_dropout(tc.dropout);
            rngs.push_back(make_rng(config.seed, 1000 + m));
            for (int w = 0; w < config.warmup; ++w) train_step(*instances[m], data, sp, adams[m], tc, rngs[m]);
        }
        std::vector<double> best(models.size(), std::numeric_limits<double>::infinity());
        for (int round = 0; round < config.rounds; ++round) {
            for (Index m = 0; m < models.size(); ++m) {
                const auto t0 = Clock::now();
                for (int e = 0; e < config.epochs; ++e) train_step(*instances[m], data, sp, adams[m], tc, rngs[m]);
                best[m] = std::min(best[m], seconds_since(t0) / static_cast<double>(config.epochs));
            }
        }
        for (Index m = 0; m < models.size(); ++m) {
            out.push_back({n, data.edge_features.rows(), models[m].name, best[m], best[m] / best[0]});
        }
    }
    return out;
}

void write_runtime_csv(std::ostream& out, const std::vector<RuntimeRecord>& records) {
    CsvWriter csv(out, "runtime", kRuntimeSchemaVersion, {"nodes", "edges", "model", "seconds_per_epoch", "relative"});
    for (const auto& r : records) {
        csv.row({std::to_string(r.nodes), std::to_string(r.edges), r.model, format_double(r.seconds_per_epoch),
                 format_double(r.relative)});
    }
}

// ---------------------------------------------------------------------------
// Attention

Index MultiscaleAttentionResult::first_hop_wins() const {
    Index wins = 0;
    for (const auto& w : final_weights) {
        bool best = true;
        for (Index i = 1; i < w.size(); ++i) best = best && w[0] > w[i];
        if (best) ++wins;
    }
    return wins;
}

namespace {

double sum_error(const std::vector<double>& w) {
    return std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0);
}

std::vector<std::uint64_t> rep_seeds(std::uint64_t base, int reps) {
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < reps; ++r) seeds.push_back(base + static_cast<std::uint64_t>(r));
    return seeds;
}

}  // namespace

MultiscaleAttentionResult run_multiscale_attention(const GraphData& data, const MultiscaleAttentionConfig& config) {
    if (config.repetitions < 1) throw std::invalid_argument("attention: repetitions must be >= 1");
    auto histories = run_seeds(
        rep_seeds(config.seed, config.repetitions),
        [&](std::uint64_t seed) {
            ModelSpec spec;
            spec.kind = ModelKind::pdn_multiscale;
            spec.hops = config.hops;
            Rng init = make_rng(seed, kModelInit);
            auto model = make_model(spec, ModelDims::of(data), init);
            SplitSpec ss = config.split;
            ss.seed = seed;
            const Split sp = split(data.node_count(), data.labels, ss);
            TrainConfig tc = config.train;
            tc.seed = seed;
            return train(*model, data, sp, tc);
        },
        config.workers);

    MultiscaleAttentionResult res;
    const auto epochs = static_cast<Index>(config.train.epochs);
    res.mean_trace.assign(epochs, std::vector<double>(config.hops, 0.0));
    for (const auto& [seed, h] : histories) {
        for (Index e = 0; e < epochs; ++e) {
            const auto& w = h.epochs[e].attention;
            res.max_sum_error = std::max(res.max_sum_error, sum_error(w));
            for (Index i = 0; i < config.hops; ++i) res.mean_trace[e][i] += w[i] / static_cast<double>(histories.size());
        }
        res.final_weights.push_back(h.last().attention);
    }
    return res;
}

void write_multiscale_trace_csv(std::ostream& out, const MultiscaleAttentionResult& result) {
    std::vector<std::string> cols{"epoch"};
    const Index hops = result.mean_trace.empty() ? 0 : result.mean_trace.front().size();
    for (Index i = 1; i <= hops; ++i) cols.push_back("P" + std::to_string(i));
    CsvWriter csv(out, "attention-multiscale", kAttentionSchemaVersion, std::move(cols));
    for (Index e = 0; e < result.mean_trace.size(); ++e) {
        std::vector<std::string> cells{std::to_string(e + 1)};
        for (const double w : result.mean_trace[e]) cells.push_back(format_double(w));
        csv.row(cells);
    }
}

GraphData with_similarity_features(const GraphData& data) {
    const CsrMatrix g(*data.pattern, std::vector<double>(data.pattern->nnz(), 1.0));
    const EdgeFeatureMatrix fm = feature_matrix(g, FeatureScaling::min_max);
    GraphData out = data;
    out.edge_features = DenseMatrix(data.edge_features.rows(), fm.values.cols());
    for (Index k = 0; k < data.edge_row.size(); ++k) {
        const auto src = fm.values.row(k);
        std::copy(src.begin(), src.end(), out.edge_features.row(data.edge_row[k]).begin());
    }
    return out;
}

LinearAttentionResult run_linear_attention(const GraphData& data, const LinearAttentionConfig& config) {
    if (config.repetitions < 1) throw std::invalid_argument("attention: repetitions must be >= 1");
    const GraphData feats = with_similarity_features(data);
    auto histories = run_seeds(
        rep_seeds(config.seed, config.repetitions),
        [&](std::uint64_t seed) {
            ModelSpec spec;
            spec.kind = ModelKind::pdn_linear;
            Rng init = make_rng(seed, kModelInit);
            auto model = make_model(spec, ModelDims::of(feats), init);
            SplitSpec ss = config.split;
            ss.seed = seed;
            const Split sp = split(feats.node_count(), feats.labels, ss);
            TrainConfig tc = config.train;
            tc.seed = seed;
            return train(*model, feats, sp, tc);
        },
        config.workers);

    LinearAttentionResult res;
    for (const auto m : kAllMetrics) res.metrics.emplace_back(to_string(m));
    res.mean_attention.assign(res.metrics.size(), 0.0);
    for (const auto& [seed, h] : histories) {
        for (const auto& e : h.epochs) res.max_sum_error = std::max(res.max_sum_error, sum_error(e.attention));
        const auto& last = h.last().attention;
        for (Index i = 0; i < last.size(); ++i) res.mean_attention[i] += last[i] / static_cast<double>(histories.size());
        res.final_attention.push_back(last);
    }
    return res;
}

void write_linear_attention_csv(std::ostream& out, const LinearAttentionResult& result) {
    CsvWriter csv(out, "attention-linear", kAttentionSchemaVersion, {"metric", "mean_attention"});
    for (Index i = 0; i < result.metrics.size(); ++i) {
        csv.row({result.metrics[i], format_double(result.mean_attention[i])});
    }
}

}  // namespace pdn
