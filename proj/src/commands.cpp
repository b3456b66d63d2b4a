#include "pdn/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "pdn/experiments.hpp"
#include "pdn/io.hpp"

namespace pdn {

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::string out;
};

std::string output_or(const GlobalOptions& g, const std::string& fallback) {
    return g.out.empty() ? fallback : g.out;
}

void add_generator_flags(CLI::App& cmd, SyntheticConfig& c) {
    cmd.add_option("--C", c.C, "classes")->capture_default_str();
    cmd.add_option("--n", c.n, "nodes per class")->capture_default_str();
    cmd.add_option("--P", c.P, "intra-class edge probability")->capture_default_str();
    cmd.add_option("--Q", c.Q, "inter-class edge probability")->capture_default_str();
    cmd.add_option("--F", c.F, "node feature dimension")->capture_default_str();
    cmd.add_option("--D", c.D, "edge feature dimension")->capture_default_str();
    cmd.add_option("--sigma_F", c.sigma_F, "label noise std")->capture_default_str();
    cmd.add_option("--sigma_D", c.sigma_D, "inter-class edge feature std")->capture_default_str();
}

void add_train_flags(CLI::App& cmd, TrainConfig& t) {
    cmd.add_option("--epochs", t.epochs, "training epochs")->capture_default_str();
    cmd.add_option("--lr", t.lr, "Adam learning rate")->capture_default_str();
    cmd.add_option("--dropout", t.dropout, "dropout rate")->capture_default_str();
    cmd.add_option("--l2", t.l2, "L2 coefficient")->capture_default_str();
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

// -- generate --------------------------------------------------------------------

struct GenerateArgs {
    SyntheticConfig config;
};

void cmd_generate(const GlobalOptions& g, GenerateArgs a, std::ostream& out) {
    a.config.seed = g.seed;
    const SyntheticDataset ds = generate(a.config);
    const std::string path = output_or(g, "dataset.txt");
    save_dataset(path, ds);
    out << "nodes=" << ds.node_count() << " edges=" << ds.edges.edges.size() << " intra=" << ds.edges.intra_count()
        << " inter=" << ds.edges.inter_count() << " file=" << path << '\n';
}

// -- train ---------------------------------------------------------------------------

struct TrainArgs {
    std::string dataset;
    std::string model = "pdn";
    std::vector<Index> hidden{16};
    std::string output_activation = "sigmoid";
    Index hops = 2;
    bool no_self_loops = false;
    double train_fraction = 0.8;
    Index shots = 0;
    std::string checkpoint;
    TrainConfig train;
};

void cmd_train(const GlobalOptions& g, TrainArgs a, std::ostream& out) {
    const GraphData raw = load_dataset(a.dataset).to_graph_data();
    ModelSpec spec;
    spec.kind = parse_model_kind(a.model);
    spec.pathfinder_hidden = a.hidden;
    spec.pathfinder_output = ad::parse_activation(a.output_activation);
    spec.hops = a.hops;
    spec.self_loops = !a.no_self_loops;
    const GraphData data = spec.kind == ModelKind::pdn_linear ? with_similarity_features(raw) : raw;

    const SplitSpec ss = a.shots > 0 ? SplitSpec::per_class(a.shots, g.seed) : SplitSpec::fraction(a.train_fraction, g.seed);
    const Split sp = split(data.node_count(), data.labels, ss);
    Rng init = make_rng(g.seed, 21);
    auto model = make_model(spec, ModelDims::of(data), init);
    a.train.seed = g.seed;
    const History h = train(*model, data, sp, a.train);

    const std::string path = output_or(g, "history.csv");
    {
        auto f = open_output(path);
        write_history_csv(f, h);
    }
    const std::string ckpt = a.checkpoint.empty() ? path + ".ckpt.json" : a.checkpoint;
    save_checkpoint(ckpt, *model);
    out << "model=" << to_string(spec.kind) << " epochs=" << h.epochs.size() << " loss=" << format_double(h.last().loss)
        << " train_acc=" << format_double(h.last().train_acc) << " test_acc=" << format_double(h.last().test_acc)
        << " history=" << path << " checkpoint=" << ckpt << '\n';
}

// -- scenario -------------------------------------------------------------------------

struct ScenarioArgs {
    ScenarioSpec spec;
    std::vector<std::string> models{"gcn", "pdn"};
};

void cmd_scenario(const GlobalOptions& g, ScenarioArgs a, std::ostream& out) {
    a.spec.base.seed = g.seed;
    a.spec.models.clear();
    for (const auto& m : a.models) a.spec.models.push_back(parse_model_kind(m));
    a.spec.validate();
    const std::string path = output_or(g, "scenario.csv");
    auto f = open_output(path);
    ScenarioCsv csv(f);
    const auto records = run_scenario(a.spec, [&](const RunRecord& r) { csv.record(r); });
    const auto summary = summarize(records);
    csv.summary(summary, a.spec.name, a.spec.parameter);
    for (const auto& s : summary) {
        out << a.spec.parameter << '=' << format_double(s.value) << " model=" << to_string(s.model)
            << " mean=" << std::fixed << std::setprecision(4) << s.mean << " std=" << s.std << std::defaultfloat
            << " runs=" << s.runs << '\n';
    }
    out << "records=" << records.size() << " file=" << path << '\n';
}

// -- xor-demo -----------------------------------------------------------------------

struct XorArgs {
    XorExperimentConfig config;
    int seeds = 10;
    bool table_only = false;
};

int cmd_xor(const GlobalOptions& g, XorArgs a, std::ostream& out, std::ostream& err) {
    const auto table = xor_truth_table();
    const std::array<double, 4> expected{0, 1, 1, 0};
    bool exact = true;
    out << "a b h1 h2 alpha\n";
    for (Index i = 0; i < 4; ++i) {
        const auto& r = table[i];
        out << r.a << ' ' << r.b << ' ' << r.h1 << ' ' << r.h2 << ' ' << r.alpha << '\n';
        exact = exact && r.alpha == expected[i];
    }
    exact = exact && table[3].h1 == 2.0 && table[3].h2 == 1.0;
    if (!exact) {
        err << "pdn: error: xor: reference module does not reproduce the truth table\n";
        return 1;
    }
    out << "truth_table=exact\n";
    if (a.table_only) return 0;

    a.config.seeds.clear();
    for (int s = 0; s < a.seeds; ++s) a.config.seeds.push_back(g.seed + static_cast<std::uint64_t>(s));
    const auto outcomes = run_xor_experiment(a.config);
    std::unique_ptr<std::ofstream> file;
    std::unique_ptr<CsvWriter> csv;
    if (!g.out.empty()) {
        file = std::make_unique<std::ofstream>(open_output(g.out));
        csv = std::make_unique<CsvWriter>(*file, "xor", 1, std::vector<std::string>{"seed", "pdn_acc", "gcn_acc"});
    }
    double pdn_mean = 0.0;
    double gcn_mean = 0.0;
    int wins = 0;
    for (const auto& o : outcomes) {
        out << "seed=" << o.seed << " pdn_acc=" << format_double(o.pdn_acc) << " gcn_acc=" << format_double(o.gcn_acc)
            << '\n';
        if (csv) csv->row({std::to_string(o.seed), format_double(o.pdn_acc), format_double(o.gcn_acc)});
        pdn_mean += o.pdn_acc / static_cast<double>(outcomes.size());
        gcn_mean += o.gcn_acc / static_cast<double>(outcomes.size());
        if (o.pdn_acc > o.gcn_acc) ++wins;
    }
    out << "pdn_mean=" << format_double(pdn_mean) << " gcn_mean=" << format_double(gcn_mean) << " pdn_wins=" << wins
        << '/' << outcomes.size() << '\n';
    return 0;
}

// -- runtime -------------------------------------------------------------------------

void cmd_runtime(const GlobalOptions& g, RuntimeConfig c, std::ostream& out) {
    c.seed = g.seed;
    const auto records = run_runtime_benchmark(c);
    const std::string path = output_or(g, "runtime.csv");
    {
        auto f = open_output(path);
        write_runtime_csv(f, records);
    }
    for (const auto& r : records) {
        out << "nodes=" << r.nodes << " edges=" << r.edges << " model=" << r.model
            << " seconds_per_epoch=" << format_double(r.seconds_per_epoch) << " relative=" << std::fixed
            << std::setprecision(3) << r.relative << std::defaultfloat << '\n';
    }
    out << "file=" << path << '\n';
}

// -- attention ----------------------------------------------------------------------

struct AttentionArgs {
    std::string mode = "multiscale";
    std::string dataset;
    Index hops = 5;
    int repetitions = 10;
    Index shots = 100;
    TrainConfig train;
};

void cmd_attention(const GlobalOptions& g, AttentionArgs a, std::ostream& out) {
    const GraphData data = load_dataset(a.dataset).to_graph_data();
    const std::string path = output_or(g, "attention_" + a.mode + ".csv");
    if (a.mode == "multiscale") {
        MultiscaleAttentionConfig c;
        c.hops = a.hops;
        c.repetitions = a.repetitions;
        c.train = a.train;
        c.split = SplitSpec::per_class(a.shots);
        c.seed = g.seed;
        const auto res = run_multiscale_attention(data, c);
        auto f = open_output(path);
        write_multiscale_trace_csv(f, res);
        out << "final_mean";
        for (Index i = 0; i < c.hops; ++i) out << " P" << i + 1 << '=' << format_double(res.mean_trace.back()[i]);
        out << "\nfirst_hop_max=" << res.first_hop_wins() << '/' << res.final_weights.size()
            << " max_sum_error=" << format_double(res.max_sum_error) << " file=" << path << '\n';
    } else if (a.mode == "linear") {
        LinearAttentionConfig c;
        c.repetitions = a.repetitions;
        c.train = a.train;
        c.split = SplitSpec::per_class(a.shots);
        c.seed = g.seed;
        const auto res = run_linear_attention(data, c);
        auto f = open_output(path);
        write_linear_attention_csv(f, res);
        for (Index i = 0; i < res.metrics.size(); ++i) {
            out << res.metrics[i] << '=' << format_double(res.mean_attention[i]) << '\n';
        }
        out << "max_sum_error=" << format_double(res.max_sum_error) << " file=" << path << '\n';
    } else {
        throw std::invalid_argument("attention mode must be multiscale or linear");
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"pathfinder networks on multiplex graphs", "pdn"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value config file mirroring the command-line flags");

    GlobalOptions g;
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--out", g.out, "output file");

    GenerateArgs gen;
    auto* generate_cmd = app.add_subcommand("generate", "write a synthetic multiplex dataset");
    add_generator_flags(*generate_cmd, gen.config);

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "train one model on a dataset file");
    train_cmd->add_option("--dataset", tr.dataset, "dataset file")->required();
    train_cmd->add_option("--model", tr.model, "gcn|pdn|pdn_edgeconv|pdn_multiscale|pdn_linear")->capture_default_str();
    train_cmd->add_option("--hidden", tr.hidden, "pathfinder hidden sizes")->delimiter(',')->capture_default_str();
    train_cmd->add_option("--output-activation", tr.output_activation, "sigmoid|relu|softplus|identity")
        ->capture_default_str();
    train_cmd->add_option("--hops", tr.hops, "multi-scale powers or edge-conv hop graphs")->capture_default_str();
    train_cmd->add_flag("--no-self-loops", tr.no_self_loops, "do not add self-loops before normalisation");
    train_cmd->add_option("--train-fraction", tr.train_fraction, "fraction of nodes used for training")
        ->capture_default_str();
    train_cmd->add_option("--shots", tr.shots, "labelled nodes per class (overrides --train-fraction)");
    train_cmd->add_option("--checkpoint", tr.checkpoint, "checkpoint path (default <out>.ckpt.json)");
    add_train_flags(*train_cmd, tr.train);

    ScenarioArgs sc;
    auto* scenario_cmd = app.add_subcommand("scenario", "sweep one generator parameter");
    scenario_cmd->add_option("--name", sc.spec.name, "scenario label")->capture_default_str();
    scenario_cmd->add_option("--param", sc.spec.parameter, "C|n|P|Q|F|D|sigma_F|sigma_D")->capture_default_str();
    scenario_cmd->add_option("--values", sc.spec.values, "sweep values")->delimiter(',')->capture_default_str();
    scenario_cmd->add_option("--repetitions", sc.spec.repetitions, "datasets per value")->capture_default_str();
    scenario_cmd->add_option("--models", sc.models, "models to train")->delimiter(',')->capture_default_str();
    scenario_cmd->add_option("--train-fraction", sc.spec.train_fraction, "train fraction")->capture_default_str();
    scenario_cmd->add_option("--workers", sc.spec.workers, "parallel repetitions (0 = all cores)");
    add_generator_flags(*scenario_cmd, sc.spec.base);
    add_train_flags(*scenario_cmd, sc.spec.train);

    XorArgs xr;
    auto* xor_cmd = app.add_subcommand("xor-demo", "exclusive-or truth table and learnability run");
    xor_cmd->add_option("--nodes", xr.config.task.nodes, "task nodes")->capture_default_str();
    xor_cmd->add_option("--seeds", xr.seeds, "number of seeds")->capture_default_str();
    xor_cmd->add_option("--hidden", xr.config.hidden, "pathfinder hidden neurons")->capture_default_str();
    xor_cmd->add_flag("--table-only", xr.table_only, "print the truth table only");
    add_train_flags(*xor_cmd, xr.config.train);

    RuntimeConfig rt;
    auto* runtime_cmd = app.add_subcommand("runtime", "epoch time of PDNs relative to a GCN");
    runtime_cmd->add_option("--nodes", rt.node_counts, "node counts")->delimiter(',')->capture_default_str();
    runtime_cmd->add_option("--k", rt.k, "lattice degree")->capture_default_str();
    runtime_cmd->add_option("--p", rt.p, "rewiring probability")->capture_default_str();
    runtime_cmd->add_option("--F", rt.F, "node feature dimension")->capture_default_str();
    runtime_cmd->add_option("--D", rt.D, "edge feature dimension")->capture_default_str();
    runtime_cmd->add_option("--C", rt.C, "classes")->capture_default_str();
    runtime_cmd->add_option("--epochs", rt.epochs, "timed epochs per round")->capture_default_str();
    runtime_cmd->add_option("--warmup", rt.warmup, "untimed warm-up epochs")->capture_default_str();
    runtime_cmd->add_option("--rounds", rt.rounds, "timed rounds per model")->capture_default_str();

    AttentionArgs at;
    auto* attention_cmd = app.add_subcommand("attention", "attention traces of interpretable PDNs");
    attention_cmd->add_option("--mode", at.mode, "multiscale|linear")->capture_default_str();
    attention_cmd->add_option("--dataset", at.dataset, "dataset file")->required();
    attention_cmd->add_option("--hops", at.hops, "adjacency powers (multiscale)")->capture_default_str();
    attention_cmd->add_option("--repetitions", at.repetitions, "training runs")->capture_default_str();
    attention_cmd->add_option("--shots", at.shots, "labelled nodes per class")->capture_default_str();
    add_train_flags(*attention_cmd, at.train);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "pdn: error: usage: " << one_line(e.what()) << '\n';
        return 2;
    }

    try {
        if (*generate_cmd) cmd_generate(g, gen, out);
        else if (*train_cmd) cmd_train(g, tr, out);
        else if (*scenario_cmd) cmd_scenario(g, sc, out);
        else if (*xor_cmd) return cmd_xor(g, xr, out, err);
        else if (*runtime_cmd) cmd_runtime(g, rt, out);
        else if (*attention_cmd) cmd_attention(g, at, out);
        return 0;
    } catch (const FormatError& e) {
        err << "pdn: error: format: " << one_line(e.what()) << '\n';
    } catch (const TrainingError& e) {
        err << "pdn: error: training: " << one_line(e.what()) << '\n';
    } catch (const std::invalid_argument& e) {
        err << "pdn: error: invalid-argument: " << one_line(e.what()) << '\n';
    } catch (const std::bad_alloc&) {
        err << "pdn: error: memory: allocation failed; reduce problem size\n";
    } catch (const std::exception& e) {
        err << "pdn: error: runtime: " << one_line(e.what()) << '\n';
    }
    return 1;
}

}  // namespace pdn
