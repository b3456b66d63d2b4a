#include "pdn/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace pdn {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    return v;
}

namespace {

Index parse_index(std::string_view s) {
    Index v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a non-negative integer: '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        const auto next = line.find(' ', pos);
        const auto end = next == std::string_view::npos ? line.size() : next;
        out.push_back(line.substr(pos, end - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::vector<std::string_view> next() {
        if (!std::getline(in_, line_)) fail("unexpected end of file");
        ++number_;
        if (!line_.empty() && line_.back() == '\r') line_.pop_back();
        return tokens(line_);
    }

    /// "key value" line with a fixed key.
    std::string_view keyed(std::string_view key) {
        const auto t = next();
        if (t.size() != 2 || t[0] != key) fail("expected '" + std::string(key) + " <value>'");
        return t[1];
    }

    void expect(std::string_view word) {
        const auto t = next();
        if (t.size() != 1 || t[0] != word) fail("expected '" + std::string(word) + "'");
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError("dataset line " + std::to_string(number_) + ": " + what);
    }

    template <typename F>
    auto guard(F&& f) -> decltype(f()) {
        try {
            return f();
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
    }

private:
    std::istream& in_;
    std::string line_;
    Index number_ = 0;
};

constexpr std::string_view kDatasetMagic = "pdn-dataset";
constexpr int kDatasetVersion = 1;

}  // namespace

void write_dataset(std::ostream& out, const SyntheticDataset& ds) {
    const auto& cfg = ds.config;
    out << kDatasetMagic << ' ' << kDatasetVersion << '\n';
    out << "nodes " << ds.node_count() << '\n';
    out << "classes " << ds.num_classes << '\n';
    out << "node_features " << ds.node_features.cols() << '\n';
    out << "edge_features " << ds.edge_features.cols() << '\n';
    out << "edges " << ds.edges.edges.size() << '\n';
    out << "config C " << cfg.C << '\n';
    out << "config n " << cfg.n << '\n';
    out << "config P " << format_double(cfg.P) << '\n';
    out << "config Q " << format_double(cfg.Q) << '\n';
    out << "config F " << cfg.F << '\n';
    out << "config D " << cfg.D << '\n';
    out << "config sigma_F " << format_double(cfg.sigma_F) << '\n';
    out << "config sigma_D " << format_double(cfg.sigma_D) << '\n';
    out << "config seed " << cfg.seed << '\n';
    out << "labels\n";
    for (const int l : ds.labels) out << l << '\n';
    out << "node_features\n";
    for (Index r = 0; r < ds.node_features.rows(); ++r) {
        for (Index c = 0; c < ds.node_features.cols(); ++c) {
            if (c) out << ' ';
            out << format_double(ds.node_features(r, c));
        }
        out << '\n';
    }
    out << "edges\n";
    for (Index e = 0; e < ds.edges.edges.size(); ++e) {
        out << ds.edges.edges[e].u << ' ' << ds.edges.edges[e].v << ' ' << (ds.edges.inter[e] ? "inter" : "intra");
        for (Index c = 0; c < ds.edge_features.cols(); ++c) out << ' ' << format_double(ds.edge_features(e, c));
        out << '\n';
    }
}

void save_dataset(const std::filesystem::path& path, const SyntheticDataset& ds) {
    auto out = open_output(path);
    write_dataset(out, ds);
    out.flush();
    if (!out) throw std::runtime_error("failed writing dataset to " + path.string());
}

SyntheticDataset read_dataset(std::istream& in) {
    LineReader rd(in);
    {
        const auto t = rd.next();
        if (t.size() != 2 || t[0] != kDatasetMagic) rd.fail("not a pdn-dataset file");
        if (t[1] != std::to_string(kDatasetVersion)) rd.fail("unsupported dataset version " + std::string(t[1]));
    }
    SyntheticDataset ds;
    const Index n = rd.guard([&] { return parse_index(rd.keyed("nodes")); });
    const Index classes = rd.guard([&] { return parse_index(rd.keyed("classes")); });
    const Index f = rd.guard([&] { return parse_index(rd.keyed("node_features")); });
    const Index d = rd.guard([&] { return parse_index(rd.keyed("edge_features")); });
    const Index m = rd.guard([&] { return parse_index(rd.keyed("edges")); });
    if (classes < 2) rd.fail("need at least two classes");
    ds.num_classes = static_cast<int>(classes);
    ds.config.C = ds.num_classes;
    ds.config.F = f;
    ds.config.D = d;

    while (true) {
        const auto t = rd.next();
        if (t.size() == 1 && t[0] == "labels") break;
        if (t.size() != 3 || t[0] != "config") rd.fail("expected 'config <key> <value>' or 'labels'");
        rd.guard([&] {
            auto& c = ds.config;
            if (t[1] == "C") c.C = static_cast<int>(parse_index(t[2]));
            else if (t[1] == "n") c.n = parse_index(t[2]);
            else if (t[1] == "P") c.P = parse_double(t[2]);
            else if (t[1] == "Q") c.Q = parse_double(t[2]);
            else if (t[1] == "F") c.F = parse_index(t[2]);
            else if (t[1] == "D") c.D = parse_index(t[2]);
            else if (t[1] == "sigma_F") c.sigma_F = parse_double(t[2]);
            else if (t[1] == "sigma_D") c.sigma_D = parse_double(t[2]);
            else if (t[1] == "seed") c.seed = parse_index(t[2]);
            return 0;
        });
    }

    ds.labels.resize(n);
    for (Index i = 0; i < n; ++i) {
        const auto t = rd.next();
        if (t.size() != 1) rd.fail("expected one label");
        const Index l = rd.guard([&] { return parse_index(t[0]); });
        if (l >= classes) rd.fail("label out of range");
        ds.labels[i] = static_cast<int>(l);
    }

    rd.expect("node_features");
    ds.node_features = DenseMatrix(n, f);
    for (Index i = 0; i < n; ++i) {
        const auto t = rd.next();
        if (t.size() != f) rd.fail("expected " + std::to_string(f) + " node feature values");
        for (Index c = 0; c < f; ++c) ds.node_features(i, c) = rd.guard([&] { return parse_double(t[c]); });
    }

    rd.expect("edges");
    ds.edge_features = DenseMatrix(m, d);
    ds.edges.edges.reserve(m);
    ds.edges.inter.reserve(m);
    for (Index e = 0; e < m; ++e) {
        const auto t = rd.next();
        if (t.size() != d + 3) rd.fail("expected 'u v intra|inter' and " + std::to_string(d) + " edge features");
        const Index u = rd.guard([&] { return parse_index(t[0]); });
        const Index v = rd.guard([&] { return parse_index(t[1]); });
        if (u >= n || v >= n || u == v) rd.fail("invalid edge endpoints");
        if (t[2] != "intra" && t[2] != "inter") rd.fail("edge class must be intra or inter");
        const bool inter = t[2] == "inter";
        if (inter == (ds.labels[u] == ds.labels[v])) rd.fail("edge class disagrees with endpoint labels");
        ds.edges.edges.push_back({u, v});
        ds.edges.inter.push_back(inter ? 1 : 0);
        for (Index c = 0; c < d; ++c) ds.edge_features(e, c) = rd.guard([&] { return parse_double(t[c + 3]); });
    }
    if (!ds.node_features.all_finite() || !ds.edge_features.all_finite()) {
        throw FormatError("dataset: non-finite feature value");
    }
    return ds;
}

SyntheticDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset " + path.string());
    return read_dataset(in);
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

constexpr std::string_view kCheckpointFormat = "pdn-checkpoint";
constexpr int kCheckpointVersion = 1;

json spec_to_json(const ModelSpec& s) {
    return json{{"kind", std::string(to_string(s.kind))},
                {"pathfinder_hidden", s.pathfinder_hidden},
                {"pathfinder_output", std::string(ad::to_string(s.pathfinder_output))},
                {"gcn_hidden", s.gcn_hidden},
                {"self_loops", s.self_loops},
                {"hops", s.hops},
                {"edgeconv_hidden", s.edgeconv_hidden},
                {"edgeconv_embedding", std::string(ad::to_string(s.edgeconv_embedding))},
                {"edgeconv_score", std::string(ad::to_string(s.edgeconv_score))},
                {"edgeconv_combine", std::string(ad::to_string(s.edgeconv_combine))}};
}

ModelSpec spec_from_json(const json& j) {
    ModelSpec s;
    s.kind = parse_model_kind(j.at("kind").get<std::string>());
    s.pathfinder_hidden = j.at("pathfinder_hidden").get<std::vector<Index>>();
    s.pathfinder_output = ad::parse_activation(j.at("pathfinder_output").get<std::string>());
    s.gcn_hidden = j.at("gcn_hidden").get<Index>();
    s.self_loops = j.at("self_loops").get<bool>();
    s.hops = j.at("hops").get<Index>();
    s.edgeconv_hidden = j.at("edgeconv_hidden").get<Index>();
    s.edgeconv_embedding = ad::parse_activation(j.at("edgeconv_embedding").get<std::string>());
    s.edgeconv_score = ad::parse_activation(j.at("edgeconv_score").get<std::string>());
    s.edgeconv_combine = ad::parse_activation(j.at("edgeconv_combine").get<std::string>());
    return s;
}

}  // namespace

std::string checkpoint_json(Model& model) {
    json params = json::array();
    for (const auto* p : model.parameters()) {
        const auto v = p->value.values();
        params.push_back({{"name", p->name},
                          {"rows", p->value.rows()},
                          {"cols", p->value.cols()},
                          {"values", std::vector<double>(v.begin(), v.end())}});
    }
    const auto& d = model.dims();
    json j{{"format", kCheckpointFormat},
           {"version", kCheckpointVersion},
           {"model", spec_to_json(model.spec())},
           {"dims", {{"node_features", d.node_features}, {"edge_features", d.edge_features}, {"classes", d.classes}}},
           {"parameters", params}};
    return j.dump(1) + "\n";
}

void save_checkpoint(const std::filesystem::path& path, Model& model) {
    auto out = open_output(path);
    out << checkpoint_json(model);
    out.flush();
    if (!out) throw std::runtime_error("failed writing checkpoint to " + path.string());
}

std::unique_ptr<Model> load_checkpoint_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
        if (j.at("format").get<std::string>() != kCheckpointFormat) throw FormatError("checkpoint: wrong format tag");
        if (j.at("version").get<int>() != kCheckpointVersion) throw FormatError("checkpoint: unsupported version");
        const ModelSpec spec = spec_from_json(j.at("model"));
        const auto& jd = j.at("dims");
        const ModelDims dims{jd.at("node_features").get<Index>(), jd.at("edge_features").get<Index>(),
                             jd.at("classes").get<Index>()};
        Rng rng = make_rng(0);
        auto model = make_model(spec, dims, rng);
        auto params = model->parameters();
        const auto& jp = j.at("parameters");
        if (jp.size() != params.size()) throw FormatError("checkpoint: parameter count mismatch");
        for (Index i = 0; i < params.size(); ++i) {
            const auto& e = jp[i];
            if (e.at("name").get<std::string>() != params[i]->name) {
                throw FormatError("checkpoint: expected parameter '" + params[i]->name + "'");
            }
            const auto rows = e.at("rows").get<Index>();
            const auto cols = e.at("cols").get<Index>();
            auto values = e.at("values").get<std::vector<double>>();
            if (rows != params[i]->value.rows() || cols != params[i]->value.cols() || values.size() != rows * cols) {
                throw FormatError("checkpoint: shape mismatch for '" + params[i]->name + "'");
            }
            params[i]->value = DenseMatrix(rows, cols, std::move(values));
            params[i]->grad = DenseMatrix(rows, cols);
        }
        return model;
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
}

std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return load_checkpoint_json(ss.str());
}

// ---------------------------------------------------------------------------

CsvWriter::CsvWriter(std::ostream& out, std::string_view schema, int version, std::vector<std::string> columns)
    : out_(&out), columns_(std::move(columns)) {
    *out_ << "# pdn-" << schema << " v" << version << '\n';
    row(columns_);
}

void CsvWriter::row(const std::vector<std::string>& cells) { row_to(*out_, columns_.size(), cells); }

void CsvWriter::row_to(std::ostream& out, Index expected, const std::vector<std::string>& cells) {
    if (cells.size() != expected) {
        throw std::logic_error("csv: row has " + std::to_string(cells.size()) + " cells, schema has " +
                               std::to_string(expected));
    }
    for (Index i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << cells[i];
    }
    out << '\n';
    out.flush();
}

void write_history_csv(std::ostream& out, const History& history) {
    std::vector<std::string> cols{"epoch", "loss", "train_acc", "test_acc"};
    const Index k = history.epochs.empty() ? 0 : history.epochs.front().attention.size();
    for (Index i = 1; i <= k; ++i) cols.push_back("attention_" + std::to_string(i));
    CsvWriter csv(out, "history", kHistorySchemaVersion, std::move(cols));
    for (const auto& e : history.epochs) {
        std::vector<std::string> cells{std::to_string(e.epoch), format_double(e.loss), format_double(e.train_acc),
                                       format_double(e.test_acc)};
        for (const double a : e.attention) cells.push_back(format_double(a));
        csv.row(cells);
    }
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace pdn
