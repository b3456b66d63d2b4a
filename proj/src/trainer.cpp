#include "pdn/trainer.hpp"

#include <cmath>
#include <numeric>

namespace pdn {

namespace {

constexpr std::uint64_t kDropoutStream = 0x64726f70;

double frobenius(const DenseMatrix& m) {
    double s = 0.0;
    for (const double v : m.values()) s += v * v;
    return std::sqrt(s);
}

std::string format_error(int epoch, const std::string& param, double norm) {
    return "training diverged at epoch " + std::to_string(epoch) + ": parameter '" + param + "' norm " +
           std::to_string(norm);
}

void check_finite(int epoch, const std::vector<Parameter*>& params) {
    for (const auto* p : params) {
        if (!p->value.all_finite() || !p->grad.all_finite()) {
            throw TrainingError(epoch, p->name, frobenius(p->value));
        }
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be > 0");
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("train config: dropout must lie in [0, 1)");
    if (!(l2 >= 0.0)) throw std::invalid_argument("train config: l2 must be >= 0");
}

TrainingError::TrainingError(int e, std::string p, double n)
    : std::runtime_error(format_error(e, p, n)), epoch(e), param(std::move(p)), norm(n) {}

void AdamState::step(std::span<Parameter* const> params, double lr) {
    ++step_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    for (Parameter* p : params) {
        if (!p->grad.same_shape(p->value)) throw ShapeError("adam: grad shape differs from '" + p->name + "'");
        auto [it, fresh] = moments_.try_emplace(p);
        Moments& mo = it->second;
        if (fresh) {
            mo.m = DenseMatrix(p->value.rows(), p->value.cols());
            mo.v = DenseMatrix(p->value.rows(), p->value.cols());
        } else if (!mo.m.same_shape(p->value)) {
            throw ShapeError("adam: parameter '" + p->name + "' changed shape");
        }
        auto val = p->value.values();
        const auto g = p->grad.values();
        auto m = mo.m.values();
        auto v = mo.v.values();
        for (Index i = 0; i < val.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            val[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }
}

void adam_step(std::span<Parameter* const> params, AdamState& state, double lr) { state.step(params, lr); }

Index Split::train_count() const {
    return static_cast<Index>(std::count(train.begin(), train.end(), std::uint8_t{1}));
}
Index Split::test_count() const {
    return static_cast<Index>(std::count(test.begin(), test.end(), std::uint8_t{1}));
}

Split split(Index n_nodes, std::span<const int> labels, const SplitSpec& spec) {
    if (labels.size() != n_nodes) throw ShapeError("split: labels length != node count");
    Rng rng = make_rng(spec.seed, 0x73706c74);
    Split out{std::vector<std::uint8_t>(n_nodes, 0), std::vector<std::uint8_t>(n_nodes, 1)};
    if (spec.mode == SplitSpec::Mode::fraction) {
        if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
            throw std::invalid_argument("split: train fraction must lie in (0, 1)");
        }
        std::vector<Index> order(n_nodes);
        std::iota(order.begin(), order.end(), Index{0});
        std::shuffle(order.begin(), order.end(), rng);
        const auto n_train = static_cast<Index>(std::llround(spec.train_fraction * static_cast<double>(n_nodes)));
        for (Index i = 0; i < n_train; ++i) {
            out.train[order[i]] = 1;
            out.test[order[i]] = 0;
        }
        return out;
    }
    if (spec.per_class_k < 1) throw std::invalid_argument("split: k must be >= 1");
    const int classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    for (int c = 0; c < classes; ++c) {
        std::vector<Index> members;
        for (Index i = 0; i < n_nodes; ++i) {
            if (labels[i] == c) members.push_back(i);
        }
        if (members.size() < spec.per_class_k) {
            throw std::invalid_argument("split: k=" + std::to_string(spec.per_class_k) + " exceeds the size " +
                                        std::to_string(members.size()) + " of class " + std::to_string(c));
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (Index i = 0; i < spec.per_class_k; ++i) {
            out.train[members[i]] = 1;
            out.test[members[i]] = 0;
        }
    }
    return out;
}

double accuracy(const DenseMatrix& logits, std::span<const int> labels, std::span<const std::uint8_t> mask) {
    if (labels.size() != logits.rows() || mask.size() != logits.rows()) {
        throw ShapeError("accuracy: labels/mask length != logit rows");
    }
    Index total = 0;
    Index correct = 0;
    for (Index r = 0; r < logits.rows(); ++r) {
        if (!mask[r]) continue;
        ++total;
        const auto row = logits.row(r);
        const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        if (best == labels[r]) ++correct;
    }
    if (total == 0) throw std::invalid_argument("accuracy: empty mask");
    return static_cast<double>(correct) / static_cast<double>(total);
}

double train_step(Model& model, const GraphData& data, const Split& split, AdamState& adam,
                  const TrainConfig& config, Rng& rng) {
    const auto params = model.parameters();
    for (auto* p : params) p->zero_grad();
    Tape tape;
    const Value logits = model.forward(tape, data, true, rng);
    Value loss = ad::softmax_cross_entropy(logits, data.labels, split.train);
    if (config.l2 > 0.0) {
        std::vector<Value> handles;
        handles.reserve(params.size());
        for (auto* p : params) handles.push_back(tape.parameter(*p));
        loss = ad::add(loss, ad::l2_penalty(handles, config.l2));
    }
    tape.backward(loss);
    adam.step(params, config.lr);
    return loss.scalar();
}

History train(Model& model, const GraphData& data, const Split& split, const TrainConfig& config) {
    config.validate();
    if (split.train.size() != data.node_count() || split.test.size() != data.node_count()) {
        throw ShapeError("train: split does not match the node count");
    }
    model.set_dropout(config.dropout);
    AdamState adam;
    Rng rng = make_rng(config.seed, kDropoutStream);
    History history;
    history.epochs.reserve(static_cast<Index>(config.epochs));
    const auto params = model.parameters();
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double penalised = train_step(model, data, split, adam, config, rng);
        if (!std::isfinite(penalised)) {
            double worst = 0.0;
            std::string name = params.empty() ? "" : params.front()->name;
            for (const auto* p : params) {
                const double n = frobenius(p->value);
                if (!(n <= worst)) {
                    worst = n;
                    name = p->name;
                }
            }
            throw TrainingError(epoch, name, worst);
        }
        check_finite(epoch, params);

        Tape tape;
        const Value logits = model.forward(tape, data, false, rng);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = ad::softmax_cross_entropy(logits, data.labels, split.train).scalar();
        rec.train_acc = accuracy(logits.data(), data.labels, split.train);
        rec.test_acc = split.test_count() > 0 ? accuracy(logits.data(), data.labels, split.test) : 0.0;
        rec.attention = model.attention();
        history.epochs.push_back(std::move(rec));
    }
    return history;
}

}  // namespace pdn
