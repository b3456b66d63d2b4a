#include "helpers.hpp"

#include <cstring>

#include "pdn/synthgen.hpp"
#include "pdn/trainer.hpp"

using namespace pdn;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_history(const History& a, const History& b) {
    if (a.epochs.size() != b.epochs.size()) return false;
    for (std::size_t i = 0; i < a.epochs.size(); ++i) {
        const auto& x = a.epochs[i];
        const auto& y = b.epochs[i];
        if (!same_bits(x.loss, y.loss) || !same_bits(x.train_acc, y.train_acc) || !same_bits(x.test_acc, y.test_acc)) {
            return false;
        }
        if (x.attention.size() != y.attention.size()) return false;
        for (std::size_t k = 0; k < x.attention.size(); ++k) {
            if (!same_bits(x.attention[k], y.attention[k])) return false;
        }
    }
    return true;
}

SyntheticConfig small_config(std::uint64_t seed) {
    SyntheticConfig c;
    c.n = 60;
    c.F = 8;
    c.D = 6;
    c.P = 0.15;
    c.Q = 0.05;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("Adam") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        Parameter p("p", DenseMatrix::from_rows({{1.5, -2.0}}));
        AdamState s;
        for (int i = 0; i < 5; ++i) adam_step(std::vector<Parameter*>{&p}, s, 0.1);
        CHECK(p.value == DenseMatrix::from_rows({{1.5, -2.0}}));
        CHECK(s.steps() == 5);
    }
    SUBCASE("first step size") {
        for (const double g : {1e-3, 0.5, -3.0, 40.0}) {
            Parameter p("p", DenseMatrix(1, 1, 0.0));
            p.grad(0, 0) = g;
            AdamState s;
            const double lr = 0.01;
            adam_step(std::vector<Parameter*>{&p}, s, lr);
            const double step = std::abs(p.value(0, 0));
            // closed form with eps added to the corrected second moment
            CHECK(std::abs(step - lr * std::abs(g) / (std::abs(g) + s.eps)) <= 1e-15);
            // closed form with eps added before bias correction; the two agree to O(lr * eps / |g|)
            const double alt = lr * std::abs(g) / (std::abs(g) + s.eps * std::sqrt(1 - s.beta2) / (1 - s.beta1));
            CHECK(std::abs(step - alt) <= 2.0 * lr * s.eps / std::abs(g));
            CHECK(std::abs(step - lr) <= 1e-4 * lr);
            CHECK((p.value(0, 0) < 0) == (g > 0));
        }
    }
    SUBCASE("minimises x^2") {
        Parameter x("x", DenseMatrix(1, 1, 1.0));
        AdamState s;
        for (int i = 0; i < 500; ++i) {
            x.grad(0, 0) = 2.0 * x.value(0, 0);
            adam_step(std::vector<Parameter*>{&x}, s, 0.1);
        }
        CHECK(std::abs(x.value(0, 0)) < 1e-3);
    }
    SUBCASE("registration order does not matter") {
        Rng rng = make_rng(1);
        const auto a0 = testing::random_dense(3, 2, rng);
        const auto b0 = testing::random_dense(2, 2, rng);
        Parameter a1("a", a0), b1("b", b0), a2("a", a0), b2("b", b0);
        AdamState s1, s2;
        for (int i = 0; i < 20; ++i) {
            const auto ga = testing::random_dense(3, 2, rng);
            const auto gb = testing::random_dense(2, 2, rng);
            a1.grad = ga;
            a2.grad = ga;
            b1.grad = gb;
            b2.grad = gb;
            adam_step(std::vector<Parameter*>{&a1, &b1}, s1, 0.05);
            adam_step(std::vector<Parameter*>{&b2, &a2}, s2, 0.05);
        }
        CHECK(a1.value == a2.value);
        CHECK(b1.value == b2.value);
    }
}

TEST_CASE("splits") {
    std::vector<int> labels(1500);
    for (Index i = 0; i < 1500; ++i) labels[i] = static_cast<int>(i % 3);

    const auto s = split(1500, labels, SplitSpec::fraction(0.8, 4));
    CHECK(s.train_count() == 1200);
    CHECK(s.test_count() == 300);
    for (Index i = 0; i < 1500; ++i) CHECK(s.train[i] + s.test[i] == 1);

    const auto again = split(1500, labels, SplitSpec::fraction(0.8, 4));
    CHECK(again.train == s.train);
    CHECK(split(1500, labels, SplitSpec::fraction(0.8, 5)).train != s.train);

    const auto one = split(1500, labels, SplitSpec::per_class(1, 2));
    CHECK(one.train_count() == 3);
    const auto hundred = split(1500, labels, SplitSpec::per_class(100, 2));
    CHECK(hundred.train_count() == 300);
    CHECK(hundred.test_count() == 1200);
    for (int c = 0; c < 3; ++c) {
        Index k = 0;
        for (Index i = 0; i < 1500; ++i) k += (hundred.train[i] && labels[i] == c) ? 1 : 0;
        CHECK(k == 100);
    }
    CHECK_THROWS_AS(split(1500, labels, SplitSpec::per_class(501)), std::invalid_argument);
    CHECK_THROWS_AS(split(1500, labels, SplitSpec::fraction(1.5)), std::invalid_argument);
    CHECK_THROWS_AS(split(10, labels, SplitSpec::fraction(0.5)), std::invalid_argument);
}

TEST_CASE("accuracy") {
    const std::vector<int> labels{0, 2, 1, 1};
    const std::vector<std::uint8_t> all{1, 1, 1, 1};
    DenseMatrix onehot(4, 3);
    for (Index r = 0; r < 4; ++r) onehot(r, static_cast<Index>(labels[r])) = 1.0;
    CHECK(accuracy(onehot, labels, all) == 1.0);
    CHECK(accuracy(DenseMatrix(4, 3, 0.7), labels, all) == 0.25);
    const std::vector<std::uint8_t> some{0, 1, 0, 1};
    CHECK(accuracy(onehot, labels, some) == 1.0);
    const std::vector<std::uint8_t> none{0, 0, 0, 0};
    CHECK_THROWS_AS(accuracy(onehot, labels, none), std::invalid_argument);

    Rng rng = make_rng(2);
    const auto z = testing::random_dense(100, 4, rng);
    std::vector<int> y(100);
    std::vector<std::uint8_t> mask(100);
    for (Index r = 0; r < 100; ++r) {
        y[r] = std::uniform_int_distribution<int>(0, 3)(rng);
        mask[r] = r % 3 != 0;
    }
    Index hit = 0;
    Index total = 0;
    for (Index r = 0; r < 100; ++r) {
        if (!mask[r]) continue;
        Index best = 0;
        for (Index c = 1; c < 4; ++c) {
            if (z(r, c) > z(r, best)) best = c;
        }
        hit += best == static_cast<Index>(y[r]) ? 1 : 0;
        ++total;
    }
    CHECK(accuracy(z, y, mask) == static_cast<double>(hit) / static_cast<double>(total));
}

TEST_CASE("train config validation") {
    TrainConfig c;
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.lr = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    const auto data = generate(small_config(0)).to_graph_data();
    Rng rng = make_rng(0);
    auto model = make_model(ModelSpec{}, ModelDims::of(data), rng);
    TrainConfig zero;
    zero.epochs = 0;
    CHECK_THROWS_AS(train(*model, data, split(data.node_count(), data.labels, SplitSpec{}), zero),
                    std::invalid_argument);
}

TEST_CASE("training is bitwise deterministic per seed") {
    const auto data = generate(small_config(1)).to_graph_data();
    const auto sp = split(data.node_count(), data.labels, SplitSpec::fraction(0.8, 1));
    for (const auto kind : {ModelKind::pdn, ModelKind::pdn_multiscale}) {
        ModelSpec spec;
        spec.kind = kind;
        spec.hops = 3;
        TrainConfig cfg;
        cfg.epochs = 15;
        cfg.seed = 7;
        const auto run = [&] {
            Rng rng = make_rng(cfg.seed, 1);
            auto model = make_model(spec, ModelDims::of(data), rng);
            return train(*model, data, sp, cfg);
        };
        const auto a = run();
        const auto b = run();
        CHECK(a.epochs.size() == 15);
        CHECK(same_history(a, b));
        if (kind == ModelKind::pdn_multiscale) CHECK(a.last().attention.size() == 3);
    }
}

TEST_CASE("reported loss excludes the l2 penalty") {
    const auto data = generate(small_config(2)).to_graph_data();
    const auto sp = split(data.node_count(), data.labels, SplitSpec::fraction(0.8, 1));
    Rng rng = make_rng(3);
    auto model = make_model(ModelSpec{}, ModelDims::of(data), rng);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.l2 = 10.0;
    const auto h = train(*model, data, sp, cfg);
    Tape t;
    Rng unused = make_rng(0);
    const double ce = ad::softmax_cross_entropy(model->forward(t, data, false, unused), data.labels, sp.train).scalar();
    CHECK(same_bits(h.last().loss, ce));
}

TEST_CASE("train_step returns the penalised loss") {
    const auto data = generate(small_config(3)).to_graph_data();
    const auto sp = split(data.node_count(), data.labels, SplitSpec::fraction(0.8, 1));
    Rng init = make_rng(4);
    auto model = make_model(ModelSpec{}, ModelDims::of(data), init);
    TrainConfig cfg;
    cfg.dropout = 0.0;
    model->set_dropout(0.0);
    cfg.l2 = 0.5;
    double penalty = 0.0;
    for (auto* p : model->parameters()) {
        for (const double v : p->value.values()) penalty += v * v;
    }
    Tape t;
    Rng unused = make_rng(0);
    const double ce = ad::softmax_cross_entropy(model->forward(t, data, false, unused), data.labels, sp.train).scalar();
    AdamState adam;
    Rng rng = make_rng(5);
    const double loss = train_step(*model, data, sp, adam, cfg, rng);
    CHECK(loss == doctest::Approx(ce + 0.5 * penalty).epsilon(1e-12));
    CHECK(adam.steps() == 1);
}

TEST_CASE("random labels on uninformative features stay near chance") {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng = make_rng(seed, 9);
        const Index n = 300;
        std::vector<UndirectedEdge> edges;
        std::uniform_int_distribution<Index> node(0, n - 1);
        for (Index i = 0; i < n; ++i) {
            for (int k = 0; k < 3; ++k) {
                const Index j = node(rng);
                if (j > i) edges.push_back({i, j});
            }
        }
        std::sort(edges.begin(), edges.end(), [](auto a, auto b) { return std::pair(a.u, a.v) < std::pair(b.u, b.v); });
        edges.erase(std::unique(edges.begin(), edges.end(), [](auto a, auto b) { return a.u == b.u && a.v == b.v; }),
                    edges.end());
        std::vector<int> labels(n);
        for (auto& l : labels) l = std::uniform_int_distribution<int>(0, 2)(rng);
        const auto data =
            make_graph_data(edges, standard_normal(n, 8, rng), DenseMatrix(edges.size(), 1, 1.0), labels, 3);
        const auto sp = split(n, data.labels, SplitSpec::fraction(0.8, seed));
        ModelSpec spec;
        spec.kind = ModelKind::gcn;
        auto model = make_model(spec, ModelDims::of(data), rng);
        TrainConfig cfg;
        cfg.epochs = 50;
        cfg.seed = seed;
        total += train(*model, data, sp, cfg).last().test_acc;
    }
    CHECK(std::abs(total / 10.0 - 1.0 / 3.0) <= 0.08);
}

TEST_CASE("loss decreases over the first epochs on the default benchmark") {
    int monotone = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SyntheticConfig c;
        c.seed = seed;
        const auto data = generate(c).to_graph_data();
        const auto sp = split(data.node_count(), data.labels, SplitSpec::fraction(0.8, seed));
        Rng rng = make_rng(seed, 1);
        auto model = make_model(ModelSpec{}, ModelDims::of(data), rng);
        TrainConfig cfg;
        cfg.epochs = 10;
        cfg.seed = seed;
        const auto h = train(*model, data, sp, cfg);
        bool ok = true;
        for (std::size_t i = 1; i < h.epochs.size(); ++i) ok = ok && h.epochs[i].loss <= h.epochs[i - 1].loss;
        monotone += ok ? 1 : 0;
    }
    CHECK(monotone >= 8);
}

TEST_CASE("run_seeds returns results in seed order and rethrows") {
    const auto out = run_seeds({5, 1, 3, 2}, [](std::uint64_t s) { return s * 10; }, 3);
    REQUIRE(out.size() == 4);
    CHECK(out[0] == std::pair<std::uint64_t, std::uint64_t>{1, 10});
    CHECK(out[3] == std::pair<std::uint64_t, std::uint64_t>{5, 50});
    CHECK_THROWS_AS(run_seeds({1, 2}, [](std::uint64_t s) -> int {
                        if (s == 2) throw std::runtime_error("boom");
                        return 0;
                    }, 2),
                    std::runtime_error);
}
