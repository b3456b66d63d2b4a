#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <exception>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pdn/models.hpp"

namespace pdn {

struct TrainConfig {
    double lr = 1e-2;
    int epochs = 200;
    double dropout = 0.5;
    double l2 = 1e-3;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Adam with bias correction. Moments are keyed by parameter identity, so
/// the update of one parameter never depends on the others or their order.
class AdamState {
public:
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    std::uint64_t steps() const noexcept { return step_; }
    void step(std::span<Parameter* const> params, double lr);

private:
    struct Moments {
        DenseMatrix m;
        DenseMatrix v;
    };
    std::map<const Parameter*, Moments> moments_;
    std::uint64_t step_ = 0;
};

/// Applies one Adam update from each parameter's accumulated grad.
void adam_step(std::span<Parameter* const> params, AdamState& state, double lr);

struct SplitSpec {
    enum class Mode { fraction, per_class };

    Mode mode = Mode::fraction;
    double train_fraction = 0.8;
    Index per_class_k = 100;
    std::uint64_t seed = 0;

    static SplitSpec fraction(double f, std::uint64_t seed = 0) { return {Mode::fraction, f, 0, seed}; }
    static SplitSpec per_class(Index k, std::uint64_t seed = 0) { return {Mode::per_class, 0.0, k, seed}; }
};

struct Split {
    std::vector<std::uint8_t> train;
    std::vector<std::uint8_t> test;

    Index train_count() const;
    Index test_count() const;
};

Split split(Index n_nodes, std::span<const int> labels, const SplitSpec& spec);

/// Fraction of masked rows whose argmax (lowest index on ties) equals the label.
double accuracy(const DenseMatrix& logits, std::span<const int> labels, std::span<const std::uint8_t> mask);

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;  // cross-entropy on the train nodes, eval mode, after the update
    double train_acc = 0.0;
    double test_acc = 0.0;
    std::vector<double> attention;
};

struct History {
    std::vector<EpochRecord> epochs;

    const EpochRecord& last() const { return epochs.back(); }
};

/// Non-finite loss or parameter during training.
class TrainingError : public std::runtime_error {
public:
    TrainingError(int epoch, std::string param, double norm);

    int epoch;
    std::string param;
    double norm;
};

/// One optimisation step on the training nodes; returns the penalised loss.
double train_step(Model& model, const GraphData& data, const Split& split, AdamState& adam,
                  const TrainConfig& config, Rng& rng);

History train(Model& model, const GraphData& data, const Split& split, const TrainConfig& config);

/// Runs fn(seed) for every seed on up to `workers` threads; results come back
/// in ascending seed order regardless of completion order.
template <typename Fn>
auto run_seeds(std::vector<std::uint64_t> seeds, Fn fn, unsigned workers = 0)
    -> std::vector<std::pair<std::uint64_t, decltype(fn(std::uint64_t{}))>> {
    using R = decltype(fn(std::uint64_t{}));
    std::sort(seeds.begin(), seeds.end());
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::pair<std::uint64_t, R>> out(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    std::size_t next = 0;
    std::mutex lock;
    auto worker = [&] {
        while (true) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> g(lock);
                if (next >= seeds.size()) return;
                i = next++;
            }
            try {
                out[i] = {seeds[i], fn(seeds[i])};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < std::min<std::size_t>(workers, seeds.size()); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace pdn
