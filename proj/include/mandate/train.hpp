#pragma once

#include <chrono>
#include <limits>

#include "mandate/adam.hpp"
#include "mandate/metrics.hpp"
#include "mandate/model.hpp"

namespace mandate {

struct TrainConfig {
    std::size_t max_epochs = 200;
    std::size_t patience = 20;
    double lr = 0.01;
    std::size_t batch_size = 256;
    std::uint64_t seed = 7;
    std::string monitor = "auc";  // auc | f1_macro | gmean, on validation
    std::size_t attention_cap = 2048;

    void validate() const {
        if (patience < 1) throw UsageError("train: patience must be at least 1");
        if (lr <= 0.0) throw UsageError("train: learning rate must be positive");
        if (batch_size == 0) throw UsageError("train: batch size must be positive");
        if (max_epochs == 0) throw UsageError("train: max_epochs must be positive");
    }
};

inline double monitor_value(const MetricsReport& r, const std::string& name) {
    if (name == "auc") return r.auc;
    if (name == "f1_macro") return r.f1_macro;
    if (name == "gmean") return r.gmean;
    throw UsageError("unknown monitor metric '" + name +
                     "' (expected auc|f1_macro|gmean)");
}

// Strict-improvement early stopping: stop once `patience` epochs pass
// without a new best.
struct EarlyStopper {
    std::size_t patience;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;

    explicit EarlyStopper(std::size_t p) : patience(p) {}

    bool update(std::size_t epoch, double value) {
        if (value > best) {
            best = value;
            best_epoch = epoch;
            return true;
        }
        return false;
    }
    bool should_stop(std::size_t epoch) const { return epoch - best_epoch >= patience; }
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    MetricsReport val;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_monitor = 0.0;
    double wall_time_sec = 0.0;
    bool diverged = false;
};

inline std::vector<double> score_split(MandateModel& model,
                                       std::span<const NodeId> split_ids,
                                       std::size_t attention_cap) {
    return model.score_nodes(split_ids, attention_cap);
}

inline MetricsReport evaluate_model(MandateModel& model, const MultiRelGraph& g,
                                    std::span<const NodeId> split_ids,
                                    std::string split_name, std::size_t attention_cap) {
    if (split_ids.empty()) throw DataError("evaluate: split '" + split_name + "' is empty");
    const std::vector<double> scores = score_split(model, split_ids, attention_cap);
    std::vector<int> labels;
    labels.reserve(split_ids.size());
    for (NodeId id : split_ids) {
        if (g.labels[id] == kUnlabeled)
            throw DataError("evaluate: split contains unlabeled node " + std::to_string(id));
        labels.push_back(g.labels[id]);
    }
    return metrics_from_scores(scores, labels, std::move(split_name));
}

// Adam training loop with validation-monitored early stopping. The best
// parameters (by the monitor) are restored into the model before returning.
// A non-finite loss or gradient stops training and keeps the best finite
// checkpoint seen so far.
inline TrainHistory train_model(MandateModel& model, const MultiRelGraph& g,
                                const SplitAssignment& split, const TrainConfig& cfg) {
    cfg.validate();
    if (split.train.empty()) throw DataError("train split is empty");
    if (split.val.empty()) throw DataError("validation split is empty");
    const auto t0 = std::chrono::steady_clock::now();

    const std::array<double, 2> class_weights = inverse_frequency_weights(g, split.train);
    Adam opt(AdamConfig{.lr = cfg.lr});
    EarlyStopper stopper(cfg.patience);
    ParamStore::Snapshot best = model.params().snapshot();

    TrainHistory hist;
    std::uint64_t global_step = 0;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::vector<NodeId> order(split.train.begin(), split.train.end());
        Rng shuffle_rng = derive_rng(cfg.seed, "batch", epoch);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t steps = 0;
        bool finite = true;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::span<const NodeId> batch(order.data() + start, stop - start);
            Rng drop_rng = derive_rng(cfg.seed, "dropout", global_step++);
            Tape tape;
            MandateModel::ForwardBits fb =
                model.forward(tape, batch, true, class_weights, &drop_rng);
            const double loss = tape.value(fb.loss).data[0];
            if (!std::isfinite(loss)) {
                finite = false;
                break;
            }
            loss_sum += loss;
            ++steps;
            model.params().zero_grads();
            tape.backward(fb.loss);
            try {
                opt.step(model.params());
            } catch (const NumericError&) {
                finite = false;
                break;
            }
        }
        if (!finite) {
            hist.diverged = true;
            break;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(steps);
        rec.val = evaluate_model(model, g, split.val, "val", cfg.attention_cap);
        hist.epochs.push_back(rec);

        if (stopper.update(epoch, monitor_value(rec.val, cfg.monitor)))
            best = model.params().snapshot();
        if (stopper.should_stop(epoch)) break;
    }

    model.params().restore(best);
    hist.best_epoch = stopper.best_epoch;
    hist.best_monitor = stopper.best;
    hist.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return hist;
}

}  // namespace mandate
