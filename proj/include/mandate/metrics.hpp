#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mandate/common.hpp"

namespace mandate {

// Rank-sum AUC with midranks for ties. Algebraically identical to the
// exhaustive pairwise count with ties worth 1/2, and exact in doubles at
// the sizes we evaluate.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw UsageError("auc: scores and labels differ in length");
    std::size_t n_pos = 0, n_neg = 0;
    for (int l : labels) {
        if (l == 1)
            ++n_pos;
        else if (l == 0)
            ++n_neg;
        else
            throw UsageError("auc: labels must be 0 or 1");
    }
    if (n_pos == 0 || n_neg == 0)
        throw DataError("auc undefined: needs both classes, got " +
                        std::to_string(n_pos) + " positive and " +
                        std::to_string(n_neg) + " negative");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t)
            if (labels[order[t]] == 1) rank_sum_pos += midrank;
        i = j + 1;
    }
    const double u = rank_sum_pos -
                     static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    double tpr() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn); }
    double tnr() const { return tn + fp == 0 ? 0.0 : static_cast<double>(tn) / (tn + fp); }
};

inline Confusion confusion_at(std::span<const double> scores, std::span<const int> labels,
                              double threshold = 0.5) {
    if (scores.size() != labels.size())
        throw UsageError("confusion_at: scores and labels differ in length");
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (labels[i] == 1)
            pred ? ++c.tp : ++c.fn;
        else
            pred ? ++c.fp : ++c.tn;
    }
    return c;
}

// Unweighted mean of per-class F1. A class with zero predicted and zero
// actual positives contributes F1 = 0.
inline double f1_macro(std::span<const int> pred, std::span<const int> labels) {
    if (pred.size() != labels.size())
        throw UsageError("f1_macro: pred and labels differ in length");
    if (labels.empty()) throw DataError("f1_macro undefined on empty input");
    double total = 0.0;
    for (int cls = 0; cls <= 1; ++cls) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const bool is_cls = labels[i] == cls;
            const bool pred_cls = pred[i] == cls;
            if (is_cls && pred_cls) ++tp;
            if (!is_cls && pred_cls) ++fp;
            if (is_cls && !pred_cls) ++fn;
        }
        const std::size_t denom = 2 * tp + fp + fn;
        total += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
    return total / 2.0;
}

inline double gmean(const Confusion& c) {
    if (c.tp + c.fn == 0 || c.tn + c.fp == 0)
        throw DataError("gmean undefined: a class is absent from the labels");
    return std::sqrt(c.tpr() * c.tnr());
}

struct MetricsReport {
    std::string split;
    double auc = 0.0;
    double f1_macro = 0.0;
    double gmean = 0.0;
    Confusion counts;
};

inline MetricsReport metrics_from_scores(std::span<const double> scores,
                                         std::span<const int> labels,
                                         std::string split_name,
                                         double threshold = 0.5) {
    MetricsReport r;
    r.split = std::move(split_name);
    r.auc = auc(scores, labels);
    r.counts = confusion_at(scores, labels, threshold);
    std::vector<int> pred(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= threshold ? 1 : 0;
    r.f1_macro = f1_macro(pred, labels);
    r.gmean = gmean(r.counts);
    return r;
}

}  // namespace mandate
