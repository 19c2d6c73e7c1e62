#pragma once

// Evaluation metrics: top-k accuracy over class logits, per-group top-1
// attribute accuracy, and weighted mean average precision over attributes.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hdzsc/error.hpp"
#include "hdzsc/matrix.hpp"
#include "hdzsc/schema.hpp"

namespace hdzsc {

// Percent of rows whose label is among the k largest logits. Ties rank the
// lower column index first, matching predict().
inline double topk_accuracy(const Matrix& logits, const std::vector<std::size_t>& labels,
                            std::size_t k) {
    if (logits.rows() != labels.size())
        throw DimensionError("topk_accuracy: label count mismatch");
    if (k == 0 || k > logits.cols())
        throw DataError("topk_accuracy: k=" + std::to_string(k) + " outside 1.." +
                        std::to_string(logits.cols()));
    if (logits.rows() == 0) return 0.0;

    std::size_t hits = 0;
    std::vector<std::size_t> order(logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double* row = logits.row_ptr(i);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
        for (std::size_t r = 0; r < k; ++r) {
            if (order[r] == labels[i]) {
                ++hits;
                break;
            }
        }
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(logits.rows());
}

struct GroupAccuracy {
    std::string group;
    double percent = 0.0;
    std::size_t samples = 0;  // samples that had an active value in this group
};

struct GroupAccuracyReport {
    std::vector<GroupAccuracy> per_group;
    double average = 0.0;  // unweighted mean over groups
};

// For each group, the argmax-scored attribute within the group is compared
// against the ground-truth active attribute(s); samples with no active value
// in a group are skipped for that group.
inline GroupAccuracyReport group_top1(const std::vector<std::vector<double>>& scores,
                                      const std::vector<std::vector<double>>& truth,
                                      const AttributeSchema& schema) {
    if (scores.size() != truth.size())
        throw DimensionError("group_top1: score/truth count mismatch");
    GroupAccuracyReport report;
    double sum = 0.0;
    for (const std::string& group : schema.sorted_groups()) {
        const std::vector<std::size_t> members = schema.group_members(group);
        if (members.empty()) throw DataError("group_top1: group '" + group + "' has no attributes");

        std::size_t correct = 0, counted = 0;
        for (std::size_t s = 0; s < scores.size(); ++s) {
            if (scores[s].size() != schema.alpha() || truth[s].size() != schema.alpha())
                throw DimensionError("group_top1: sample " + std::to_string(s) +
                                     " has wrong attribute count");
            bool any_active = false;
            std::size_t best = members[0];
            for (std::size_t x : members) {
                if (truth[s][x - 1] >= 0.5) any_active = true;
                if (scores[s][x - 1] > scores[s][best - 1]) best = x;
            }
            if (!any_active) continue;
            ++counted;
            if (truth[s][best - 1] >= 0.5) ++correct;
        }
        const double pct = counted == 0 ? 0.0 : 100.0 * static_cast<double>(correct) /
                                                    static_cast<double>(counted);
        report.per_group.push_back({group, pct, counted});
        sum += pct;
    }
    report.average = sum / static_cast<double>(report.per_group.size());
    return report;
}

// Average precision of one ranked list: precision accumulated at each
// positive hit, ties broken by the lower sample index.
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw DimensionError("average_precision: size mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double hits = 0.0, accum = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (labels[order[rank]] > 0) {
            hits += 1.0;
            accum += hits / static_cast<double>(rank + 1);
        }
    }
    if (hits == 0.0) return 0.0;
    return accum / hits;
}

enum class WmapWeighting { inv_freq, freq, uniform };

// WMAP = sum_x w_x AP_x / sum_x w_x over attributes with at least one
// positive; inverse-positive-frequency weighting is the default so rare
// attributes count as much as common ones.
inline double wmap(const std::vector<std::vector<double>>& scores_per_attribute,
                   const std::vector<std::vector<int>>& labels_per_attribute,
                   WmapWeighting weighting = WmapWeighting::inv_freq) {
    if (scores_per_attribute.size() != labels_per_attribute.size())
        throw DimensionError("wmap: attribute count mismatch");
    double wsum = 0.0, acc = 0.0;
    for (std::size_t x = 0; x < scores_per_attribute.size(); ++x) {
        const auto& labels = labels_per_attribute[x];
        std::size_t n_pos = 0;
        for (int l : labels)
            if (l > 0) ++n_pos;
        if (n_pos == 0) continue;  // excluded

        double w = 1.0;
        switch (weighting) {
            case WmapWeighting::inv_freq: w = 1.0 / static_cast<double>(n_pos); break;
            case WmapWeighting::freq: w = static_cast<double>(n_pos); break;
            case WmapWeighting::uniform: w = 1.0; break;
        }
        acc += w * average_precision(scores_per_attribute[x], labels);
        wsum += w;
    }
    if (wsum == 0.0) throw DataError("wmap: no attribute has a positive label");
    return acc / wsum;
}

// Sample mean and sample standard deviation (n-1 denominator) over trials.
struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
    std::size_t n = 0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd r;
    r.n = xs.size();
    if (xs.empty()) return r;
    for (double x : xs) r.mean += x;
    r.mean /= static_cast<double>(xs.size());
    if (xs.size() >= 2) {
        double ss = 0.0;
        for (double x : xs) ss += (x - r.mean) * (x - r.mean);
        r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return r;
}

}  // namespace hdzsc
