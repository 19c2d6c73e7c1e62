#pragma once

// Two-phase training orchestration.
//
// Phase II (attribute extraction): the projection head learns to align
// image embeddings with the alpha bipolar attribute vectors under a
// weighted BCE on temperature-scaled cosine similarities.
//
// Phase III (zero-shot classification): the head (optionally warm-started
// from phase II) is fine-tuned with cross entropy against class logits from
// the stationary encoder phi = A x B. Codebooks and B stay fixed
// throughout; in ZS mode test classes are never touched before evaluation.

#include <algorithm>
#include <cstdint>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hdzsc/codebooks.hpp"
#include "hdzsc/encoder.hpp"
#include "hdzsc/io.hpp"
#include "hdzsc/matrix.hpp"
#include "hdzsc/metrics.hpp"
#include "hdzsc/nn.hpp"

namespace hdzsc {

enum class SplitMode { noZS, ZS };

// Class sets plus concrete per-sample row lists for each side.
struct DatasetSplit {
    SplitMode mode = SplitMode::ZS;
    std::vector<int> train_classes;
    std::vector<int> test_classes;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

// Resolve a class-level assignment against a store. In ZS mode the class
// sets must be disjoint; in noZS mode both sides share the class set and
// each class's rows alternate train/test by position.
inline DatasetSplit make_split(const EmbeddingStore& store, const SplitAssignment& assignment,
                               SplitMode mode) {
    DatasetSplit split;
    split.mode = mode;
    split.train_classes = assignment.train_classes;
    split.test_classes = assignment.test_classes;
    if (mode == SplitMode::ZS) {
        std::set<int> train_set(split.train_classes.begin(), split.train_classes.end());
        for (int c : split.test_classes)
            if (train_set.count(c))
                throw DataError("split: class " + std::to_string(c) +
                                " appears in both train and test of a ZS split");
        if (split.train_classes.empty() || split.test_classes.empty())
            throw DataError("split: ZS split needs nonempty train and test class sets");
        std::set<int> test_set(split.test_classes.begin(), split.test_classes.end());
        for (std::size_t r = 0; r < store.size(); ++r) {
            const int c = store.record(r).class_id;
            if (train_set.count(c)) split.train_rows.push_back(r);
            if (test_set.count(c)) split.test_rows.push_back(r);
        }
    } else {
        if (split.test_classes.empty()) split.test_classes = split.train_classes;
        if (split.train_classes != split.test_classes)
            throw DataError("split: noZS mode shares one class set between train and test");
        std::set<int> classes(split.train_classes.begin(), split.train_classes.end());
        std::map<int, std::size_t> position;
        for (std::size_t r = 0; r < store.size(); ++r) {
            const int c = store.record(r).class_id;
            if (!classes.count(c)) continue;
            const std::size_t k = position[c]++;
            (k % 2 == 0 ? split.train_rows : split.test_rows).push_back(r);
        }
    }

    // Every class on a side must actually have samples.
    auto check = [&](const std::vector<int>& classes, const std::vector<std::size_t>& rows,
                     const char* side) {
        std::set<int> present;
        for (std::size_t r : rows) present.insert(store.record(r).class_id);
        std::string missing;
        for (int c : classes)
            if (!present.count(c)) missing += (missing.empty() ? "" : ",") + std::to_string(c);
        if (!missing.empty())
            throw DataError("split: no embedding rows for " + std::string(side) + " classes " +
                            missing);
    };
    check(split.train_classes, split.train_rows, "train");
    check(split.test_classes, split.test_rows, "test");
    return split;
}

struct RunConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    double lr_min = 0.0;
    double inverse_temperature = 10.0;  // initial 1/K
    double weight_decay = 0.01;
    double logit_scale = 5.0;           // BCE sigmoid scale s
    std::uint64_t seed = 1;
    bool train_temperature = true;
    bool mlp_mode = false;              // ablation: trainable MLP attribute encoder
    std::size_t mlp_hidden = 128;
    double binarize_threshold = -1.0;   // < 0: soft attribute targets
};

struct TrainState {
    ProjectionHead head;
    std::optional<MlpAttributeEncoder> mlp;
    SimilarityKernel kernel{10.0, true};
    double logit_scale = 5.0;
    std::uint64_t step = 0;
    CosineSchedule sched;

    AdamSlot slot_w, slot_b, slot_log_k;
    AdamSlot slot_mlp_w1, slot_mlp_b1, slot_mlp_w2, slot_mlp_b2;
};

struct RunReport {
    std::vector<double> epoch_losses;
    std::uint64_t steps = 0;

    double final_loss() const {
        return epoch_losses.empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : epoch_losses.back();
    }
};

inline TrainState init_train_state(const RunConfig& cfg, std::size_t d_in, std::size_t d,
                                   std::size_t alpha) {
    TrainState st;
    st.head = init_head(d_in, d, cfg.seed);
    if (cfg.mlp_mode) st.mlp = init_mlp(alpha, cfg.mlp_hidden, d, cfg.seed);
    st.kernel = SimilarityKernel(cfg.inverse_temperature, cfg.train_temperature);
    st.logit_scale = cfg.logit_scale;
    return st;
}

namespace detail {

struct BatchPlan {
    std::vector<std::size_t> rows;  // shuffled copy of the side's rows
};

inline std::vector<std::vector<std::size_t>> plan_epoch(const std::vector<std::size_t>& rows,
                                                        std::size_t batch_size, std::uint64_t seed,
                                                        std::size_t epoch) {
    std::vector<std::size_t> order = rows;
    rng::Stream s(seed, "shuffle", epoch);
    s.shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < order.size(); i += batch_size) {
        batches.emplace_back(order.begin() + i,
                             order.begin() + std::min(order.size(), i + batch_size));
    }
    return batches;
}

inline void apply_updates(TrainState& st, const KernelChainGrads& g, const RunConfig& cfg,
                          double lr) {
    const std::uint64_t t = st.step + 1;
    AdamConfig adam;
    adam.weight_decay = cfg.weight_decay;
    AdamConfig no_decay = adam;
    no_decay.weight_decay = 0.0;  // biases and temperature are not decayed

    adamw_step(st.head.w.data(), g.head.d_w.data(), st.slot_w, t, lr, adam, "head.w");
    adamw_step(st.head.b, g.head.d_b, st.slot_b, t, lr, no_decay, "head.b");
    if (st.kernel.learnable() && cfg.train_temperature) {
        double lk = st.kernel.log_k();
        const double glk = g.d_log_k;
        adamw_step(std::span<double>(&lk, 1), std::span<const double>(&glk, 1), st.slot_log_k, t,
                   lr, no_decay, "log_k");
        st.kernel.set_log_k(lk);
    }
    if (st.mlp && g.mlp) {
        adamw_step(st.mlp->w1.data(), g.mlp->d_w1.data(), st.slot_mlp_w1, t, lr, adam, "mlp.w1");
        adamw_step(st.mlp->b1, g.mlp->d_b1, st.slot_mlp_b1, t, lr, no_decay, "mlp.b1");
        adamw_step(st.mlp->w2.data(), g.mlp->d_w2.data(), st.slot_mlp_w2, t, lr, adam, "mlp.w2");
        adamw_step(st.mlp->b2, g.mlp->d_b2, st.slot_mlp_b2, t, lr, no_decay, "mlp.b2");
    }
    ++st.step;
}

inline std::map<int, std::size_t> class_positions(const std::vector<int>& classes) {
    std::map<int, std::size_t> pos;
    for (std::size_t i = 0; i < classes.size(); ++i) pos[classes[i]] = i;
    return pos;
}

// Each training phase runs a fresh optimizer over whatever parameters it
// inherits: moments and step counter start at zero.
inline void reset_optimizer(TrainState& st) {
    st.step = 0;
    st.slot_w = {};
    st.slot_b = {};
    st.slot_log_k = {};
    st.slot_mlp_w1 = {};
    st.slot_mlp_b1 = {};
    st.slot_mlp_w2 = {};
    st.slot_mlp_b2 = {};
}

}  // namespace detail

// Per-attribute positive weights n_neg/n_pos over the given targets, with
// zero-positive attributes weighted 0 (their positive term never fires).
inline std::vector<double> attribute_pos_weights(const std::vector<std::vector<double>>& targets) {
    if (targets.empty()) throw DataError("pos_weights: no training targets");
    const std::size_t alpha = targets[0].size();
    std::vector<double> w(alpha, 0.0);
    for (std::size_t x = 0; x < alpha; ++x) {
        std::size_t pos = 0;
        for (const auto& t : targets)
            if (t[x] >= 0.5) ++pos;
        if (pos > 0)
            w[x] = static_cast<double>(targets.size() - pos) / static_cast<double>(pos);
    }
    return w;
}

// Phase II: weighted BCE between temperature-scaled attribute similarities
// and each sample's class-level attribute targets. B stays fixed; only the
// head (and log K) move.
inline RunReport train_attribute_extraction(const RunConfig& cfg, const DatasetSplit& split,
                                            const AttributeVectorMatrix& b,
                                            const EmbeddingStore& store,
                                            const ClassAttributeMatrix& attributes,
                                            TrainState& st) {
    if (split.train_rows.empty()) throw DataError("train-attr: no training rows");
    if (st.head.d_out() != b.dim())
        throw DimensionError("train-attr: head output dim != hypervector dim");

    const Matrix b_real = to_real_matrix(b);

    // Class-level targets, one row per training class.
    std::map<int, std::vector<double>> class_targets;
    for (int c : split.train_classes) {
        std::vector<double> t = attributes.row(c);
        if (cfg.binarize_threshold >= 0.0)
            for (double& v : t) v = v >= cfg.binarize_threshold ? 1.0 : 0.0;
        class_targets[c] = std::move(t);
    }
    std::vector<std::vector<double>> sample_targets;
    sample_targets.reserve(split.train_rows.size());
    for (std::size_t r : split.train_rows)
        sample_targets.push_back(class_targets.at(store.record(r).class_id));
    const std::vector<double> pos_w = attribute_pos_weights(sample_targets);

    const std::size_t steps_per_epoch =
        (split.train_rows.size() + cfg.batch_size - 1) / cfg.batch_size;
    st.sched = CosineSchedule{cfg.lr, cfg.lr_min, std::max<std::uint64_t>(1, cfg.epochs * steps_per_epoch)};
    detail::reset_optimizer(st);

    RunReport report;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t epoch_n = 0;
        for (const auto& batch : detail::plan_epoch(split.train_rows, cfg.batch_size, cfg.seed, epoch)) {
            const Matrix x = store.rows(batch);
            const Matrix y = forward_head(st.head, x);
            const KernelForward kf = kernel_forward(y, b_real, st.kernel);

            double loss = 0.0;
            Matrix grad(batch.size(), b.rows());
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const double* qp = kf.logits.row_ptr(i);
                std::vector<double> q(qp, qp + b.rows());
                const auto& target = class_targets.at(store.record(batch[i]).class_id);
                const BceResult bce = weighted_bce_loss(q, target, pos_w, st.logit_scale);
                loss += bce.loss;
                for (std::size_t jx = 0; jx < b.rows(); ++jx)
                    grad(i, jx) = bce.grad_q[jx] / static_cast<double>(batch.size());
            }
            loss /= static_cast<double>(batch.size());
            if (!std::isfinite(loss))
                throw NumericError("train-attr: non-finite loss at step " + std::to_string(st.step));

            const KernelChainGrads grads =
                backward_through_kernel(grad, x, y, b_real, kf, st.kernel);
            const double lr = cosine_lr(st.step, st.sched);
            detail::apply_updates(st, grads, cfg, lr);

            epoch_loss += loss * static_cast<double>(batch.size());
            epoch_n += batch.size();
        }
        report.epoch_losses.push_back(epoch_loss / static_cast<double>(epoch_n));
    }
    report.steps = st.step;
    return report;
}

// Phase III: cross entropy over class logits from the stationary encoder
// (or the trainable MLP encoder in ablation mode).
inline RunReport train_zsc(const RunConfig& cfg, const DatasetSplit& split,
                           const AttributeVectorMatrix& b, const EmbeddingStore& store,
                           const ClassAttributeMatrix& attributes, TrainState& st) {
    if (split.train_rows.empty()) throw DataError("train-zsc: no training rows");
    const auto pos = detail::class_positions(split.train_classes);

    // HDC mode: phi over training classes is a constant.
    Matrix phi_fixed;
    Matrix a_train;  // MLP mode input rows
    if (st.mlp) {
        a_train = Matrix(split.train_classes.size(), attributes.alpha());
        for (std::size_t i = 0; i < split.train_classes.size(); ++i) {
            const auto row = attributes.row(split.train_classes[i]);
            std::copy(row.begin(), row.end(), a_train.row_ptr(i));
        }
    } else {
        phi_fixed = build_class_encoder(attributes, b, split.train_classes);
    }

    const std::size_t steps_per_epoch =
        (split.train_rows.size() + cfg.batch_size - 1) / cfg.batch_size;
    st.sched = CosineSchedule{cfg.lr, cfg.lr_min, std::max<std::uint64_t>(1, cfg.epochs * steps_per_epoch)};
    detail::reset_optimizer(st);

    RunReport report;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t epoch_n = 0;
        for (const auto& batch : detail::plan_epoch(split.train_rows, cfg.batch_size, cfg.seed, epoch)) {
            const Matrix x = store.rows(batch);
            const Matrix y = forward_head(st.head, x);

            MlpCache mlp_cache;
            const Matrix* phi = &phi_fixed;
            if (st.mlp) {
                mlp_cache = forward_mlp(*st.mlp, a_train);
                phi = &mlp_cache.phi;
            }
            const KernelForward kf = kernel_forward(y, *phi, st.kernel);

            double loss = 0.0;
            Matrix grad(batch.size(), split.train_classes.size());
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const int cls = store.record(batch[i]).class_id;
                const auto it = pos.find(cls);
                if (it == pos.end())
                    throw DataError("train-zsc: sample class " + std::to_string(cls) +
                                    " is not a training class");
                const double* lp = kf.logits.row_ptr(i);
                const CeResult ce =
                    cross_entropy_loss(std::vector<double>(lp, lp + grad.cols()), it->second);
                loss += ce.loss;
                for (std::size_t j = 0; j < grad.cols(); ++j)
                    grad(i, j) = ce.grad_logits[j] / static_cast<double>(batch.size());
            }
            loss /= static_cast<double>(batch.size());
            if (!std::isfinite(loss))
                throw NumericError("train-zsc: non-finite loss at step " + std::to_string(st.step));

            const KernelChainGrads grads = backward_through_kernel(
                grad, x, y, *phi, kf, st.kernel, st.mlp ? &*st.mlp : nullptr,
                st.mlp ? &mlp_cache : nullptr, st.mlp ? &a_train : nullptr);
            const double lr = cosine_lr(st.step, st.sched);
            detail::apply_updates(st, grads, cfg, lr);

            epoch_loss += loss * static_cast<double>(batch.size());
            epoch_n += batch.size();
        }
        report.epoch_losses.push_back(epoch_loss / static_cast<double>(epoch_n));
    }
    report.steps = st.step;
    return report;
}

struct EvalResult {
    double top1 = 0.0;
    double top5 = 0.0;
    std::size_t samples = 0;
    std::size_t classes = 0;
};

// Builds phi over the evaluation classes *here*, so in ZS mode this is the
// first time their attribute rows (and embedding rows) are ever read.
inline EvalResult evaluate_zsc(const TrainState& st, const std::vector<int>& eval_classes,
                               const std::vector<std::size_t>& eval_rows,
                               const AttributeVectorMatrix& b, const EmbeddingStore& store,
                               const ClassAttributeMatrix& attributes) {
    if (eval_classes.empty() || eval_rows.empty())
        throw DataError("evaluate: empty evaluation set");

    Matrix phi;
    if (st.mlp) {
        Matrix a_eval(eval_classes.size(), attributes.alpha());
        for (std::size_t i = 0; i < eval_classes.size(); ++i) {
            const auto row = attributes.row(eval_classes[i]);
            std::copy(row.begin(), row.end(), a_eval.row_ptr(i));
        }
        phi = forward_mlp(*st.mlp, a_eval).phi;
    } else {
        phi = build_class_encoder(attributes, b, eval_classes);
    }

    const auto pos = detail::class_positions(eval_classes);
    const Matrix x = store.rows(eval_rows);
    const Matrix y = forward_head(st.head, x);
    const Matrix logits = cossim_batch(y, phi, st.kernel);

    std::vector<std::size_t> labels(eval_rows.size());
    for (std::size_t i = 0; i < eval_rows.size(); ++i) {
        const int cls = store.record(eval_rows[i]).class_id;
        const auto it = pos.find(cls);
        if (it == pos.end())
            throw DataError("evaluate: sample class " + std::to_string(cls) +
                            " not in evaluation class set");
        labels[i] = it->second;
    }

    EvalResult r;
    r.samples = eval_rows.size();
    r.classes = eval_classes.size();
    r.top1 = topk_accuracy(logits, labels, 1);
    r.top5 = topk_accuracy(logits, labels, std::min<std::size_t>(5, eval_classes.size()));
    return r;
}

// Attribute-level predictions for metric reports: raw cosine scores per
// sample against every b_x, plus binarized class-level ground truth.
struct AttributeEval {
    std::vector<std::vector<double>> scores;
    std::vector<std::vector<double>> truth;
};

inline AttributeEval evaluate_attributes(const TrainState& st, const std::vector<std::size_t>& rows,
                                         const AttributeVectorMatrix& b, const EmbeddingStore& store,
                                         const ClassAttributeMatrix& attributes,
                                         double truth_threshold = 0.5) {
    AttributeEval out;
    const Matrix b_real = to_real_matrix(b);
    const Matrix x = store.rows(rows);
    const Matrix y = forward_head(st.head, x);
    const SimilarityKernel unit(1.0, false);
    const Matrix cos = cossim_batch(y, b_real, unit);
    std::map<int, std::vector<double>> truth_cache;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* r = cos.row_ptr(i);
        out.scores.emplace_back(r, r + cos.cols());
        const int cls = store.record(rows[i]).class_id;
        auto it = truth_cache.find(cls);
        if (it == truth_cache.end()) {
            std::vector<double> t = attributes.row(cls);
            for (double& v : t) v = v >= truth_threshold ? 1.0 : 0.0;
            it = truth_cache.emplace(cls, std::move(t)).first;
        }
        out.truth.push_back(it->second);
    }
    return out;
}

// ------------------------------------------------------------------ sweep

struct SweepGrid {
    std::vector<std::size_t> epochs;
    std::vector<std::size_t> batch_size;
    std::vector<double> lr;
    std::vector<double> inverse_temperature;
    std::vector<double> weight_decay;
};

struct SweepEntry {
    RunConfig cfg;
    double val_top1 = 0.0;
    double final_loss = 0.0;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    std::size_t best = 0;
};

// Grid search over phase-III hyperparameters, scored zero-shot on a
// validation class set carved from the training classes. Grid points run
// independently (up to `threads` at a time); output order is the grid order
// regardless of scheduling.
inline SweepResult sweep(const SweepGrid& grid, const RunConfig& base, const DatasetSplit& split,
                         const AttributeVectorMatrix& b, const EmbeddingStore& store,
                         const ClassAttributeMatrix& attributes, std::size_t val_class_count,
                         std::size_t threads = 1) {
    if (grid.epochs.empty() || grid.batch_size.empty() || grid.lr.empty() ||
        grid.inverse_temperature.empty() || grid.weight_decay.empty())
        throw DataError("sweep: empty grid");
    if (val_class_count == 0 || val_class_count >= split.train_classes.size())
        throw DataError("sweep: validation class count must be in 1..train_classes-1");

    // Carve the validation classes off the end of the training class list.
    DatasetSplit inner;
    inner.mode = SplitMode::ZS;
    inner.train_classes.assign(split.train_classes.begin(),
                               split.train_classes.end() - static_cast<long>(val_class_count));
    inner.test_classes.assign(split.train_classes.end() - static_cast<long>(val_class_count),
                              split.train_classes.end());
    {
        std::set<int> tr(inner.train_classes.begin(), inner.train_classes.end());
        std::set<int> va(inner.test_classes.begin(), inner.test_classes.end());
        for (std::size_t r : split.train_rows) {
            const int c = store.record(r).class_id;
            if (tr.count(c)) inner.train_rows.push_back(r);
            if (va.count(c)) inner.test_rows.push_back(r);
        }
    }

    std::vector<RunConfig> cfgs;
    for (std::size_t e : grid.epochs)
        for (std::size_t bs : grid.batch_size)
            for (double lr : grid.lr)
                for (double it : grid.inverse_temperature)
                    for (double wd : grid.weight_decay) {
                        RunConfig c = base;
                        c.epochs = e;
                        c.batch_size = bs;
                        c.lr = lr;
                        c.inverse_temperature = it;
                        c.weight_decay = wd;
                        cfgs.push_back(c);
                    }

    SweepResult result;
    result.entries.resize(cfgs.size());
    auto run_point = [&](std::size_t i) {
        const RunConfig& cfg = cfgs[i];
        TrainState st = init_train_state(cfg, store.dim(), b.dim(), attributes.alpha());
        const RunReport rep = train_zsc(cfg, inner, b, store, attributes, st);
        const EvalResult ev =
            evaluate_zsc(st, inner.test_classes, inner.test_rows, b, store, attributes);
        result.entries[i] = SweepEntry{cfg, ev.top1, rep.final_loss()};
    };

    const std::size_t workers = std::max<std::size_t>(1, threads);
    for (std::size_t start = 0; start < cfgs.size(); start += workers) {
        std::vector<std::future<void>> wave;
        for (std::size_t i = start; i < std::min(cfgs.size(), start + workers); ++i)
            wave.push_back(std::async(std::launch::async, run_point, i));
        for (auto& f : wave) f.get();
    }

    for (std::size_t i = 1; i < result.entries.size(); ++i)
        if (result.entries[i].val_top1 > result.entries[result.best].val_top1) result.best = i;
    return result;
}

}  // namespace hdzsc
