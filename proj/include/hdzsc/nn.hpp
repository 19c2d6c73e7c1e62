#pragma once

// Dense layers, losses, and optimization with hand-derived gradients.
//
// The trainable surface is deliberately tiny: one affine projection head
// (d_in -> d), optionally a 2-layer MLP attribute encoder for the ablation
// mode, and the kernel temperature log K. Gradients flow through the cosine
// normalization and temperature; the bipolar attribute matrix B never
// receives one. All math is 64-bit.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdzsc/encoder.hpp"
#include "hdzsc/matrix.hpp"
#include "hdzsc/rng.hpp"

namespace hdzsc {

// ---------------------------------------------------------------- layers

struct ProjectionHead {
    Matrix w;                // d_in x d
    std::vector<double> b;   // d

    std::size_t d_in() const { return w.rows(); }
    std::size_t d_out() const { return w.cols(); }
};

inline ProjectionHead init_head(std::size_t d_in, std::size_t d, std::uint64_t seed) {
    ProjectionHead h;
    h.w = Matrix(d_in, d);
    h.b.assign(d, 0.0);
    rng::Stream s(seed, "head_init");
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_in));
    for (double& v : h.w.data()) v = scale * s.next_normal();
    return h;
}

// Y = X W + b, rowwise.
inline Matrix forward_head(const ProjectionHead& head, const Matrix& x) {
    if (x.cols() != head.w.rows())
        throw DimensionError("forward_head: input cols " + std::to_string(x.cols()) +
                             " vs weight rows " + std::to_string(head.w.rows()));
    Matrix y = matmul(x, head.w);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        double* r = y.row_ptr(i);
        for (std::size_t j = 0; j < y.cols(); ++j) r[j] += head.b[j];
    }
    return y;
}

struct HeadGrads {
    Matrix d_w;
    std::vector<double> d_b;
};

inline HeadGrads backward_head(const Matrix& x, const Matrix& d_y) {
    return HeadGrads{matmul_at_b(x, d_y), column_sums(d_y)};
}

// Ablation-mode attribute encoder: alpha -> hidden -> d with tanh between.
struct MlpAttributeEncoder {
    Matrix w1;               // alpha x hidden
    std::vector<double> b1;  // hidden
    Matrix w2;               // hidden x d
    std::vector<double> b2;  // d

    std::size_t alpha() const { return w1.rows(); }
    std::size_t hidden() const { return w1.cols(); }
    std::size_t d_out() const { return w2.cols(); }
};

inline MlpAttributeEncoder init_mlp(std::size_t alpha, std::size_t hidden, std::size_t d,
                                    std::uint64_t seed) {
    MlpAttributeEncoder m;
    m.w1 = Matrix(alpha, hidden);
    m.b1.assign(hidden, 0.0);
    m.w2 = Matrix(hidden, d);
    m.b2.assign(d, 0.0);
    rng::Stream s(seed, "mlp_init");
    const double s1 = 1.0 / std::sqrt(static_cast<double>(alpha));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (double& v : m.w1.data()) v = s1 * s.next_normal();
    for (double& v : m.w2.data()) v = s2 * s.next_normal();
    return m;
}

struct MlpCache {
    Matrix h;    // tanh(A W1 + b1)
    Matrix phi;  // H W2 + b2
};

inline MlpCache forward_mlp(const MlpAttributeEncoder& mlp, const Matrix& a) {
    MlpCache c;
    c.h = matmul(a, mlp.w1);
    for (std::size_t i = 0; i < c.h.rows(); ++i) {
        double* r = c.h.row_ptr(i);
        for (std::size_t j = 0; j < c.h.cols(); ++j) r[j] = std::tanh(r[j] + mlp.b1[j]);
    }
    c.phi = matmul(c.h, mlp.w2);
    for (std::size_t i = 0; i < c.phi.rows(); ++i) {
        double* r = c.phi.row_ptr(i);
        for (std::size_t j = 0; j < c.phi.cols(); ++j) r[j] += mlp.b2[j];
    }
    return c;
}

struct MlpGrads {
    Matrix d_w1;
    std::vector<double> d_b1;
    Matrix d_w2;
    std::vector<double> d_b2;
};

inline MlpGrads backward_mlp(const MlpAttributeEncoder& mlp, const Matrix& a, const MlpCache& cache,
                             const Matrix& d_phi) {
    MlpGrads g;
    g.d_w2 = matmul_at_b(cache.h, d_phi);
    g.d_b2 = column_sums(d_phi);
    Matrix d_h = matmul_a_bt(d_phi, mlp.w2);
    for (std::size_t i = 0; i < d_h.rows(); ++i) {
        double* r = d_h.row_ptr(i);
        const double* h = cache.h.row_ptr(i);
        for (std::size_t j = 0; j < d_h.cols(); ++j) r[j] *= 1.0 - h[j] * h[j];
    }
    g.d_w1 = matmul_at_b(a, d_h);
    g.d_b1 = column_sums(d_h);
    return g;
}

// ---------------------------------------------------------------- losses

namespace detail {
inline double softplus(double x) {
    // log(1 + e^x), stable for large |x|
    return std::log1p(std::exp(-std::abs(x))) + (x > 0.0 ? x : 0.0);
}
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace detail

struct BceResult {
    double loss = 0.0;
    std::vector<double> grad_q;  // dL/dq
};

// Weighted binary cross entropy between a similarity vector q and soft
// targets in [0,1]. q is compressed in [-1,1] (or [-1/K,1/K]), so it is
// scaled by logit_scale before the sigmoid:
//
//   L = mean_x [ -w_x t_x log s(z_x) - (1 - t_x) log(1 - s(z_x)) ],
//   z = logit_scale * q.
//
// pos_weights counter the inactive-attribute imbalance; a weight of zero
// drops the positive term of that attribute.
inline BceResult weighted_bce_loss(const std::vector<double>& q, const std::vector<double>& targets,
                                   const std::vector<double>& pos_weights, double logit_scale) {
    if (q.size() != targets.size() || q.size() != pos_weights.size())
        throw DimensionError("weighted_bce_loss: size mismatch");
    if (q.empty()) throw DimensionError("weighted_bce_loss: empty input");

    BceResult r;
    r.grad_q.assign(q.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(q.size());
    for (std::size_t x = 0; x < q.size(); ++x) {
        const double t = targets[x];
        if (!(t >= 0.0 && t <= 1.0))
            throw DataError("weighted_bce_loss: target " + std::to_string(t) +
                            " outside [0,1] at attribute " + std::to_string(x + 1));
        const double w = pos_weights[x];
        const double z = logit_scale * q[x];
        const double sig = detail::sigmoid(z);
        r.loss += inv_n * (w * t * detail::softplus(-z) + (1.0 - t) * detail::softplus(z));
        r.grad_q[x] = inv_n * logit_scale * (-w * t * (1.0 - sig) + (1.0 - t) * sig);
    }
    return r;
}

struct CeResult {
    double loss = 0.0;
    std::vector<double> grad_logits;  // softmax(p) - onehot(label)
};

inline CeResult cross_entropy_loss(const std::vector<double>& logits, std::size_t label) {
    if (label >= logits.size())
        throw DataError("cross_entropy_loss: label " + std::to_string(label) + " out of range " +
                        std::to_string(logits.size()));
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    const double lse = mx + std::log(z);

    CeResult r;
    r.loss = lse - logits[label];
    r.grad_logits.resize(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j)
        r.grad_logits[j] = std::exp(logits[j] - lse) - (j == label ? 1.0 : 0.0);
    return r;
}

// ---------------------------------------------------------------- optimizer

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct AdamSlot {
    std::vector<double> m;
    std::vector<double> v;

    void ensure(std::size_t n) {
        if (m.size() != n) m.assign(n, 0.0);
        if (v.size() != n) v.assign(n, 0.0);
    }
};

// One decoupled-weight-decay Adam step; t is the 1-based step count.
// Decay is applied to the parameter before the moment update, so with zero
// gradient the parameter shrinks by exactly (1 - lr * weight_decay).
inline void adamw_step(std::span<double> param, std::span<const double> grad, AdamSlot& slot,
                       std::uint64_t t, double lr, const AdamConfig& cfg, const std::string& name) {
    if (param.size() != grad.size())
        throw DimensionError("adamw_step: shape mismatch for " + name);
    slot.ensure(param.size());
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        if (!std::isfinite(g))
            throw NumericError("adamw_step: non-finite gradient in " + name + "[" +
                               std::to_string(i) + "]");
        param[i] *= 1.0 - lr * cfg.weight_decay;
        slot.m[i] = cfg.beta1 * slot.m[i] + (1.0 - cfg.beta1) * g;
        slot.v[i] = cfg.beta2 * slot.v[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = slot.m[i] / bc1;
        const double vhat = slot.v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

struct CosineSchedule {
    double eta_max = 1e-3;
    double eta_min = 0.0;
    std::uint64_t total_steps = 1;
};

// eta_min + (eta_max - eta_min) (1 + cos(pi t / T)) / 2, clamped past T.
inline double cosine_lr(std::uint64_t t, const CosineSchedule& cfg) {
    if (t >= cfg.total_steps) return cfg.eta_min;
    const double frac = static_cast<double>(t) / static_cast<double>(cfg.total_steps);
    return cfg.eta_min + 0.5 * (cfg.eta_max - cfg.eta_min) * (1.0 + std::cos(M_PI * frac));
}

// ------------------------------------------------- kernel forward/backward

struct KernelForward {
    Matrix logits;   // p = cos / K
    Matrix cosines;  // raw cosine values
    std::vector<double> e_norms;
    std::vector<double> t_norms;
};

inline KernelForward kernel_forward(const Matrix& embeddings, const Matrix& targets,
                                    const SimilarityKernel& kernel) {
    KernelForward f;
    f.e_norms = detail::row_norms_checked(embeddings, "kernel embeddings");
    f.t_norms = detail::row_norms_checked(targets, "kernel targets");
    f.cosines = matmul_a_bt(embeddings, targets);
    for (std::size_t i = 0; i < f.cosines.rows(); ++i) {
        double* r = f.cosines.row_ptr(i);
        for (std::size_t j = 0; j < f.cosines.cols(); ++j) r[j] /= f.e_norms[i] * f.t_norms[j];
    }
    f.logits = f.cosines;
    const double inv_k = 1.0 / kernel.k();
    for (double& v : f.logits.data()) v *= inv_k;
    return f;
}

struct KernelBackward {
    Matrix d_embeddings;            // dL/dY
    std::optional<Matrix> d_targets;  // dL/dT, when requested
    double d_log_k = 0.0;
};

// Chain rule through normalization and temperature. grad_logits is dL/dp
// with p = cos/K. Targets only get a gradient when the attribute encoder is
// itself trainable (MLP ablation); the stationary phi and B never do.
inline KernelBackward kernel_backward(const Matrix& grad_logits, const KernelForward& f,
                                      const Matrix& embeddings, const Matrix& targets,
                                      const SimilarityKernel& kernel, bool want_target_grads) {
    const std::size_t n = embeddings.rows(), c = targets.rows(), d = embeddings.cols();
    if (grad_logits.rows() != n || grad_logits.cols() != c)
        throw DimensionError("kernel_backward: gradient shape mismatch");

    Matrix e_hat(n, d), t_hat(c, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) e_hat(i, j) = embeddings(i, j) / f.e_norms[i];
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < d; ++j) t_hat(i, j) = targets(i, j) / f.t_norms[i];

    const double inv_k = 1.0 / kernel.k();
    KernelBackward out;

    out.d_log_k = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) out.d_log_k -= grad_logits(i, j) * f.logits(i, j);

    // dY_i = (sum_j G_ij t_hat_j - (sum_j G_ij cos_ij) e_hat_i) / (K |y_i|)
    out.d_embeddings = matmul(grad_logits, t_hat);
    for (std::size_t i = 0; i < n; ++i) {
        double proj = 0.0;
        for (std::size_t j = 0; j < c; ++j) proj += grad_logits(i, j) * f.cosines(i, j);
        double* r = out.d_embeddings.row_ptr(i);
        const double* eh = e_hat.row_ptr(i);
        const double scale = inv_k / f.e_norms[i];
        for (std::size_t j = 0; j < d; ++j) r[j] = (r[j] - proj * eh[j]) * scale;
    }

    if (want_target_grads) {
        Matrix dt = matmul_at_b(grad_logits, e_hat);  // c x d
        for (std::size_t jcls = 0; jcls < c; ++jcls) {
            double proj = 0.0;
            for (std::size_t i = 0; i < n; ++i) proj += grad_logits(i, jcls) * f.cosines(i, jcls);
            double* r = dt.row_ptr(jcls);
            const double* th = t_hat.row_ptr(jcls);
            const double scale = inv_k / f.t_norms[jcls];
            for (std::size_t j = 0; j < d; ++j) r[j] = (r[j] - proj * th[j]) * scale;
        }
        out.d_targets = std::move(dt);
    }
    return out;
}

// Full backward pass for the model: loss gradients w.r.t. the kernel output
// down to head parameters, log K, and (when the cache is given) the MLP.
struct KernelChainGrads {
    HeadGrads head;
    double d_log_k = 0.0;
    std::optional<MlpGrads> mlp;
};

inline KernelChainGrads backward_through_kernel(const Matrix& grad_logits, const Matrix& x,
                                                const Matrix& embeddings, const Matrix& targets,
                                                const KernelForward& f, const SimilarityKernel& kernel,
                                                const MlpAttributeEncoder* mlp = nullptr,
                                                const MlpCache* mlp_cache = nullptr,
                                                const Matrix* mlp_input = nullptr) {
    const bool with_mlp = mlp != nullptr;
    KernelBackward kb = kernel_backward(grad_logits, f, embeddings, targets, kernel, with_mlp);
    KernelChainGrads g;
    g.head = backward_head(x, kb.d_embeddings);
    g.d_log_k = kb.d_log_k;
    if (with_mlp) g.mlp = backward_mlp(*mlp, *mlp_input, *mlp_cache, *kb.d_targets);
    return g;
}

}  // namespace hdzsc
