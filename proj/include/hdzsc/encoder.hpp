#pragma once

// The stationary class attribute encoder phi = A x B and the cosine
// similarity kernel with learnable temperature.
//
// A is the C x alpha class attribute matrix (one row of attribute strengths
// per class); B is the alpha x d bipolar attribute vector matrix. phi rows
// are kept unnormalized: the kernel normalizes, so per-class scale cancels.

#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "hdzsc/codebooks.hpp"
#include "hdzsc/matrix.hpp"

namespace hdzsc {

enum class AttributeScale { raw, percent };

// C x alpha real matrix of per-class attribute strengths. Row access runs
// through row() so an observer can audit which classes were touched.
class ClassAttributeMatrix {
public:
    ClassAttributeMatrix(Matrix values, std::vector<int> class_ids)
        : values_(std::move(values)), class_ids_(std::move(class_ids)) {
        if (values_.rows() != class_ids_.size())
            throw DimensionError("class attribute matrix: row count != class id count");
        if (!values_.all_finite())
            throw DataError("class attribute matrix: non-finite entry");
    }

    std::size_t classes() const { return values_.rows(); }
    std::size_t alpha() const { return values_.cols(); }
    const std::vector<int>& class_ids() const { return class_ids_; }

    int class_id(std::size_t row) const { return class_ids_[row]; }

    std::size_t row_of_class(int class_id) const {
        for (std::size_t i = 0; i < class_ids_.size(); ++i)
            if (class_ids_[i] == class_id) return i;
        throw DataError("class attribute matrix: unknown class id " + std::to_string(class_id));
    }

    // Attribute strengths of one class. Fires the observer, if any.
    std::vector<double> row(int class_id) const {
        const std::size_t r = row_of_class(class_id);
        if (observer_) observer_(class_id);
        const double* p = values_.row_ptr(r);
        return {p, p + values_.cols()};
    }

    void set_row_observer(std::function<void(int)> obs) const { observer_ = std::move(obs); }

private:
    Matrix values_;
    std::vector<int> class_ids_;
    mutable std::function<void(int)> observer_;
};

// Whitespace-separated C x alpha reals, one class per row (CUB
// "class_attribute_labels_continuous.txt" convention, class ids 1..C).
// percent scale divides by 100 on load.
inline ClassAttributeMatrix load_class_attributes(std::istream& in, std::size_t alpha,
                                                  AttributeScale scale) {
    std::vector<double> flat;
    std::string line;
    std::size_t line_no = 0, rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        double v = 0.0;
        std::size_t n = 0;
        while (ls >> v) {
            flat.push_back(scale == AttributeScale::percent ? v / 100.0 : v);
            ++n;
        }
        if (!ls.eof())
            throw DataError("class attributes: line " + std::to_string(line_no) + ": not a number");
        if (n != alpha)
            throw DataError("class attributes: line " + std::to_string(line_no) + ": expected " +
                            std::to_string(alpha) + " columns, got " + std::to_string(n));
        ++rows;
    }
    if (rows == 0) throw DataError("class attributes: empty file");

    Matrix m(rows, alpha);
    m.data() = std::move(flat);
    std::vector<int> ids(rows);
    for (std::size_t i = 0; i < rows; ++i) ids[i] = static_cast<int>(i) + 1;
    return ClassAttributeMatrix(std::move(m), std::move(ids));
}

// Cosine similarity kernel with learnable temperature K, stored as log K so
// positivity holds by construction. Logits are cos/K.
class SimilarityKernel {
public:
    explicit SimilarityKernel(double inverse_temperature = 10.0, bool learnable = true)
        : learnable_(learnable) {
        if (!(inverse_temperature > 0.0))
            throw NumericError("similarity kernel: inverse temperature must be > 0");
        log_k_ = std::log(1.0 / inverse_temperature);
        clamp();
    }

    double k() const { return std::exp(log_k_); }
    double log_k() const { return log_k_; }
    bool learnable() const { return learnable_; }

    void set_log_k(double v) {
        log_k_ = v;
        clamp();
    }

    // 1/K <= 100 keeps logits bounded while training.
    static constexpr double kMinLogK = -4.605170185988091;  // ln(0.01)

private:
    void clamp() {
        if (log_k_ < kMinLogK) log_k_ = kMinLogK;
    }

    double log_k_ = 0.0;
    bool learnable_ = true;
};

// phi = A x B with B in bipolar +-1 coordinates, restricted to a class
// subset (rows ordered as class_ids). Training passes only its own classes
// here so test-class rows are never touched before evaluation.
inline Matrix build_class_encoder(const ClassAttributeMatrix& a, const AttributeVectorMatrix& b,
                                  const std::vector<int>& class_ids) {
    if (a.alpha() != b.rows())
        throw DimensionError("class encoder: attribute count " + std::to_string(a.alpha()) +
                             " does not match B rows " + std::to_string(b.rows()));
    const std::size_t d = b.dim();
    Matrix phi(class_ids.size(), d);

    std::vector<std::vector<double>> rows;
    rows.reserve(class_ids.size());
    for (int id : class_ids) rows.push_back(a.row(id));

    std::vector<double> coords(d);
    for (std::size_t x = 1; x <= b.rows(); ++x) {
        const Hypervector hv = b.row(x);
        for (std::size_t j = 0; j < d; ++j) coords[j] = static_cast<double>(hv.coordinate(j));
        for (std::size_t i = 0; i < class_ids.size(); ++i) {
            const double w = rows[i][x - 1];
            if (w == 0.0) continue;
            double* out = phi.row_ptr(i);
            for (std::size_t j = 0; j < d; ++j) out[j] += w * coords[j];
        }
    }
    return phi;
}

// Full-matrix convenience overload: all classes, in stored order.
inline Matrix build_class_encoder(const ClassAttributeMatrix& a, const AttributeVectorMatrix& b) {
    return build_class_encoder(a, b, a.class_ids());
}

// Dense +-1 copy of B for kernels that want a real matrix. Transient by
// design; nothing persists it.
inline Matrix to_real_matrix(const AttributeVectorMatrix& b) {
    Matrix m(b.rows(), b.dim());
    for (std::size_t x = 1; x <= b.rows(); ++x) {
        const Hypervector hv = b.row(x);
        double* r = m.row_ptr(x - 1);
        for (std::size_t j = 0; j < b.dim(); ++j) r[j] = static_cast<double>(hv.coordinate(j));
    }
    return m;
}

namespace detail {
inline std::vector<double> row_norms_checked(const Matrix& m, const char* what) {
    std::vector<double> norms(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        norms[i] = row_norm(m, i);
        if (!(norms[i] > 0.0))
            throw NumericError(std::string(what) + ": zero-norm row " + std::to_string(i));
    }
    return norms;
}
}  // namespace detail

// Entry (i,j) = (1/K) * dot(e_i, t_j) / (|e_i| |t_j|). Zero-norm rows are a
// data fault and raise rather than returning NaN.
inline Matrix cossim_batch(const Matrix& embeddings, const Matrix& targets,
                           const SimilarityKernel& kernel) {
    if (embeddings.cols() != targets.cols())
        throw DimensionError("cossim_batch: embedding dim " + std::to_string(embeddings.cols()) +
                             " vs target dim " + std::to_string(targets.cols()));
    const auto enorm = detail::row_norms_checked(embeddings, "cossim_batch embeddings");
    const auto tnorm = detail::row_norms_checked(targets, "cossim_batch targets");

    Matrix logits = matmul_a_bt(embeddings, targets);
    const double inv_k = 1.0 / kernel.k();
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double* r = logits.row_ptr(i);
        for (std::size_t j = 0; j < logits.cols(); ++j) r[j] *= inv_k / (enorm[i] * tnorm[j]);
    }
    return logits;
}

// argmax over classes; ties resolve to the lowest index.
inline std::size_t predict(const std::vector<double>& embedding, const Matrix& phi,
                           const SimilarityKernel& kernel) {
    Matrix e(1, embedding.size());
    e.data() = embedding;
    const Matrix logits = cossim_batch(e, phi, kernel);
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j)
        if (logits(0, j) > logits(0, best)) best = j;
    return best;
}

// Per-attribute cosine similarity q_x = dot(x, b_x) / (|x| sqrt(d)).
// No temperature here; callers scale by 1/K where the model wants it.
inline std::vector<double> attribute_similarity(const std::vector<double>& embedding,
                                                const AttributeVectorMatrix& b) {
    if (embedding.size() != b.dim())
        throw DimensionError("attribute_similarity: dim mismatch");
    double norm2 = 0.0;
    for (double v : embedding) norm2 += v * v;
    if (!(norm2 > 0.0)) throw NumericError("attribute_similarity: zero-norm embedding");
    const double denom = std::sqrt(norm2) * std::sqrt(static_cast<double>(b.dim()));

    std::vector<double> q(b.rows());
    for (std::size_t x = 1; x <= b.rows(); ++x) {
        const Hypervector hv = b.row(x);
        double dot = 0.0;
        for (std::size_t j = 0; j < b.dim(); ++j)
            dot += hv.bit(j) ? -embedding[j] : embedding[j];
        q[x - 1] = dot / denom;
    }
    return q;
}

}  // namespace hdzsc
