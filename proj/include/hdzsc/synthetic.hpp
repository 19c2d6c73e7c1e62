#pragma once

// Desk-scale synthetic zero-shot task.
//
// A random schema of alpha (group,value) pairs over G groups and V values;
// each class activates exactly one attribute per group. Clean class
// embeddings are a hidden linear image M of the normalized encoder row
// phi(class); samples add i.i.d. Gaussian noise. Because every class row
// lives in the span of the shared attribute vectors, a head trained on the
// seen classes transfers to the held-out ones.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "hdzsc/codebooks.hpp"
#include "hdzsc/encoder.hpp"
#include "hdzsc/io.hpp"
#include "hdzsc/matrix.hpp"
#include "hdzsc/rng.hpp"
#include "hdzsc/schema.hpp"

namespace hdzsc {

struct SyntheticParams {
    std::size_t classes = 40;
    std::size_t train_classes = 30;
    std::size_t alpha = 24;
    std::size_t groups = 8;
    std::size_t values = 10;
    std::size_t d_in = 256;       // embedding (backbone) dimension
    std::size_t d = 512;          // hypervector dimension
    double noise_sigma = 0.1;
    std::size_t samples_per_class = 50;
    std::uint64_t seed = 1;
};

struct SyntheticTask {
    AttributeSchema schema;
    ClassAttributeMatrix attributes;  // classes x alpha, entries in {0,1}
    SplitAssignment split;
    EmbeddingStore store;
    Matrix mixing;                    // hidden M, d_in x d (kept for oracles)
};

inline SyntheticTask generate_synthetic(const SyntheticParams& p) {
    if (p.groups == 0 || p.values == 0 || p.alpha == 0)
        throw DataError("synthetic: alpha, groups, values must be >= 1");
    if (p.groups * p.values < p.alpha)
        throw DataError("synthetic: infeasible schema, G*V < alpha");
    if (p.alpha < p.groups)
        throw DataError("synthetic: infeasible schema, alpha < G leaves empty groups");
    if (p.train_classes == 0 || p.train_classes >= p.classes)
        throw DataError("synthetic: train class count must be in 1..classes-1");
    if (p.samples_per_class == 0)
        throw DataError("synthetic: samples per class must be >= 1");
    if (p.d_in == 0 || p.d == 0) throw DimensionError("synthetic: dimensions must be >= 1");

    // Schema: group x = x mod G (so every group is populated), value drawn
    // uniformly subject to (group,value) uniqueness.
    rng::Stream schema_rng(p.seed, "synthetic_schema");
    std::vector<AttributeEntry> entries;
    std::set<std::pair<std::size_t, std::size_t>> used;
    for (std::size_t x = 0; x < p.alpha; ++x) {
        const std::size_t g = x % p.groups;
        std::size_t v;
        do {
            v = static_cast<std::size_t>(schema_rng.next_below(p.values));
        } while (!used.emplace(g, v).second);
        entries.push_back({static_cast<std::uint32_t>(x + 1), "group_" + std::to_string(g),
                           "value_" + std::to_string(v)});
    }
    AttributeSchema schema(std::move(entries));

    // Class rows: one active attribute per group, rows pairwise distinct.
    std::vector<std::vector<std::size_t>> members;  // per group, 1-based attribute indices
    for (const auto& g : schema.sorted_groups()) members.push_back(schema.group_members(g));

    rng::Stream class_rng(p.seed, "synthetic_classes");
    Matrix a(p.classes, p.alpha);
    std::set<std::vector<std::size_t>> seen_rows;
    for (std::size_t c = 0; c < p.classes; ++c) {
        std::vector<std::size_t> choice(members.size());
        std::size_t attempts = 0;
        do {
            if (++attempts > 10000)
                throw DataError("synthetic: cannot draw " + std::to_string(p.classes) +
                                " distinct class description rows");
            for (std::size_t g = 0; g < members.size(); ++g)
                choice[g] = members[g][class_rng.next_below(members[g].size())];
        } while (!seen_rows.insert(choice).second);
        for (std::size_t x : choice) a(c, x - 1) = 1.0;
    }
    std::vector<int> class_ids(p.classes);
    for (std::size_t c = 0; c < p.classes; ++c) class_ids[c] = static_cast<int>(c) + 1;
    ClassAttributeMatrix attributes(std::move(a), class_ids);

    // Hidden mixing matrix M: d -> d_in, entries N(0, 1/d).
    rng::Stream mix_rng(p.seed, "synthetic_mixing");
    Matrix mixing(p.d_in, p.d);
    const double mscale = 1.0 / std::sqrt(static_cast<double>(p.d));
    for (double& v : mixing.data()) v = mscale * mix_rng.next_normal();

    // Clean per-class embeddings: M * normalize(phi_row).
    Codebooks books = build_codebooks(schema, p.d, p.seed);
    AttributeVectorMatrix b(schema, books);
    Matrix phi = build_class_encoder(attributes, b, class_ids);
    Matrix clean(p.classes, p.d_in);
    for (std::size_t c = 0; c < p.classes; ++c) {
        const double norm = row_norm(phi, c);
        if (!(norm > 0.0)) throw NumericError("synthetic: zero-norm encoder row");
        for (std::size_t i = 0; i < p.d_in; ++i) {
            double s = 0.0;
            const double* mrow = mixing.row_ptr(i);
            const double* prow = phi.row_ptr(c);
            for (std::size_t j = 0; j < p.d; ++j) s += mrow[j] * prow[j];
            clean(c, i) = s / norm;
        }
    }

    // Samples: clean(class) + N(0, sigma^2), stored at float32 precision so
    // the in-memory task and its HDCE round trip behave identically.
    rng::Stream noise_rng(p.seed, "synthetic_noise");
    const std::size_t n = p.classes * p.samples_per_class;
    Matrix x(n, p.d_in);
    std::vector<EmbeddingRecord> records(n);
    std::size_t row = 0;
    for (std::size_t c = 0; c < p.classes; ++c) {
        for (std::size_t s = 0; s < p.samples_per_class; ++s, ++row) {
            for (std::size_t i = 0; i < p.d_in; ++i) {
                const double v = clean(c, i) + p.noise_sigma * noise_rng.next_normal();
                x(row, i) = static_cast<double>(static_cast<float>(v));
            }
            records[row] = {static_cast<std::int64_t>(row), class_ids[c]};
        }
    }

    SplitAssignment split;
    for (std::size_t c = 0; c < p.classes; ++c) {
        if (c < p.train_classes)
            split.train_classes.push_back(class_ids[c]);
        else
            split.test_classes.push_back(class_ids[c]);
    }

    return SyntheticTask{std::move(schema), std::move(attributes), std::move(split),
                         EmbeddingStore(std::move(x), std::move(records)), std::move(mixing)};
}

}  // namespace hdzsc
