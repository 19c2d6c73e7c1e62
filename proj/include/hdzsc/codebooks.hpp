#pragma once

// Group and value codebooks plus the implicit attribute vector matrix B.
//
// Atomic hypervectors exist only for the G group names and V value names;
// the alpha attribute vectors b_x = bind(g_y, v_z) are materialized on
// demand and never stored densely (a dense dump exists for testing).

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hdzsc/hypervector.hpp"
#include "hdzsc/schema.hpp"

namespace hdzsc {

enum class CodebookKind { groups, values };

// Fixed table of atomic hypervectors, one per name. Index = the name's rank
// in lexicographic order. Regeneration from (seed, stream) is bit-exact.
class Codebook {
public:
    Codebook(CodebookKind kind, std::vector<std::string> sorted_names, HdcSeed seed, std::size_t dim)
        : kind_(kind), names_(std::move(sorted_names)), seed_(std::move(seed)), dim_(dim) {
        vectors_.reserve(names_.size());
        for (std::size_t i = 0; i < names_.size(); ++i)
            vectors_.push_back(random_hypervector(seed_, i, dim_));
        for (std::size_t i = 0; i < names_.size(); ++i) rank_[names_[i]] = i;
    }

    CodebookKind kind() const { return kind_; }
    std::size_t size() const { return vectors_.size(); }
    std::size_t dim() const { return dim_; }
    const HdcSeed& seed() const { return seed_; }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<Hypervector>& vectors() const { return vectors_; }

    const Hypervector& at(const std::string& name) const {
        auto it = rank_.find(name);
        if (it == rank_.end()) throw DataError("codebook: unknown name '" + name + "'");
        return vectors_[it->second];
    }

private:
    CodebookKind kind_;
    std::vector<std::string> names_;
    HdcSeed seed_;
    std::size_t dim_;
    std::vector<Hypervector> vectors_;
    std::map<std::string, std::size_t> rank_;
};

struct Codebooks {
    Codebook groups;
    Codebook values;
};

// Derives the two codebooks from one base seed: stream tags "groups" and
// "values" keep the families disjoint.
inline Codebooks build_codebooks(const AttributeSchema& schema, std::size_t dim, std::uint64_t seed) {
    return Codebooks{
        Codebook(CodebookKind::groups, schema.sorted_groups(), HdcSeed{seed, "groups"}, dim),
        Codebook(CodebookKind::values, schema.sorted_values(), HdcSeed{seed, "values"}, dim),
    };
}

// b_x = bind(g_{group(x)}, v_{value(x)}) for 1-based attribute index x.
inline Hypervector attribute_vector(const AttributeSchema& schema, const Codebook& groups,
                                    const Codebook& values, std::size_t x) {
    const AttributeEntry& e = schema.entry(x);
    return bind(groups.at(e.group), values.at(e.value));
}

// View of the alpha x d attribute matrix B; rows materialize per call.
class AttributeVectorMatrix {
public:
    AttributeVectorMatrix(const AttributeSchema& schema, const Codebooks& books)
        : schema_(&schema), books_(&books) {}

    std::size_t rows() const { return schema_->alpha(); }
    std::size_t dim() const { return books_->groups.dim(); }
    const AttributeSchema& schema() const { return *schema_; }

    Hypervector row(std::size_t x_1based) const {
        return attribute_vector(*schema_, books_->groups, books_->values, x_1based);
    }

    // Dense dump, for tests and the CLI's dump mode only.
    std::vector<Hypervector> materialize_all() const {
        std::vector<Hypervector> out;
        out.reserve(rows());
        for (std::size_t x = 1; x <= rows(); ++x) out.push_back(row(x));
        return out;
    }

private:
    const AttributeSchema* schema_;
    const Codebooks* books_;
};

}  // namespace hdzsc
