#pragma once

// Attribute schema: an ordered dictionary of (group, value) pairs, one per
// attribute index, parsed from CUB-style "attributes.txt" lines of the form
//
//   <index> <group>::<value>
//
// Indices are 1-based and contiguous. The factorization into G distinct
// groups and V distinct values is what makes the codebooks compact.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hdzsc/error.hpp"

namespace hdzsc {

struct AttributeEntry {
    std::uint32_t index = 0;  // 1-based
    std::string group;
    std::string value;
};

class AttributeSchema {
public:
    explicit AttributeSchema(std::vector<AttributeEntry> entries) : entries_(std::move(entries)) {
        std::set<std::pair<std::string, std::string>> seen;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& e = entries_[i];
            if (e.index != i + 1)
                throw DataError("schema: non-contiguous attribute index " +
                                std::to_string(e.index) + " at position " + std::to_string(i + 1));
            if (!seen.emplace(e.group, e.value).second)
                throw DataError("schema: duplicate pair " + e.group + "::" + e.value);
            groups_.insert(e.group);
            values_.insert(e.value);
        }
        if (entries_.empty()) throw DataError("schema: no attributes");
    }

    std::size_t alpha() const { return entries_.size(); }
    std::size_t group_count() const { return groups_.size(); }
    std::size_t value_count() const { return values_.size(); }

    const AttributeEntry& entry(std::size_t attribute_index_1based) const {
        if (attribute_index_1based < 1 || attribute_index_1based > entries_.size())
            throw DataError("schema: attribute index " + std::to_string(attribute_index_1based) +
                            " out of range 1.." + std::to_string(entries_.size()));
        return entries_[attribute_index_1based - 1];
    }

    const std::vector<AttributeEntry>& entries() const { return entries_; }

    // Names in sorted order; a name's rank here is its codebook index, so a
    // reordered schema file cannot silently change vectors.
    std::vector<std::string> sorted_groups() const { return {groups_.begin(), groups_.end()}; }
    std::vector<std::string> sorted_values() const { return {values_.begin(), values_.end()}; }

    // Attribute indices (1-based) belonging to one group, in schema order.
    std::vector<std::size_t> group_members(const std::string& group) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i].group == group) out.push_back(i + 1);
        return out;
    }

private:
    std::vector<AttributeEntry> entries_;
    std::set<std::string> groups_;
    std::set<std::string> values_;
};

// Parse "<index> <group>::<value>" lines; blank lines are ignored.
inline AttributeSchema parse_schema(std::istream& in) {
    std::vector<AttributeEntry> entries;
    std::set<std::uint32_t> seen_indices;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        std::istringstream ls(line);
        long long index = 0;
        std::string name;
        if (!(ls >> index >> name) || index <= 0)
            throw DataError("schema: malformed line " + std::to_string(line_no) + ": '" + line + "'");
        const auto sep = name.find("::");
        if (sep == std::string::npos || sep == 0 || sep + 2 >= name.size())
            throw DataError("schema: line " + std::to_string(line_no) +
                            ": expected '<group>::<value>', got '" + name + "'");
        if (!seen_indices.insert(static_cast<std::uint32_t>(index)).second)
            throw DataError("schema: duplicate index " + std::to_string(index) + " at line " +
                            std::to_string(line_no));
        entries.push_back({static_cast<std::uint32_t>(index), name.substr(0, sep), name.substr(sep + 2)});
    }
    std::sort(entries.begin(), entries.end(),
              [](const AttributeEntry& a, const AttributeEntry& b) { return a.index < b.index; });
    return AttributeSchema(std::move(entries));
}

inline AttributeSchema parse_schema_text(const std::string& text) {
    std::istringstream in(text);
    return parse_schema(in);
}

// Storage cost of factored (G+V atomic vectors) vs unfactored (one vector per
// attribute) codebooks at a given dimension.
struct MemoryReport {
    std::uint64_t factored_bytes = 0;
    std::uint64_t unfactored_bytes = 0;
    double reduction_fraction = 0.0;  // 1 - (G+V)/alpha
};

inline MemoryReport memory_report(const AttributeSchema& schema, std::size_t dim) {
    if (dim == 0) throw DimensionError("memory_report: dimension must be >= 1");
    const std::uint64_t bytes_per_vector = (dim + 7) / 8;
    const std::uint64_t atoms = schema.group_count() + schema.value_count();
    MemoryReport r;
    r.factored_bytes = atoms * bytes_per_vector;
    r.unfactored_bytes = static_cast<std::uint64_t>(schema.alpha()) * bytes_per_vector;
    r.reduction_fraction = 1.0 - static_cast<double>(atoms) / static_cast<double>(schema.alpha());
    return r;
}

}  // namespace hdzsc
