#pragma once

// Bit-packed bipolar hypervectors and their algebra.
//
// A d-dimensional hypervector over {+1,-1} is stored as ceil(d/64) words,
// bit i of the packed stream holding coordinate i with the convention
//
//   bit 0 <-> +1,   bit 1 <-> -1,   coordinate(i) = 1 - 2*bit(i)
//
// so elementwise bipolar multiplication (binding) is a single XOR per word
// and the dot product falls out of a popcount. Pad bits past index d-1 are
// kept at zero by every operation.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "hdzsc/error.hpp"
#include "hdzsc/rng.hpp"

namespace hdzsc {

// Seed for a family of deterministically regenerable hypervectors.
// Identical (seed, stream, index, dim) always produces identical bits;
// see rng.hpp for the fixed word-generation algorithm.
struct HdcSeed {
    std::uint64_t seed = 0;
    std::string stream;

    std::uint64_t key() const { return rng::key(seed, stream); }
};

class Hypervector {
public:
    Hypervector() = default;

    explicit Hypervector(std::size_t dim) : dim_(dim), words_(word_count(dim), 0) {
        if (dim == 0) throw DimensionError("hypervector dimension must be >= 1");
    }

    static std::size_t word_count(std::size_t dim) { return (dim + 63) / 64; }

    // All-(+1) vector: the binding identity.
    static Hypervector identity(std::size_t dim) { return Hypervector(dim); }

    // All-(-1) vector.
    static Hypervector all_minus_one(std::size_t dim) {
        Hypervector v(dim);
        for (auto& w : v.words_) w = ~std::uint64_t{0};
        v.mask_pad();
        return v;
    }

    // Adopt pre-packed words; pad bits must already be zero.
    static Hypervector from_words(std::size_t dim, std::vector<std::uint64_t> words) {
        Hypervector v(dim);
        if (words.size() != word_count(dim))
            throw DimensionError("from_words: word count does not match dimension");
        v.words_ = std::move(words);
        const std::size_t rem = dim % 64;
        if (rem != 0 && (v.words_.back() & ((~std::uint64_t{0}) << rem)) != 0)
            throw DataError("from_words: nonzero pad bits");
        return v;
    }

    std::size_t dim() const { return dim_; }
    const std::vector<std::uint64_t>& words() const { return words_; }

    bool bit(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }

    void set_bit(std::size_t i, bool value) {
        const std::uint64_t mask = std::uint64_t{1} << (i % 64);
        if (value)
            words_[i / 64] |= mask;
        else
            words_[i / 64] &= ~mask;
    }

    // Bipolar coordinate in {+1,-1}.
    int coordinate(std::size_t i) const { return bit(i) ? -1 : +1; }

    // Number of -1 coordinates.
    std::size_t popcount() const {
        std::size_t n = 0;
        for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }

    bool operator==(const Hypervector& other) const {
        return dim_ == other.dim_ && words_ == other.words_;
    }
    bool operator!=(const Hypervector& other) const { return !(*this == other); }

private:
    void mask_pad() {
        const std::size_t rem = dim_ % 64;
        if (rem != 0) words_.back() &= (~std::uint64_t{0}) >> (64 - rem);
    }

    std::size_t dim_ = 0;
    std::vector<std::uint64_t> words_;

    friend Hypervector random_hypervector(const HdcSeed&, std::uint64_t, std::size_t);
    friend Hypervector bind(const Hypervector&, const Hypervector&);
    friend Hypervector bundle(const std::vector<Hypervector>&, const HdcSeed&);
    friend Hypervector permute(const Hypervector&, long long);
};

namespace detail {
inline void require_same_dim(const Hypervector& a, const Hypervector& b, const char* op) {
    if (a.dim() != b.dim())
        throw DimensionError(std::string(op) + ": dimension mismatch (" +
                             std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
}
}  // namespace detail

// Fresh Rademacher vector: each coordinate i.i.d. uniform over {+1,-1},
// a pure function of (seed, stream, index, dim).
inline Hypervector random_hypervector(const HdcSeed& seed, std::uint64_t index, std::size_t dim) {
    Hypervector v(dim);
    const std::uint64_t key = seed.key();
    for (std::size_t w = 0; w < v.words_.size(); ++w) v.words_[w] = rng::word(key, index, w);
    v.mask_pad();
    return v;
}

// Binding: coordinate-wise bipolar product, realized as XOR on the packed bits.
inline Hypervector bind(const Hypervector& a, const Hypervector& b) {
    detail::require_same_dim(a, b, "bind");
    Hypervector out(a.dim());
    for (std::size_t w = 0; w < out.words_.size(); ++w) out.words_[w] = a.words()[w] ^ b.words()[w];
    return out;
}

// Unbinding: bipolar binding is self-inverse, so unbind == bind and
// unbind(bind(a,b), b) == a exactly.
inline Hypervector unbind(const Hypervector& c, const Hypervector& b) {
    detail::require_same_dim(c, b, "unbind");
    return bind(c, b);
}

// Bundling: coordinate-wise majority of the bipolar values. A zero sum
// (possible for even operand counts) takes the sign of a deterministic
// tie-break vector drawn from tie_seed at index 0.
inline Hypervector bundle(const std::vector<Hypervector>& vs, const HdcSeed& tie_seed) {
    if (vs.empty()) throw DimensionError("bundle: empty operand list");
    const std::size_t dim = vs[0].dim();
    for (const auto& v : vs) detail::require_same_dim(vs[0], v, "bundle");

    const Hypervector tie = random_hypervector(tie_seed, 0, dim);
    Hypervector out(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        long long sum = 0;
        for (const auto& v : vs) sum += v.coordinate(i);
        const bool minus = sum < 0 || (sum == 0 && tie.bit(i));
        if (minus) out.set_bit(i, true);
    }
    return out;
}

// Cyclic coordinate rotation: result coordinate (i + k) mod d equals input
// coordinate i, so permute(permute(a, k), -k) == a.
inline Hypervector permute(const Hypervector& a, long long k) {
    const long long d = static_cast<long long>(a.dim());
    long long shift = k % d;
    if (shift < 0) shift += d;
    if (shift == 0) return a;

    Hypervector out(a.dim());
    for (long long i = 0; i < d; ++i) {
        if (a.bit(static_cast<std::size_t>(i)))
            out.set_bit(static_cast<std::size_t>((i + shift) % d), true);
    }
    return out;
}

inline std::size_t hamming(const Hypervector& a, const Hypervector& b) {
    detail::require_same_dim(a, b, "hamming");
    std::size_t n = 0;
    for (std::size_t w = 0; w < a.words().size(); ++w)
        n += static_cast<std::size_t>(std::popcount(a.words()[w] ^ b.words()[w]));
    return n;
}

// Cosine similarity of two bipolar vectors: (d - 2*hamming) / d.
inline double cossim_hv(const Hypervector& a, const Hypervector& b) {
    detail::require_same_dim(a, b, "cossim_hv");
    const auto d = static_cast<double>(a.dim());
    return (d - 2.0 * static_cast<double>(hamming(a, b))) / d;
}

// --- HDCB container: magic "HDCB", u32 version=1, u32 count, u32 dim,
// --- then count vectors of ceil(dim/64) little-endian u64 words each.

namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}
inline bool get_u32(std::istream& is, std::uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return true;
}
inline bool get_u64(std::istream& is, std::uint64_t& v) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return true;
}
}  // namespace detail

inline void write_hdcb(std::ostream& os, const std::vector<Hypervector>& vectors) {
    if (vectors.empty()) throw DataError("HDCB: refusing to write an empty codebook");
    os.write("HDCB", 4);
    detail::put_u32(os, 1);
    detail::put_u32(os, static_cast<std::uint32_t>(vectors.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(vectors[0].dim()));
    for (const auto& v : vectors) {
        if (v.dim() != vectors[0].dim()) throw DimensionError("HDCB: mixed dimensions");
        for (auto w : v.words()) detail::put_u64(os, w);
    }
}

inline std::vector<Hypervector> read_hdcb(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "HDCB", 4) != 0)
        throw DataError("HDCB: bad magic");
    std::uint32_t version = 0, count = 0, dim = 0;
    if (!detail::get_u32(is, version)) throw DataError("HDCB: truncated header");
    if (version != 1) throw DataError("HDCB: unsupported version " + std::to_string(version));
    if (!detail::get_u32(is, count) || !detail::get_u32(is, dim))
        throw DataError("HDCB: truncated header");

    std::vector<Hypervector> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::vector<std::uint64_t> words(Hypervector::word_count(dim), 0);
        for (auto& word : words) {
            if (!detail::get_u64(is, word))
                throw DataError("HDCB: truncated payload at vector " + std::to_string(i));
        }
        out.push_back(Hypervector::from_words(dim, std::move(words)));
    }
    return out;
}

}  // namespace hdzsc
