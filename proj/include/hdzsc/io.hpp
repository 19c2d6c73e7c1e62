#pragma once

// File ingestion and emission.
//
// Binary formats are little-endian with magic + version headers; text
// formats are line-oriented ASCII. Parsers reject rather than repair, and
// error messages name the file position and the expectation.
//
// HDCE embeddings: magic "HDCE", u32 version=1, u32 n, u32 d_in, then n
// rows of d_in IEEE-754 float32 little-endian. A companion text index maps
// "row,sample_id,class_id".

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hdzsc/error.hpp"
#include "hdzsc/hypervector.hpp"
#include "hdzsc/matrix.hpp"

namespace hdzsc {

struct EmbeddingRecord {
    std::int64_t sample_id = 0;
    int class_id = 0;
};

// Row-aligned embedding matrix plus its sample/class index. Row reads run
// through row() so an observer can audit data access during training.
class EmbeddingStore {
public:
    EmbeddingStore(Matrix x, std::vector<EmbeddingRecord> records)
        : x_(std::move(x)), records_(std::move(records)) {
        if (x_.rows() != records_.size())
            throw DataError("embedding store: index has " + std::to_string(records_.size()) +
                            " rows but matrix has " + std::to_string(x_.rows()));
    }

    std::size_t size() const { return x_.rows(); }
    std::size_t dim() const { return x_.cols(); }
    const std::vector<EmbeddingRecord>& records() const { return records_; }

    const EmbeddingRecord& record(std::size_t row) const { return records_[row]; }

    std::vector<double> row(std::size_t r) const {
        if (r >= x_.rows()) throw DataError("embedding store: row " + std::to_string(r) + " out of range");
        if (observer_) observer_(r);
        const double* p = x_.row_ptr(r);
        return {p, p + x_.cols()};
    }

    // Batch copy appended into a matrix; every row still passes the observer.
    Matrix rows(const std::vector<std::size_t>& which) const {
        Matrix out(which.size(), x_.cols());
        for (std::size_t i = 0; i < which.size(); ++i) {
            const auto r = row(which[i]);
            std::copy(r.begin(), r.end(), out.row_ptr(i));
        }
        return out;
    }

    void set_row_observer(std::function<void(std::size_t)> obs) const { observer_ = std::move(obs); }

private:
    Matrix x_;
    std::vector<EmbeddingRecord> records_;
    mutable std::function<void(std::size_t)> observer_;
};

namespace detail {
inline void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}
inline bool get_f32(std::istream& is, float& v) {
    std::uint32_t bits = 0;
    if (!get_u32(is, bits)) return false;
    std::memcpy(&v, &bits, 4);
    return true;
}
}  // namespace detail

// Values are widened from float32 on load; writers narrow to float32.
inline void write_hdce(std::ostream& os, const Matrix& x) {
    os.write("HDCE", 4);
    detail::put_u32(os, 1);
    detail::put_u32(os, static_cast<std::uint32_t>(x.rows()));
    detail::put_u32(os, static_cast<std::uint32_t>(x.cols()));
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j)
            detail::put_f32(os, static_cast<float>(x(i, j)));
}

inline Matrix read_hdce(std::istream& is, const std::string& name = "HDCE") {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "HDCE", 4) != 0)
        throw DataError(name + ": bad magic");
    std::uint32_t version = 0, n = 0, d = 0;
    if (!detail::get_u32(is, version)) throw DataError(name + ": truncated header");
    if (version != 1) throw DataError(name + ": unsupported version " + std::to_string(version));
    if (!detail::get_u32(is, n) || !detail::get_u32(is, d))
        throw DataError(name + ": truncated header");
    Matrix x(n, d);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < d; ++j) {
            float v = 0.0f;
            if (!detail::get_f32(is, v))
                throw DataError(name + ": truncated payload at row " + std::to_string(i));
            x(i, j) = static_cast<double>(v);
        }
    }
    return x;
}

// Index lines: "row,sample_id,class_id", row numbering must be 0..n-1.
inline std::vector<EmbeddingRecord> read_embedding_index(std::istream& is,
                                                         const std::string& name = "index") {
    std::vector<EmbeddingRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        long long row = 0, sample = 0, cls = 0;
        char c1 = 0, c2 = 0;
        if (!(ls >> row >> c1 >> sample >> c2 >> cls) || c1 != ',' || c2 != ',')
            throw DataError(name + ": line " + std::to_string(line_no) +
                            ": expected 'row,sample_id,class_id'");
        if (row != static_cast<long long>(out.size()))
            throw DataError(name + ": line " + std::to_string(line_no) + ": row " +
                            std::to_string(row) + " out of order");
        out.push_back({sample, static_cast<int>(cls)});
    }
    return out;
}

inline void write_embedding_index(std::ostream& os, const std::vector<EmbeddingRecord>& records) {
    for (std::size_t i = 0; i < records.size(); ++i)
        os << i << "," << records[i].sample_id << "," << records[i].class_id << "\n";
}

inline EmbeddingStore load_embeddings(const std::string& hdce_path, const std::string& index_path) {
    std::ifstream f(hdce_path, std::ios::binary);
    if (!f) throw DataError("cannot open " + hdce_path);
    Matrix x = read_hdce(f, hdce_path);
    std::ifstream idx(index_path);
    if (!idx) throw DataError("cannot open " + index_path);
    auto records = read_embedding_index(idx, index_path);
    if (records.size() != x.rows())
        throw DataError(index_path + ": " + std::to_string(records.size()) +
                        " index rows vs " + std::to_string(x.rows()) + " embedding rows");
    return EmbeddingStore(std::move(x), std::move(records));
}

inline void save_embeddings(const std::string& hdce_path, const std::string& index_path,
                            const Matrix& x, const std::vector<EmbeddingRecord>& records) {
    std::ofstream f(hdce_path, std::ios::binary);
    if (!f) throw DataError("cannot write " + hdce_path);
    write_hdce(f, x);
    std::ofstream idx(index_path);
    if (!idx) throw DataError("cannot write " + index_path);
    write_embedding_index(idx, records);
}

// Split files: "class_id,split" with split in {train,test,val}.
enum class SplitRole { train, test, val };

struct SplitAssignment {
    std::vector<int> train_classes;
    std::vector<int> test_classes;
    std::vector<int> val_classes;
};

inline SplitAssignment read_split(std::istream& is, const std::string& name = "split") {
    SplitAssignment out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError(name + ": line " + std::to_string(line_no) + ": expected 'class_id,split'");
        int cls = 0;
        try {
            cls = std::stoi(line.substr(0, comma));
        } catch (const std::exception&) {
            throw DataError(name + ": line " + std::to_string(line_no) + ": bad class id");
        }
        std::string role = line.substr(comma + 1);
        while (!role.empty() && (role.back() == '\r' || role.back() == ' ')) role.pop_back();
        if (role == "train")
            out.train_classes.push_back(cls);
        else if (role == "test")
            out.test_classes.push_back(cls);
        else if (role == "val")
            out.val_classes.push_back(cls);
        else
            throw DataError(name + ": line " + std::to_string(line_no) + ": unknown split '" +
                            role + "'");
    }
    return out;
}

inline void write_split(std::ostream& os, const SplitAssignment& split) {
    for (int c : split.train_classes) os << c << ",train\n";
    for (int c : split.val_classes) os << c << ",val\n";
    for (int c : split.test_classes) os << c << ",test\n";
}

// Key-value run manifest; binary artifacts get a "<file>.meta" companion so
// every output can be traced back to the full configuration and seed.
inline void write_manifest(const std::string& path,
                           const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path);
    for (const auto& [k, v] : entries) f << k << "=" << v << "\n";
}

// Minimal SVG polyline plot for loss curves and sweep slices.
inline void write_svg_curve(const std::string& path, const std::vector<double>& ys,
                            const std::string& title) {
    if (ys.empty()) throw DataError("svg: empty curve");
    const double w = 640, h = 400, ml = 50, mr = 15, mt = 30, mb = 35;
    double lo = ys[0], hi = ys[0];
    for (double y : ys) {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
    }
    if (hi == lo) hi = lo + 1.0;

    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"monospace\">"
      << title << "</text>\n";
    f << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
      << "\" stroke=\"black\"/>\n";
    f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
      << "\" stroke=\"black\"/>\n";
    f << "<text x=\"8\" y=\"" << mt + 8 << "\" font-size=\"11\" font-family=\"monospace\">"
      << hi << "</text>\n";
    f << "<text x=\"8\" y=\"" << h - mb << "\" font-size=\"11\" font-family=\"monospace\">"
      << lo << "</text>\n";
    f << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double px = ml + (w - ml - mr) * (ys.size() == 1 ? 0.0
                                         : static_cast<double>(i) / static_cast<double>(ys.size() - 1));
        const double py = (h - mb) - (h - mt - mb) * (ys[i] - lo) / (hi - lo);
        f << px << "," << py << " ";
    }
    f << "\"/>\n</svg>\n";
}

}  // namespace hdzsc
