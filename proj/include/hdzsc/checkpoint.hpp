#pragma once

// Checkpoints: a text header carrying dimensions, step counter, scheduler
// config and flags (floats as hexfloat so nothing is lost), followed by raw
// little-endian 64-bit parameter blocks in a fixed order:
//
//   log_k, head.w (row-major), head.b, [mlp.w1, mlp.b1, mlp.w2, mlp.b2]
//
// Optimizer moments are not stored; every training phase starts a fresh
// optimizer over the loaded parameters.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hdzsc/training.hpp"

namespace hdzsc {

namespace detail {
inline std::string hexfloat(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}
inline double parse_double(const std::string& s, const std::string& what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw DataError("checkpoint: bad " + what + " value '" + s + "'");
    return v;
}
inline void put_doubles(std::ostream& os, const std::vector<double>& xs) {
    for (double x : xs) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        put_u64(os, bits);
    }
}
inline void get_doubles(std::istream& is, std::vector<double>& xs, const std::string& what) {
    for (double& x : xs) {
        std::uint64_t bits = 0;
        if (!get_u64(is, bits)) throw DataError("checkpoint: truncated block " + what);
        std::memcpy(&x, &bits, 8);
    }
}
}  // namespace detail

inline void save_checkpoint(const std::string& path, const TrainState& st) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << "HDZSC-CKPT 1\n";
    f << "d_in " << st.head.d_in() << "\n";
    f << "d " << st.head.d_out() << "\n";
    if (st.mlp)
        f << "mlp 1 " << st.mlp->alpha() << " " << st.mlp->hidden() << "\n";
    else
        f << "mlp 0\n";
    f << "step " << st.step << "\n";
    f << "sched " << detail::hexfloat(st.sched.eta_max) << " " << detail::hexfloat(st.sched.eta_min)
      << " " << st.sched.total_steps << "\n";
    f << "logit_scale " << detail::hexfloat(st.logit_scale) << "\n";
    f << "learnable_temp " << (st.kernel.learnable() ? 1 : 0) << "\n";
    f << "params\n";

    detail::put_doubles(f, {st.kernel.log_k()});
    detail::put_doubles(f, st.head.w.data());
    detail::put_doubles(f, st.head.b);
    if (st.mlp) {
        detail::put_doubles(f, st.mlp->w1.data());
        detail::put_doubles(f, st.mlp->b1);
        detail::put_doubles(f, st.mlp->w2.data());
        detail::put_doubles(f, st.mlp->b2);
    }
}

inline TrainState load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path);

    auto next_line = [&](const std::string& what) {
        std::string line;
        if (!std::getline(f, line)) throw DataError("checkpoint: missing " + what);
        return line;
    };
    if (next_line("magic") != "HDZSC-CKPT 1") throw DataError("checkpoint: bad magic line");

    std::size_t d_in = 0, d = 0, mlp_alpha = 0, mlp_hidden = 0;
    bool has_mlp = false, learnable_temp = true;
    std::uint64_t step = 0, total_steps = 1;
    double eta_max = 0.0, eta_min = 0.0, logit_scale = 5.0;

    for (;;) {
        const std::string line = next_line("header");
        if (line == "params") break;
        std::istringstream ls(line);
        std::string keyword;
        ls >> keyword;
        if (keyword == "d_in")
            ls >> d_in;
        else if (keyword == "d")
            ls >> d;
        else if (keyword == "mlp") {
            int flag = 0;
            ls >> flag;
            has_mlp = flag != 0;
            if (has_mlp) ls >> mlp_alpha >> mlp_hidden;
        } else if (keyword == "step")
            ls >> step;
        else if (keyword == "sched") {
            std::string a, b;
            ls >> a >> b >> total_steps;
            eta_max = detail::parse_double(a, "sched eta_max");
            eta_min = detail::parse_double(b, "sched eta_min");
        } else if (keyword == "logit_scale") {
            std::string a;
            ls >> a;
            logit_scale = detail::parse_double(a, "logit_scale");
        } else if (keyword == "learnable_temp") {
            int flag = 1;
            ls >> flag;
            learnable_temp = flag != 0;
        } else {
            throw DataError("checkpoint: unknown header line '" + line + "'");
        }
        if (ls.fail()) throw DataError("checkpoint: malformed header line '" + line + "'");
    }
    if (d_in == 0 || d == 0) throw DataError("checkpoint: missing dimensions");

    TrainState st;
    st.head.w = Matrix(d_in, d);
    st.head.b.assign(d, 0.0);
    if (has_mlp) {
        MlpAttributeEncoder m;
        m.w1 = Matrix(mlp_alpha, mlp_hidden);
        m.b1.assign(mlp_hidden, 0.0);
        m.w2 = Matrix(mlp_hidden, d);
        m.b2.assign(d, 0.0);
        st.mlp = std::move(m);
    }
    st.step = step;
    st.sched = CosineSchedule{eta_max, eta_min, total_steps};
    st.logit_scale = logit_scale;

    std::vector<double> log_k(1);
    detail::get_doubles(f, log_k, "log_k");
    st.kernel = SimilarityKernel(1.0, learnable_temp);
    st.kernel.set_log_k(log_k[0]);
    detail::get_doubles(f, st.head.w.data(), "head.w");
    detail::get_doubles(f, st.head.b, "head.b");
    if (st.mlp) {
        detail::get_doubles(f, st.mlp->w1.data(), "mlp.w1");
        detail::get_doubles(f, st.mlp->b1, "mlp.b1");
        detail::get_doubles(f, st.mlp->w2.data(), "mlp.w2");
        detail::get_doubles(f, st.mlp->b2, "mlp.b2");
    }
    return st;
}

}  // namespace hdzsc
