#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "escluster/array2d.hpp"
#include "escluster/errors.hpp"
#include "escluster/feature_store.hpp"
#include "escluster/parallel.hpp"

namespace escluster {

// Top-K neighbors per node under cosine similarity, each row sorted by
// descending similarity with ties broken by ascending index. Similarities
// are kept as float32 to match the cache format; sorting happens on the
// double-precision values before narrowing.
struct KnnGraph {
    std::int64_t n = 0;
    std::int64_t k = 0;
    Array2D<std::int32_t> neighbors;  // n x k
    Array2D<float> sims;              // n x k

    bool operator==(const KnnGraph&) const = default;
};

inline double cosine_similarity(std::int64_t i, std::int64_t j, const FeatureSet& fs) {
    if (i < 0 || i >= fs.n || j < 0 || j >= fs.n) {
        throw ParameterError("cosine_similarity: index out of range");
    }
    const auto a = fs.row(i);
    const auto b = fs.row(j);
    double dot = 0.0;
    for (std::int64_t c = 0; c < fs.d; ++c) {
        dot += static_cast<double>(a[c]) * static_cast<double>(b[c]);
    }
    return dot;
}

namespace detail {

// Selects the k best (similarity desc, index asc) entries of one query row.
inline void select_top_k(const std::vector<double>& sims, std::int64_t self, std::int64_t k,
                         std::span<std::int32_t> out_idx, std::span<float> out_sim) {
    const std::int64_t n = static_cast<std::int64_t>(sims.size());
    thread_local std::vector<std::int32_t> order;
    order.clear();
    order.reserve(n - 1);
    for (std::int64_t j = 0; j < n; ++j) {
        if (j != self) order.push_back(static_cast<std::int32_t>(j));
    }
    const auto better = [&](std::int32_t a, std::int32_t b) {
        if (sims[a] != sims[b]) return sims[a] > sims[b];
        return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), better);
    for (std::int64_t r = 0; r < k; ++r) {
        out_idx[r] = order[r];
        out_sim[r] = static_cast<float>(sims[order[r]]);
    }
}

}  // namespace detail

// Exact brute-force KNN. Each query row accumulates dot products against
// every other sample in double precision, then keeps the top k. Rows are
// independent, so the result does not depend on the worker count.
inline KnnGraph build_knn(const FeatureSet& fs, std::int64_t k, int threads = 0) {
    if (!fs.normalized) throw PreconditionError("build_knn: features must be normalized");
    if (k < 1 || k >= fs.n) {
        throw ParameterError("build_knn: k must satisfy 1 <= k <= n-1 (k=" + std::to_string(k) +
                             ", n=" + std::to_string(fs.n) + ")");
    }
    KnnGraph g;
    g.n = fs.n;
    g.k = k;
    g.neighbors = Array2D<std::int32_t>(fs.n, k);
    g.sims = Array2D<float>(fs.n, k);

    if (threads <= 0) threads = default_thread_count();
    const std::int64_t n = fs.n;
    const std::int64_t d = fs.d;
    const float* base = fs.data.data();

    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> sims(static_cast<std::size_t>(n));
        for (std::size_t i = begin; i < end; ++i) {
            const float* qi = base + i * d;
            for (std::int64_t j = 0; j < n; ++j) {
                const float* pj = base + j * d;
                double dot = 0.0;
                for (std::int64_t c = 0; c < d; ++c) {
                    dot += static_cast<double>(qi[c]) * static_cast<double>(pj[c]);
                }
                sims[static_cast<std::size_t>(j)] = dot;
            }
            detail::select_top_k(sims, static_cast<std::int64_t>(i), k,
                                 g.neighbors.row(i), g.sims.row(i));
        }
    });
    return g;
}

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline constexpr char kKnnMagic[4] = {'N', 'K', 'N', 'N'};
inline constexpr std::uint32_t kKnnVersion = 1;

// Cache layout: "NKNN", u32 version, u32 n, u32 k, n*k little-endian i32
// neighbor indices, n*k little-endian f32 similarities.
inline void save_knn(const KnnGraph& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("save_knn: cannot open " + path);
    out.write(kKnnMagic, 4);
    detail::write_u32(out, kKnnVersion);
    detail::write_u32(out, static_cast<std::uint32_t>(g.n));
    detail::write_u32(out, static_cast<std::uint32_t>(g.k));
    out.write(reinterpret_cast<const char*>(g.neighbors.data()),
              static_cast<std::streamsize>(g.n * g.k * sizeof(std::int32_t)));
    out.write(reinterpret_cast<const char*>(g.sims.data()),
              static_cast<std::streamsize>(g.n * g.k * sizeof(float)));
    if (!out) throw Error("save_knn: short write to " + path);
}

inline KnnGraph load_knn(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_knn: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kKnnMagic, 4) != 0) {
        throw FormatError("load_knn: bad magic in " + path);
    }
    const std::uint32_t version = detail::read_u32(in);
    if (!in || version != kKnnVersion) {
        throw FormatError("load_knn: unsupported version in " + path);
    }
    const std::uint32_t n = detail::read_u32(in);
    const std::uint32_t k = detail::read_u32(in);
    if (!in) throw FormatError("load_knn: truncated header in " + path);

    KnnGraph g;
    g.n = n;
    g.k = k;
    g.neighbors = Array2D<std::int32_t>(n, k);
    g.sims = Array2D<float>(n, k);
    const std::streamsize ints = static_cast<std::streamsize>(g.n * g.k * sizeof(std::int32_t));
    const std::streamsize floats = static_cast<std::streamsize>(g.n * g.k * sizeof(float));
    in.read(reinterpret_cast<char*>(g.neighbors.data()), ints);
    if (in.gcount() != ints) throw FormatError("load_knn: truncated index block in " + path);
    in.read(reinterpret_cast<char*>(g.sims.data()), floats);
    if (in.gcount() != floats) throw FormatError("load_knn: truncated similarity block in " + path);
    return g;
}

}  // namespace escluster
