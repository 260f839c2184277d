#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "escluster/knn_graph.hpp"

namespace escluster {

namespace detail {

struct UnionFind {
    std::vector<std::int32_t> parent;

    explicit UnionFind(std::int64_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::int32_t find(std::int32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a > b) std::swap(a, b);  // keep the lower root
        parent[b] = a;
    }
};

}  // namespace detail

// Diagnostic baseline: connect KNN entries with a_ij >= t and take
// connected components. Labels are contiguous by first appearance.
inline std::vector<std::int32_t> threshold_components(const KnnGraph& knn, double t) {
    detail::UnionFind uf(knn.n);
    for (std::int64_t i = 0; i < knn.n; ++i) {
        for (std::int64_t r = 0; r < knn.k; ++r) {
            if (static_cast<double>(knn.sims(i, r)) >= t) {
                uf.unite(static_cast<std::int32_t>(i), knn.neighbors(i, r));
            }
        }
    }
    std::vector<std::int32_t> labels(knn.n);
    std::vector<std::int32_t> remap(knn.n, -1);
    std::int32_t next = 0;
    for (std::int64_t i = 0; i < knn.n; ++i) {
        const std::int32_t root = uf.find(static_cast<std::int32_t>(i));
        if (remap[root] < 0) remap[root] = next++;
        labels[i] = remap[root];
    }
    return labels;
}

}  // namespace escluster
