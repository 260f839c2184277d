#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "escluster/array2d.hpp"
#include "escluster/errors.hpp"
#include "escluster/feature_store.hpp"
#include "escluster/knn_graph.hpp"
#include "escluster/parallel.hpp"

namespace escluster {

// Per-node normalized edge probabilities p_hat and neighbor-based edge
// probabilities p_tilde, both aligned with the KnnGraph rank order.
struct NepGraph {
    const KnnGraph* knn = nullptr;
    double tau = 0.0;
    Array2D<double> p_hat;    // n x k, each row sums to 1
    Array2D<double> p_tilde;  // n x k, values in [0, 1]
};

// Cosine similarity -> squared l2 distance of unit vectors.
inline double to_sq_l2(double a) {
    a = std::clamp(a, -1.0, 1.0);
    return 2.0 - 2.0 * a;
}

inline double edge_prob(double d, double tau) {
    if (tau <= 0.0) throw ParameterError("edge_prob: tau must be > 0");
    return std::exp(-d / tau);
}

// Row-normalized edge probabilities: p_hat[i][r] = p(i, r-th neighbor) / s_i
// where s_i sums p over the row. All sums run in double.
inline Array2D<double> normalize_probs(const KnnGraph& knn, double tau) {
    if (tau <= 0.0) throw ParameterError("normalize_probs: tau must be > 0");
    Array2D<double> p_hat(knn.n, knn.k);
    for (std::int64_t i = 0; i < knn.n; ++i) {
        const auto sims = knn.sims.row(i);
        auto out = p_hat.row(i);
        double s = 0.0;
        for (std::int64_t r = 0; r < knn.k; ++r) {
            out[r] = edge_prob(to_sq_l2(sims[r]), tau);
            s += out[r];
        }
        for (std::int64_t r = 0; r < knn.k; ++r) out[r] /= s;
    }
    return p_hat;
}

namespace detail {

// Neighbor rows re-sorted by ascending index with aligned p_hat values,
// so pairwise intersections reduce to an O(K) sorted merge.
struct IndexSortedRows {
    Array2D<std::int32_t> idx;
    Array2D<double> phat;
};

inline IndexSortedRows sort_rows_by_index(const KnnGraph& knn, const Array2D<double>& p_hat) {
    IndexSortedRows s{Array2D<std::int32_t>(knn.n, knn.k), Array2D<double>(knn.n, knn.k)};
    std::vector<std::int32_t> order(knn.k);
    for (std::int64_t i = 0; i < knn.n; ++i) {
        const auto nbr = knn.neighbors.row(i);
        const auto ph = p_hat.row(i);
        for (std::int64_t r = 0; r < knn.k; ++r) order[r] = static_cast<std::int32_t>(r);
        std::sort(order.begin(), order.end(),
                  [&](std::int32_t a, std::int32_t b) { return nbr[a] < nbr[b]; });
        auto oi = s.idx.row(i);
        auto op = s.phat.row(i);
        for (std::int64_t r = 0; r < knn.k; ++r) {
            oi[r] = nbr[order[r]];
            op[r] = ph[order[r]];
        }
    }
    return s;
}

// Merge two index-sorted rows; accumulates p_hat_i[h] + p_hat_j[h] over the
// intersection and counts common neighbors.
inline void merge_common(std::span<const std::int32_t> ia, std::span<const double> pa,
                         std::span<const std::int32_t> ib, std::span<const double> pb,
                         double& sum, std::int64_t& count) {
    sum = 0.0;
    count = 0;
    std::size_t a = 0, b = 0;
    while (a < ia.size() && b < ib.size()) {
        if (ia[a] < ib[b]) {
            ++a;
        } else if (ia[a] > ib[b]) {
            ++b;
        } else {
            sum += pa[a] + pb[b];
            ++count;
            ++a;
            ++b;
        }
    }
}

}  // namespace detail

// Neighbor-based edge probability for one pair, symmetric reading: both
// summands live inside the stored rows of i and j, and the denominator of
// the normalized form is exactly 2.
inline double neighbor_edge_prob(std::int64_t i, std::int64_t j, const KnnGraph& knn,
                                 const Array2D<double>& p_hat) {
    const auto nbr_i = knn.neighbors.row(i);
    if (std::find(nbr_i.begin(), nbr_i.end(), static_cast<std::int32_t>(j)) == nbr_i.end()) {
        throw PreconditionError("neighbor_edge_prob: node " + std::to_string(j) +
                                " is not a stored neighbor of " + std::to_string(i));
    }
    std::vector<std::pair<std::int32_t, double>> a(knn.k), b(knn.k);
    for (std::int64_t r = 0; r < knn.k; ++r) {
        a[r] = {knn.neighbors(i, r), p_hat(i, r)};
        b[r] = {knn.neighbors(j, r), p_hat(j, r)};
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double sum = 0.0;
    std::size_t x = 0, y = 0;
    while (x < a.size() && y < b.size()) {
        if (a[x].first < b[y].first) {
            ++x;
        } else if (a[x].first > b[y].first) {
            ++y;
        } else {
            sum += a[x].second + b[y].second;
            ++x;
            ++y;
        }
    }
    return std::clamp(sum / 2.0, 0.0, 1.0);
}

// Batched NEP over the whole graph (symmetric reading). Parallel across
// source nodes; every value matches the per-pair operation.
inline NepGraph compute_all_nep(const KnnGraph& knn, double tau, int threads = 0) {
    NepGraph nep;
    nep.knn = &knn;
    nep.tau = tau;
    nep.p_hat = normalize_probs(knn, tau);
    nep.p_tilde = Array2D<double>(knn.n, knn.k);
    if (threads <= 0) threads = default_thread_count();

    const auto sorted = detail::sort_rows_by_index(knn, nep.p_hat);
    parallel_for(static_cast<std::size_t>(knn.n), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            for (std::int64_t r = 0; r < knn.k; ++r) {
                const std::int32_t j = knn.neighbors(i, r);
                double sum = 0.0;
                std::int64_t count = 0;
                detail::merge_common(sorted.idx.row(i), sorted.phat.row(i),
                                     sorted.idx.row(j), sorted.phat.row(j), sum, count);
                nep.p_tilde(i, r) = std::clamp(sum / 2.0, 0.0, 1.0);
            }
        }
    });
    return nep;
}

// Literal reading of the second summand: the bridge node's own probability
// toward j, p_hat_hj = p_hj / s_h, which can point outside h's stored row
// and makes the denominator pair-dependent. Needs feature access.
inline NepGraph compute_all_nep_literal(const KnnGraph& knn, double tau, const FeatureSet& fs,
                                        int threads = 0) {
    if (!fs.normalized) throw PreconditionError("compute_all_nep_literal: features must be normalized");
    if (tau <= 0.0) throw ParameterError("compute_all_nep_literal: tau must be > 0");
    NepGraph nep;
    nep.knn = &knn;
    nep.tau = tau;
    nep.p_hat = normalize_probs(knn, tau);
    nep.p_tilde = Array2D<double>(knn.n, knn.k);
    if (threads <= 0) threads = default_thread_count();

    // Row sums s_h of the unnormalized probabilities, for p_hat_hj.
    std::vector<double> row_sum(knn.n, 0.0);
    for (std::int64_t h = 0; h < knn.n; ++h) {
        double s = 0.0;
        const auto sims = knn.sims.row(h);
        for (std::int64_t r = 0; r < knn.k; ++r) s += edge_prob(to_sq_l2(sims[r]), tau);
        row_sum[h] = s;
    }

    const auto sorted = detail::sort_rows_by_index(knn, nep.p_hat);
    parallel_for(static_cast<std::size_t>(knn.n), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            for (std::int64_t r = 0; r < knn.k; ++r) {
                const std::int32_t j = knn.neighbors(i, r);
                const auto idx_i = sorted.idx.row(i);
                const auto ph_i = sorted.phat.row(i);
                const auto idx_j = sorted.idx.row(j);

                double denom = 1.0;  // sum of p_hat_ih over N_i
                for (std::int64_t rj = 0; rj < knn.k; ++rj) {
                    const std::int32_t h = knn.neighbors(j, rj);
                    denom += edge_prob(to_sq_l2(cosine_similarity(h, j, fs)), tau) / row_sum[h];
                }
                double numer = 0.0;
                std::size_t a = 0, b = 0;
                while (a < idx_i.size() && b < idx_j.size()) {
                    if (idx_i[a] < idx_j[b]) {
                        ++a;
                    } else if (idx_i[a] > idx_j[b]) {
                        ++b;
                    } else {
                        const std::int32_t h = idx_i[a];
                        const double p_hj =
                            edge_prob(to_sq_l2(cosine_similarity(h, j, fs)), tau) / row_sum[h];
                        numer += ph_i[a] + p_hj;
                        ++a;
                        ++b;
                    }
                }
                nep.p_tilde(i, r) = std::clamp(numer / denom, 0.0, 1.0);
            }
        }
    });
    return nep;
}

// Debug dump: one line per stored (i, rank) entry.
inline void dump_nep_tsv(const NepGraph& nep, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("dump_nep_tsv: cannot open " + path);
    out << "i\trank\tj\ta_ij\tp_hat\tp_tilde\n";
    const KnnGraph& knn = *nep.knn;
    for (std::int64_t i = 0; i < knn.n; ++i) {
        for (std::int64_t r = 0; r < knn.k; ++r) {
            out << i << '\t' << r << '\t' << knn.neighbors(i, r) << '\t' << knn.sims(i, r) << '\t'
                << nep.p_hat(i, r) << '\t' << nep.p_tilde(i, r) << '\n';
        }
    }
}

}  // namespace escluster
