#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "escluster/edge_probability.hpp"
#include "escluster/errors.hpp"
#include "escluster/feature_store.hpp"

namespace escluster {

enum class EdgeKind { early_stop, recall_candidate, recall_accepted };

struct Edge {
    std::int32_t i = 0;
    std::int32_t j = 0;
    double w = 0.0;

    bool operator==(const Edge&) const = default;
};

// Directed weighted edges. early_stop sets hold per-node rank prefixes
// weighted by p_tilde; recall sets hold post-stop candidates / accepted
// edges weighted by predictor scores.
struct EdgeSet {
    std::vector<Edge> edges;
    EdgeKind kind = EdgeKind::early_stop;
};

// Rank-prefix scan core. p_tilde values are read through the accessor so
// tests can count accesses; entries after a node's stop are never touched.
template <typename PtildeAt>
EdgeSet early_stop_scan(const KnnGraph& knn, PtildeAt&& ptilde_at, double theta) {
    EdgeSet out;
    out.kind = EdgeKind::early_stop;
    for (std::int64_t i = 0; i < knn.n; ++i) {
        for (std::int64_t r = 0; r < knn.k; ++r) {
            const double pt = ptilde_at(i, r);
            if (pt < theta) break;
            out.edges.push_back({static_cast<std::int32_t>(i), knn.neighbors(i, r), pt});
        }
    }
    return out;
}

// Traverse each node's neighbors in stored rank order and keep the prefix
// with p_tilde >= theta; the first value below theta ends the node's scan.
inline EdgeSet early_stop_edges(const NepGraph& nep, double theta) {
    if (theta < 0.0 || theta > 1.0) {
        throw ParameterError("early_stop_edges: theta must lie in [0, 1]");
    }
    return early_stop_scan(*nep.knn,
                           [&](std::int64_t i, std::int64_t r) { return nep.p_tilde(i, r); }, theta);
}

enum class StatsMode { raw_similarity, sorted_nep, unsorted_nep };

inline const char* to_string(StatsMode m) {
    switch (m) {
        case StatsMode::raw_similarity: return "raw_similarity";
        case StatsMode::sorted_nep: return "sorted_nep";
        default: return "unsorted_nep";
    }
}

struct EndingStatsReport {
    StatsMode mode = StatsMode::unsorted_nep;
    double threshold = 0.0;
    double negative_fraction_at_ending = 0.0;
    std::int64_t nodes_with_ending = 0;  // denominator
    std::int64_t negative_endings = 0;
    std::int64_t n = 0;
};

// Where does each node's scan end, and how often is the connection at the
// ending position a negative (different-identity) pair? Nodes whose values
// never drop below the threshold have no ending position and are excluded.
inline EndingStatsReport ending_position_stats(const NepGraph& nep, const LabelSet& labels,
                                               StatsMode mode, double threshold) {
    const KnnGraph& knn = *nep.knn;
    if (labels.size() != knn.n) {
        throw ParameterError("ending_position_stats: labels length does not match graph");
    }
    EndingStatsReport rep;
    rep.mode = mode;
    rep.threshold = threshold;
    rep.n = knn.n;

    std::vector<std::int32_t> order(knn.k);
    for (std::int64_t i = 0; i < knn.n; ++i) {
        std::int64_t ending = -1;
        if (mode == StatsMode::sorted_nep) {
            std::iota(order.begin(), order.end(), 0);
            const auto row = nep.p_tilde.row(i);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::int32_t a, std::int32_t b) { return row[a] > row[b]; });
            for (std::int64_t r = 0; r < knn.k; ++r) {
                if (row[order[r]] < threshold) {
                    ending = order[r];
                    break;
                }
            }
        } else {
            for (std::int64_t r = 0; r < knn.k; ++r) {
                const double v = (mode == StatsMode::raw_similarity)
                                     ? static_cast<double>(knn.sims(i, r))
                                     : nep.p_tilde(i, r);
                if (v < threshold) {
                    ending = r;
                    break;
                }
            }
        }
        if (ending < 0) continue;
        ++rep.nodes_with_ending;
        const std::int32_t j = knn.neighbors(i, ending);
        if (labels.labels[i] != labels.labels[j]) ++rep.negative_endings;
    }
    rep.negative_fraction_at_ending =
        rep.nodes_with_ending == 0
            ? 0.0
            : static_cast<double>(rep.negative_endings) / static_cast<double>(rep.nodes_with_ending);
    return rep;
}

inline void dump_edges_tsv(const EdgeSet& es, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("dump_edges_tsv: cannot open " + path);
    for (const Edge& e : es.edges) out << e.i << '\t' << e.j << '\t' << e.w << '\n';
    if (!out) throw Error("dump_edges_tsv: short write to " + path);
}

}  // namespace escluster
