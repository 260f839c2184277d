#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "escluster/early_stopping.hpp"
#include "escluster/edge_probability.hpp"
#include "escluster/errors.hpp"
#include "escluster/parallel.hpp"
#include "escluster/feature_store.hpp"

namespace escluster {

struct ScoredEdge {
    std::int32_t i = 0;
    std::int32_t j = 0;
    double score = 0.0;  // probability-like, in [0, 1]
};

// Post-stop candidate harvest. The scan never breaks: entries with
// p_tilde >= theta before the flag flips are skipped (they belong to the
// early-stop prefix); from the first p_tilde < theta onward, every entry
// with p_tilde >= delta becomes a candidate. With recall_on_similarity the
// candidate criterion is a_ij >= delta instead.
inline EdgeSet recall_candidates(const NepGraph& nep, double theta, double delta,
                                 bool recall_on_similarity = false) {
    if (theta < 0.0 || theta > 1.0) throw ParameterError("recall_candidates: theta must lie in [0, 1]");
    const KnnGraph& knn = *nep.knn;
    EdgeSet out;
    out.kind = EdgeKind::recall_candidate;
    for (std::int64_t i = 0; i < knn.n; ++i) {
        bool flagged = false;
        for (std::int64_t r = 0; r < knn.k; ++r) {
            const double pt = nep.p_tilde(i, r);
            if (pt < theta) flagged = true;
            if (!flagged) continue;
            const double criterion = recall_on_similarity ? static_cast<double>(knn.sims(i, r)) : pt;
            if (criterion >= delta) {
                out.edges.push_back({static_cast<std::int32_t>(i), knn.neighbors(i, r), pt});
            }
        }
    }
    return out;
}

inline constexpr std::size_t kNumPairFeatures = 6;
using PairFeatures = std::array<double, kNumPairFeatures>;

inline const std::vector<std::string>& pair_feature_names() {
    static const std::vector<std::string> names = {"cos_sim",   "nep",   "common_frac",
                                                   "rank_frac", "p_hat", "mutual_knn"};
    return names;
}

// Computes the pairwise feature vector for stored (i, j) pairs. Neighbor
// rows are index-sorted once so intersection sizes and mutual-knn lookups
// are O(K) / O(log K) per pair.
class PairFeatureExtractor {
public:
    explicit PairFeatureExtractor(const NepGraph& nep)
        : nep_(&nep), sorted_(detail::sort_rows_by_index(*nep.knn, nep.p_hat)) {}

    PairFeatures operator()(std::int64_t i, std::int64_t j) const {
        const KnnGraph& knn = *nep_->knn;
        const auto nbr = knn.neighbors.row(i);
        std::int64_t rank = -1;
        for (std::int64_t r = 0; r < knn.k; ++r) {
            if (nbr[r] == static_cast<std::int32_t>(j)) {
                rank = r;
                break;
            }
        }
        if (rank < 0) {
            throw PreconditionError("pairwise_features: node " + std::to_string(j) +
                                    " is not a stored neighbor of " + std::to_string(i));
        }
        double common_sum = 0.0;
        std::int64_t common = 0;
        detail::merge_common(sorted_.idx.row(i), sorted_.phat.row(i), sorted_.idx.row(j),
                             sorted_.phat.row(j), common_sum, common);
        const auto row_j = sorted_.idx.row(j);
        const bool mutual =
            std::binary_search(row_j.begin(), row_j.end(), static_cast<std::int32_t>(i));
        const double k = static_cast<double>(knn.k);
        return {static_cast<double>(knn.sims(i, rank)),
                nep_->p_tilde(i, rank),
                static_cast<double>(common) / k,
                static_cast<double>(rank) / k,
                nep_->p_hat(i, rank),
                mutual ? 1.0 : 0.0};
    }

private:
    const NepGraph* nep_;
    detail::IndexSortedRows sorted_;
};

inline PairFeatures pairwise_features(std::int64_t i, std::int64_t j, const NepGraph& nep) {
    return PairFeatureExtractor(nep)(i, j);
}

// Feature vectors for a whole edge set. The extractor is read-only, so
// edges fan out across workers into preallocated slots.
inline std::vector<PairFeatures> edge_features(const EdgeSet& edges, const NepGraph& nep,
                                               int threads = 0) {
    const PairFeatureExtractor extract(nep);
    std::vector<PairFeatures> out(edges.edges.size());
    if (threads <= 0) threads = default_thread_count();
    parallel_for(edges.edges.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e) {
            out[e] = extract(edges.edges[e].i, edges.edges[e].j);
        }
    });
    return out;
}

// Logistic linkage predictor over the pairwise features. Deliberately
// transparent; richer models can replace it behind the same score surface.
struct LinkagePredictor {
    std::vector<std::string> feature_names;
    std::vector<double> weights;  // one per feature
    double bias = 0.0;
    std::vector<double> loss_curve;  // loss after each epoch, [0] is pre-training
    std::int64_t epochs = 0;
    std::uint64_t seed = 0;
};

struct TrainConfig {
    std::int64_t epochs = 500;
    double learning_rate = 0.5;
    std::uint64_t seed = 0;
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Numerically stable binary cross-entropy for one logit/label pair.
inline double xent(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

inline double linear_form(const LinkagePredictor& m, const PairFeatures& x) {
    double z = m.bias;
    for (std::size_t f = 0; f < kNumPairFeatures; ++f) z += m.weights[f] * x[f];
    return z;
}

}  // namespace detail

// Mean cross-entropy and its analytic gradient at (weights, bias).
inline double xent_loss_and_grad(const std::vector<PairFeatures>& x, const std::vector<double>& y,
                                 const std::vector<double>& weights, double bias,
                                 std::vector<double>& grad_w, double& grad_b) {
    const std::size_t m = x.size();
    grad_w.assign(kNumPairFeatures, 0.0);
    grad_b = 0.0;
    double loss = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
        double z = bias;
        for (std::size_t f = 0; f < kNumPairFeatures; ++f) z += weights[f] * x[e][f];
        loss += detail::xent(z, y[e]);
        const double err = detail::sigmoid(z) - y[e];
        for (std::size_t f = 0; f < kNumPairFeatures; ++f) grad_w[f] += err * x[e][f];
        grad_b += err;
    }
    const double inv = 1.0 / static_cast<double>(m);
    for (double& g : grad_w) g *= inv;
    grad_b *= inv;
    return loss * inv;
}

// Full-batch gradient descent on cross-entropy. Zero-initialized weights
// and a fixed learning rate keep the loss curve non-increasing on the
// bounded feature ranges used here, and make training seed-deterministic.
inline LinkagePredictor train_predictor(const EdgeSet& candidates,
                                        const std::vector<PairFeatures>& features,
                                        const LabelSet& gt, const TrainConfig& cfg = {}) {
    if (candidates.edges.empty()) {
        throw ParameterError("train_predictor: empty candidate set");
    }
    if (candidates.edges.size() != features.size()) {
        throw ParameterError("train_predictor: features/candidates size mismatch");
    }
    std::vector<double> y(candidates.edges.size());
    std::int64_t positives = 0;
    for (std::size_t e = 0; e < candidates.edges.size(); ++e) {
        const Edge& edge = candidates.edges[e];
        const bool pos = gt.labels.at(edge.i) == gt.labels.at(edge.j);
        y[e] = pos ? 1.0 : 0.0;
        positives += pos;
    }
    if (positives == 0 || positives == static_cast<std::int64_t>(y.size())) {
        throw ParameterError(
            "train_predictor: candidate set is single-class; adjust theta/delta so the "
            "post-stop harvest contains both positive and negative pairs");
    }

    LinkagePredictor model;
    model.feature_names = pair_feature_names();
    model.weights.assign(kNumPairFeatures, 0.0);
    model.bias = 0.0;
    model.epochs = cfg.epochs;
    model.seed = cfg.seed;

    std::vector<double> grad_w;
    double grad_b = 0.0;
    model.loss_curve.reserve(cfg.epochs + 1);
    model.loss_curve.push_back(
        xent_loss_and_grad(features, y, model.weights, model.bias, grad_w, grad_b));
    for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t f = 0; f < kNumPairFeatures; ++f) {
            model.weights[f] -= cfg.learning_rate * grad_w[f];
        }
        model.bias -= cfg.learning_rate * grad_b;
        model.loss_curve.push_back(
            xent_loss_and_grad(features, y, model.weights, model.bias, grad_w, grad_b));
    }
    return model;
}

inline std::vector<ScoredEdge> predict_scores(const LinkagePredictor& model,
                                              const EdgeSet& candidates,
                                              const std::vector<PairFeatures>& features) {
    if (model.feature_names != pair_feature_names()) {
        throw SchemaError("predict_scores: model feature schema does not match this build");
    }
    if (model.weights.size() != kNumPairFeatures) {
        throw SchemaError("predict_scores: model weight count does not match feature count");
    }
    if (candidates.edges.size() != features.size()) {
        throw ParameterError("predict_scores: features/candidates size mismatch");
    }
    std::vector<ScoredEdge> out;
    out.reserve(candidates.edges.size());
    for (std::size_t e = 0; e < candidates.edges.size(); ++e) {
        const Edge& edge = candidates.edges[e];
        out.push_back({edge.i, edge.j, detail::sigmoid(detail::linear_form(model, features[e]))});
    }
    return out;
}

// Keep exactly the edges scored >= eta.
inline EdgeSet filter_by_eta(const std::vector<ScoredEdge>& scored, double eta) {
    if (eta < 0.0 || eta > 1.0) throw ParameterError("filter_by_eta: eta must lie in [0, 1]");
    EdgeSet out;
    out.kind = EdgeKind::recall_accepted;
    for (const ScoredEdge& s : scored) {
        if (s.score >= eta) out.edges.push_back({s.i, s.j, s.score});
    }
    return out;
}

struct PostStopStatsReport {
    double theta = 0.0;
    std::int64_t post_stop_entries = 0;
    std::int64_t positive_post_stop_entries = 0;
    double positive_fraction = 0.0;        // among post-stop entries
    double avg_positive_per_sample = 0.0;  // positives / n
    std::int64_t n = 0;
};

// How much recall headroom sits past the stop positions: the fraction of
// post-stop entries that are positive pairs and the average number of
// positive post-stop entries per sample.
inline PostStopStatsReport post_stop_positive_stats(const NepGraph& nep, const LabelSet& labels,
                                                    double theta) {
    const KnnGraph& knn = *nep.knn;
    if (labels.size() != knn.n) {
        throw ParameterError("post_stop_positive_stats: labels length does not match graph");
    }
    PostStopStatsReport rep;
    rep.theta = theta;
    rep.n = knn.n;
    for (std::int64_t i = 0; i < knn.n; ++i) {
        std::int64_t stop = -1;
        for (std::int64_t r = 0; r < knn.k; ++r) {
            if (nep.p_tilde(i, r) < theta) {
                stop = r;
                break;
            }
        }
        if (stop < 0) continue;
        for (std::int64_t r = stop; r < knn.k; ++r) {
            ++rep.post_stop_entries;
            if (labels.labels[i] == labels.labels[knn.neighbors(i, r)]) {
                ++rep.positive_post_stop_entries;
            }
        }
    }
    rep.positive_fraction = rep.post_stop_entries == 0
                                ? 0.0
                                : static_cast<double>(rep.positive_post_stop_entries) /
                                      static_cast<double>(rep.post_stop_entries);
    rep.avg_positive_per_sample =
        rep.n == 0 ? 0.0
                   : static_cast<double>(rep.positive_post_stop_entries) / static_cast<double>(rep.n);
    return rep;
}

inline void save_predictor(const LinkagePredictor& model, const std::string& path) {
    nlohmann::json j{{"feature_names", model.feature_names},
                     {"weights", model.weights},
                     {"bias", model.bias},
                     {"seed", model.seed},
                     {"epochs", model.epochs}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("save_predictor: cannot open " + path);
    out << j.dump(2) << '\n';
}

inline LinkagePredictor load_predictor(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_predictor: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("load_predictor: " + path + ": " + e.what());
    }
    LinkagePredictor model;
    try {
        model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        model.weights = j.at("weights").get<std::vector<double>>();
        model.bias = j.at("bias").get<double>();
        model.seed = j.at("seed").get<std::uint64_t>();
        model.epochs = j.at("epochs").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("load_predictor: " + path + ": " + e.what());
    }
    return model;
}

}  // namespace escluster
