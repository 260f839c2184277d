#pragma once

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "escluster/errors.hpp"

namespace escluster {

struct PrTriple {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
};

struct MetricsReport {
    PrTriple pairwise;
    PrTriple bcubed;
    double f_mean = 0.0;
};

namespace detail {

inline double harmonic(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

template <typename Labels>
std::vector<std::int32_t> dense_ids(const Labels& labels, std::int64_t& num_clusters) {
    std::unordered_map<std::int64_t, std::int32_t> remap;
    std::vector<std::int32_t> out(labels.size());
    std::int32_t next = 0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(labels.size()); ++i) {
        const auto [it, inserted] = remap.emplace(static_cast<std::int64_t>(labels[i]), next);
        if (inserted) ++next;
        out[i] = it->second;
    }
    num_clusters = next;
    return out;
}

// Sparse pred x gt contingency table; explicit pair enumeration would be
// quadratic in n.
struct Contingency {
    std::vector<std::int64_t> pred_size;
    std::vector<std::int64_t> gt_size;
    std::unordered_map<std::uint64_t, std::int64_t> cells;  // (pred << 32 | gt) -> count
    std::int64_t n = 0;
};

template <typename L1, typename L2>
Contingency build_contingency(const L1& pred, const L2& gt) {
    if (pred.size() != gt.size()) {
        throw ParameterError("metrics: pred and gt label lengths differ");
    }
    Contingency c;
    c.n = static_cast<std::int64_t>(pred.size());
    std::int64_t np = 0, ng = 0;
    const auto p = dense_ids(pred, np);
    const auto g = dense_ids(gt, ng);
    c.pred_size.assign(np, 0);
    c.gt_size.assign(ng, 0);
    for (std::int64_t i = 0; i < c.n; ++i) {
        ++c.pred_size[p[i]];
        ++c.gt_size[g[i]];
        ++c.cells[(static_cast<std::uint64_t>(p[i]) << 32) | static_cast<std::uint32_t>(g[i])];
    }
    return c;
}

inline double choose2(std::int64_t x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); }

}  // namespace detail

// Precision/recall/F over unordered co-clustered sample pairs.
template <typename L1, typename L2>
PrTriple pairwise_f(const L1& pred, const L2& gt) {
    if (pred.size() < 2) throw ParameterError("pairwise_f: need at least 2 samples");
    const auto c = detail::build_contingency(pred, gt);
    double tp = 0.0;
    for (const auto& [key, count] : c.cells) tp += detail::choose2(count);
    double pred_pairs = 0.0, gt_pairs = 0.0;
    for (auto s : c.pred_size) pred_pairs += detail::choose2(s);
    for (auto s : c.gt_size) gt_pairs += detail::choose2(s);
    PrTriple t;
    t.precision = pred_pairs > 0.0 ? tp / pred_pairs : 0.0;
    t.recall = gt_pairs > 0.0 ? tp / gt_pairs : 0.0;
    t.f = detail::harmonic(t.precision, t.recall);
    return t;
}

// Unweighted per-sample BCubed. A sample in pred cluster P and gt cluster
// G with |P ∩ G| = c scores c/|P| precision and c/|G| recall, so cell
// counts enter squared.
template <typename L1, typename L2>
PrTriple bcubed_f(const L1& pred, const L2& gt) {
    if (pred.size() < 1) throw ParameterError("bcubed_f: need at least 1 sample");
    const auto c = detail::build_contingency(pred, gt);
    double sum_p = 0.0, sum_r = 0.0;
    for (const auto& [key, count] : c.cells) {
        const auto pi = static_cast<std::int32_t>(key >> 32);
        const auto gi = static_cast<std::int32_t>(key & 0xffffffffu);
        const double cc = static_cast<double>(count) * static_cast<double>(count);
        sum_p += cc / static_cast<double>(c.pred_size[pi]);
        sum_r += cc / static_cast<double>(c.gt_size[gi]);
    }
    PrTriple t;
    t.precision = sum_p / static_cast<double>(c.n);
    t.recall = sum_r / static_cast<double>(c.n);
    t.f = detail::harmonic(t.precision, t.recall);
    return t;
}

inline double f_mean(double pairwise_fscore, double bcubed_fscore) {
    return 0.5 * (pairwise_fscore + bcubed_fscore);
}

template <typename L1, typename L2>
MetricsReport evaluate_clustering(const L1& pred, const L2& gt) {
    MetricsReport rep;
    rep.pairwise = pairwise_f(pred, gt);
    rep.bcubed = bcubed_f(pred, gt);
    rep.f_mean = f_mean(rep.pairwise.f, rep.bcubed.f);
    return rep;
}

inline nlohmann::json to_json(const MetricsReport& rep) {
    return nlohmann::json{
        {"pairwise",
         {{"precision", rep.pairwise.precision}, {"recall", rep.pairwise.recall}, {"f", rep.pairwise.f}}},
        {"bcubed",
         {{"precision", rep.bcubed.precision}, {"recall", rep.bcubed.recall}, {"f", rep.bcubed.f}}},
        {"f_mean", rep.f_mean}};
}

inline std::string format_table(const MetricsReport& rep) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "metric     precision     recall          F\n";
    os << "pairwise " << std::setw(11) << rep.pairwise.precision << std::setw(11)
       << rep.pairwise.recall << std::setw(11) << rep.pairwise.f << '\n';
    os << "bcubed   " << std::setw(11) << rep.bcubed.precision << std::setw(11) << rep.bcubed.recall
       << std::setw(11) << rep.bcubed.f << '\n';
    os << "f_mean   " << std::setw(33) << rep.f_mean << '\n';
    return os.str();
}

}  // namespace escluster
