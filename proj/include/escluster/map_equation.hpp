#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "escluster/early_stopping.hpp"
#include "escluster/errors.hpp"
#include "escluster/rng.hpp"

namespace escluster {

// Undirected weighted graph for the flow model. Every edge is stored once
// per endpoint; total_weight is the sum over distinct edges.
struct WeightedGraph {
    std::int64_t n = 0;
    std::vector<std::vector<std::pair<std::int32_t, double>>> adjacency;
    double total_weight = 0.0;
};

struct Partition {
    std::vector<std::int32_t> labels;  // contiguous from 0
    double codelength = 0.0;           // bits per step
};

enum class MergeRule { mean, max, sum };

inline MergeRule merge_rule_from_string(const std::string& s) {
    if (s == "mean") return MergeRule::mean;
    if (s == "max") return MergeRule::max;
    if (s == "sum") return MergeRule::sum;
    throw ParameterError("merge_rule must be one of mean|max|sum (got \"" + s + "\")");
}

// Merge directed entries from the selected edge sets into one undirected
// graph. When a pair appears several times (either direction, either set),
// the undirected weight is the arithmetic mean of the present entries
// under the default rule. Isolated nodes stay and end up as singletons.
inline WeightedGraph build_transition(const EdgeSet& des, const EdgeSet& der_accepted,
                                      std::int64_t n, MergeRule rule = MergeRule::mean) {
    struct Acc {
        double sum = 0.0;
        double max = 0.0;
        std::int64_t count = 0;
    };
    std::unordered_map<std::uint64_t, Acc> pairs;
    const auto feed = [&](const EdgeSet& es) {
        for (const Edge& e : es.edges) {
            if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n) {
                throw ParameterError("build_transition: node index out of range");
            }
            if (e.i == e.j) throw ParameterError("build_transition: self-loop rejected");
            if (!(e.w > 0.0)) {
                throw ParameterError("build_transition: edge weight must be > 0 (got " +
                                     std::to_string(e.w) + " on " + std::to_string(e.i) + "->" +
                                     std::to_string(e.j) + ")");
            }
            const std::uint64_t lo = static_cast<std::uint32_t>(std::min(e.i, e.j));
            const std::uint64_t hi = static_cast<std::uint32_t>(std::max(e.i, e.j));
            Acc& a = pairs[(lo << 32) | hi];
            a.sum += e.w;
            a.max = std::max(a.max, e.w);
            ++a.count;
        }
    };
    feed(des);
    feed(der_accepted);

    WeightedGraph g;
    g.n = n;
    g.adjacency.resize(n);
    for (const auto& [key, acc] : pairs) {
        const auto u = static_cast<std::int32_t>(key >> 32);
        const auto v = static_cast<std::int32_t>(key & 0xffffffffu);
        double w = 0.0;
        switch (rule) {
            case MergeRule::mean: w = acc.sum / static_cast<double>(acc.count); break;
            case MergeRule::max: w = acc.max; break;
            case MergeRule::sum: w = acc.sum; break;
        }
        g.adjacency[u].emplace_back(v, w);
        g.adjacency[v].emplace_back(u, w);
        g.total_weight += w;
    }
    // Deterministic adjacency order regardless of hash iteration.
    for (auto& row : g.adjacency) std::sort(row.begin(), row.end());
    return g;
}

namespace detail {

inline double plogp(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

}  // namespace detail

// Two-level map-equation codelength of a partition, in bits per step.
// Node visit rates are weighted-degree fractions; module exit rates are
// cut fractions. The empty graph codes in zero bits.
inline double codelength(const WeightedGraph& g, const std::vector<std::int32_t>& labels) {
    if (static_cast<std::int64_t>(labels.size()) != g.n) {
        throw ParameterError("codelength: labels length does not match graph");
    }
    if (g.total_weight <= 0.0) return 0.0;

    std::int32_t num_modules = 0;
    for (std::int32_t m : labels) {
        if (m < 0) throw ParameterError("codelength: negative module id");
        num_modules = std::max(num_modules, m + 1);
    }
    const double two_w = 2.0 * g.total_weight;
    std::vector<double> module_rate(num_modules, 0.0);  // sum of p_alpha
    std::vector<double> module_exit(num_modules, 0.0);  // q_m
    double node_term = 0.0;                             // sum of plogp(p_alpha)
    for (std::int64_t u = 0; u < g.n; ++u) {
        double deg = 0.0;
        for (const auto& [v, w] : g.adjacency[u]) {
            deg += w;
            if (labels[u] != labels[v]) module_exit[labels[u]] += w / two_w;
        }
        const double p = deg / two_w;
        module_rate[labels[u]] += p;
        node_term += detail::plogp(p);
    }

    double sum_exit = 0.0;
    double exit_term = 0.0;
    double module_term = 0.0;
    for (std::int32_t m = 0; m < num_modules; ++m) {
        sum_exit += module_exit[m];
        exit_term += detail::plogp(module_exit[m]);
        module_term += detail::plogp(module_exit[m] + module_rate[m]);
    }
    return detail::plogp(sum_exit) - 2.0 * exit_term - node_term + module_term;
}

struct OptimizeTrace {
    // Codelength after each accepted move; front() is the all-singleton start.
    std::vector<double> codelengths;
};

namespace detail {

// One aggregation level. Link flows are normalized by 2W of the original
// graph; internal (self) flow of a supernode is dropped since it never
// contributes to any cut, rate, or the constant node term.
struct Level {
    std::vector<double> rate;
    std::vector<std::vector<std::pair<std::int32_t, double>>> adj;

    std::size_t size() const { return rate.size(); }
};

// Greedy sweep state for one level. Nodes are visited in ascending index
// order, or in a seeded shuffle when a visit-order RNG is supplied.
class LevelOptimizer {
public:
    LevelOptimizer(const Level& level, double& total_codelength, OptimizeTrace* trace,
                   Rng* visit_rng)
        : level_(level), total_(total_codelength), trace_(trace) {
        const std::size_t n = level.size();
        module_.resize(n);
        module_rate_.assign(n, 0.0);
        module_exit_.assign(n, 0.0);
        module_size_.assign(n, 0);
        link_total_.assign(n, 0.0);
        visit_order_.resize(n);
        sum_exit_ = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            visit_order_[u] = static_cast<std::int32_t>(u);
            module_[u] = static_cast<std::int32_t>(u);
            module_rate_[u] = level.rate[u];
            module_size_[u] = 1;
            double lt = 0.0;
            for (const auto& [v, f] : level.adj[u]) lt += f;
            link_total_[u] = lt;
            module_exit_[u] = lt;
            sum_exit_ += lt;
        }
        if (visit_rng) visit_rng->shuffle(visit_order_);
        scratch_flow_.assign(n, 0.0);
    }

    // Sweeps until a full pass accepts no move. Returns true if any move
    // was accepted at this level.
    bool run() {
        bool any = false;
        bool improved = true;
        while (improved) {
            improved = false;
            for (const std::int32_t u : visit_order_) {
                if (try_move(u)) {
                    improved = true;
                    any = true;
                }
            }
#ifndef NDEBUG
            check_state();
#endif
        }
        return any;
    }

    const std::vector<std::int32_t>& modules() const { return module_; }

private:
    double level_term(double exit, double rate_sum) const {
        return -2.0 * plogp(exit) + plogp(exit + rate_sum);
    }

    bool try_move(std::int32_t u) {
        const std::int32_t from = module_[u];
        touched_.clear();
        for (const auto& [v, f] : level_.adj[u]) {
            const std::int32_t m = module_[v];
            if (scratch_flow_[m] == 0.0) touched_.push_back(m);
            scratch_flow_[m] += f;
        }
        // Candidate target modules in ascending id order; ties keep the
        // lowest id. A fresh singleton target only makes sense when the
        // node currently shares its module.
        candidates_.clear();
        for (std::int32_t m : touched_) {
            if (m != from) candidates_.push_back(m);
        }
        std::sort(candidates_.begin(), candidates_.end());

        const double flow_from = scratch_flow_[from];
        const double lt = link_total_[u];
        const double q_from_new = module_exit_[from] - lt + 2.0 * flow_from;
        const double rate_u = level_.rate[u];

        const double old_from_term = level_term(module_exit_[from], module_rate_[from]);
        const double new_from_term = level_term(q_from_new, module_rate_[from] - rate_u);

        // Strict < with ascending candidate order keeps the lowest module
        // id among ties; only decreases beyond kMinDecrease are accepted.
        double best_delta = -kMinDecrease;
        std::int32_t best_target = -1;
        const auto consider = [&](std::int32_t target, double q_t, double rate_t, double flow_t) {
            const double q_t_new = q_t + lt - 2.0 * flow_t;
            const double sum_exit_new = sum_exit_ + (q_from_new - module_exit_[from]) + (q_t_new - q_t);
            const double delta = (plogp(sum_exit_new) - plogp(sum_exit_)) +
                                 (new_from_term - old_from_term) +
                                 (level_term(q_t_new, rate_t + rate_u) - level_term(q_t, rate_t));
            if (delta < best_delta) {
                best_delta = delta;
                best_target = target;
            }
        };
        for (std::int32_t target : candidates_) {
            consider(target, module_exit_[target], module_rate_[target], scratch_flow_[target]);
        }
        if (module_size_[from] > 1 && !empty_modules_.empty()) {
            consider(*empty_modules_.begin(), 0.0, 0.0, 0.0);
        }

        for (std::int32_t m : touched_) scratch_flow_[m] = 0.0;

        if (best_target < 0) return false;

        apply_move(u, from, best_target);
        total_ += best_delta;
        if (trace_) trace_->codelengths.push_back(total_);
        return true;
    }

    void apply_move(std::int32_t u, std::int32_t from, std::int32_t to) {
        double flow_from = 0.0;
        double flow_to = 0.0;
        for (const auto& [v, f] : level_.adj[u]) {
            if (module_[v] == from) flow_from += f;
            if (module_[v] == to) flow_to += f;
        }
        const double lt = link_total_[u];
        const double rate_u = level_.rate[u];
        sum_exit_ -= module_exit_[from] + module_exit_[to];
        module_exit_[from] += -lt + 2.0 * flow_from;
        module_exit_[to] += lt - 2.0 * flow_to;
        sum_exit_ += module_exit_[from] + module_exit_[to];
        module_rate_[from] -= rate_u;
        module_rate_[to] += rate_u;
        module_[u] = to;
        if (--module_size_[from] == 0) {
            empty_modules_.insert(from);
            // Clear incremental residue so sum_exit_ tracks the true total.
            sum_exit_ -= module_exit_[from];
            module_exit_[from] = 0.0;
            module_rate_[from] = 0.0;
        }
        if (module_size_[to]++ == 0) empty_modules_.erase(to);
    }

#ifndef NDEBUG
    // Full recomputation of the incremental bookkeeping.
    void check_state() {
        std::vector<double> rate(level_.size(), 0.0), exit(level_.size(), 0.0);
        for (std::size_t u = 0; u < level_.size(); ++u) {
            rate[module_[u]] += level_.rate[u];
            for (const auto& [v, f] : level_.adj[u]) {
                if (module_[v] != module_[u]) exit[module_[u]] += f;
            }
        }
        for (std::size_t m = 0; m < level_.size(); ++m) {
            assert(std::abs(rate[m] - module_rate_[m]) < 1e-9);
            assert(std::abs(exit[m] - module_exit_[m]) < 1e-9);
        }
    }
#endif

    static constexpr double kMinDecrease = 1e-12;

    const Level& level_;
    double& total_;
    OptimizeTrace* trace_;

    std::vector<std::int32_t> visit_order_;
    std::vector<std::int32_t> module_;
    std::vector<double> module_rate_;
    std::vector<double> module_exit_;
    std::vector<std::int64_t> module_size_;
    std::vector<double> link_total_;
    std::vector<double> scratch_flow_;
    std::vector<std::int32_t> touched_;
    std::vector<std::int32_t> candidates_;
    std::set<std::int32_t> empty_modules_;
    double sum_exit_ = 0.0;
};

// Collapse modules into supernodes; flows between distinct modules are
// summed, internal flow is dropped.
inline Level aggregate(const Level& level, const std::vector<std::int32_t>& module,
                       std::vector<std::int32_t>& dense_id) {
    std::int32_t next = 0;
    dense_id.assign(level.size(), -1);
    {
        std::vector<std::int32_t> seen;
        for (std::size_t u = 0; u < level.size(); ++u) seen.push_back(module[u]);
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        std::unordered_map<std::int32_t, std::int32_t> remap;
        remap.reserve(seen.size());
        for (std::int32_t m : seen) remap[m] = next++;
        for (std::size_t u = 0; u < level.size(); ++u) dense_id[u] = remap[module[u]];
    }

    Level out;
    out.rate.assign(next, 0.0);
    out.adj.resize(next);
    std::unordered_map<std::uint64_t, double> flows;
    for (std::size_t u = 0; u < level.size(); ++u) {
        const std::int32_t mu = dense_id[u];
        out.rate[mu] += level.rate[u];
        for (const auto& [v, f] : level.adj[u]) {
            const std::int32_t mv = dense_id[v];
            if (mu == mv) continue;
            if (mu < mv) flows[(static_cast<std::uint64_t>(mu) << 32) | static_cast<std::uint32_t>(mv)] += f;
        }
    }
    for (const auto& [key, f] : flows) {
        const auto a = static_cast<std::int32_t>(key >> 32);
        const auto b = static_cast<std::int32_t>(key & 0xffffffffu);
        out.adj[a].emplace_back(b, f);
        out.adj[b].emplace_back(a, f);
    }
    for (auto& row : out.adj) std::sort(row.begin(), row.end());
    return out;
}

}  // namespace detail

// Louvain-style map-equation minimization: greedy single-node moves from a
// singleton start, then module aggregation, repeated until no level
// improves. Deterministic for a fixed seed: seed 0 visits nodes in
// ascending index order, any other seed draws a per-level shuffle; ties
// always resolve to the lowest module id.
inline Partition optimize(const WeightedGraph& g, std::uint64_t seed = 0,
                          OptimizeTrace* trace = nullptr) {
    Partition part;
    part.labels.assign(g.n, 0);
    if (g.n == 0) return part;
    if (g.total_weight <= 0.0) {
        // No flow at all: every node is a singleton coding in zero bits.
        for (std::int64_t u = 0; u < g.n; ++u) part.labels[u] = static_cast<std::int32_t>(u);
        part.codelength = 0.0;
        return part;
    }

    const double two_w = 2.0 * g.total_weight;
    detail::Level level;
    level.rate.assign(g.n, 0.0);
    level.adj.resize(g.n);
    double const_term = 0.0;
    for (std::int64_t u = 0; u < g.n; ++u) {
        double deg = 0.0;
        level.adj[u].reserve(g.adjacency[u].size());
        for (const auto& [v, w] : g.adjacency[u]) {
            level.adj[u].emplace_back(v, w / two_w);
            deg += w;
        }
        level.rate[u] = deg / two_w;
        const_term -= detail::plogp(level.rate[u]);
    }

    // Total L for the all-singleton start.
    double total = const_term;
    {
        double sum_exit = 0.0, exit_term = 0.0, module_term = 0.0;
        for (std::size_t u = 0; u < level.size(); ++u) {
            double lt = 0.0;
            for (const auto& [v, f] : level.adj[u]) lt += f;
            sum_exit += lt;
            exit_term += detail::plogp(lt);
            module_term += detail::plogp(lt + level.rate[u]);
        }
        total += detail::plogp(sum_exit) - 2.0 * exit_term + module_term;
    }
    if (trace) trace->codelengths.push_back(total);

    // node -> supernode at the current level
    std::vector<std::int32_t> node_of(g.n);
    for (std::int64_t u = 0; u < g.n; ++u) node_of[u] = static_cast<std::int32_t>(u);

    Rng visit_rng(seed);
    while (true) {
        detail::LevelOptimizer opt(level, total, trace, seed == 0 ? nullptr : &visit_rng);
        const bool improved = opt.run();
        if (!improved) break;
        std::vector<std::int32_t> dense_id;
        detail::Level next = detail::aggregate(level, opt.modules(), dense_id);
        for (std::int64_t u = 0; u < g.n; ++u) node_of[u] = dense_id[node_of[u]];
        if (next.size() == level.size()) break;
        level = std::move(next);
    }

    // Canonicalize: contiguous ids in order of first appearance.
    std::unordered_map<std::int32_t, std::int32_t> remap;
    std::int32_t next_id = 0;
    part.labels.resize(g.n);
    for (std::int64_t u = 0; u < g.n; ++u) {
        auto [it, inserted] = remap.emplace(node_of[u], next_id);
        if (inserted) ++next_id;
        part.labels[u] = it->second;
    }
    part.codelength = codelength(g, part.labels);
    return part;
}

// Exhaustive minimum over all set partitions, for verification at toy
// sizes. Enumeration follows restricted growth strings in lexicographic
// order, so ties keep the canonically-smallest labeling.
inline Partition brute_force_optimize(const WeightedGraph& g) {
    if (g.n > 10) {
        throw ParameterError("brute_force_optimize: refusing n > 10 (got " + std::to_string(g.n) +
                             ")");
    }
    Partition best;
    if (g.n == 0) return best;

    std::vector<std::int32_t> rgs(g.n, 0);
    std::vector<std::int32_t> max_prefix(g.n, 0);
    best.labels = rgs;
    best.codelength = codelength(g, rgs);

    // Iterative restricted-growth-string enumeration.
    while (true) {
        std::int64_t pos = g.n - 1;
        while (pos > 0 && rgs[pos] == max_prefix[pos - 1] + 1) --pos;
        if (pos == 0) break;
        ++rgs[pos];
        max_prefix[pos] = std::max(max_prefix[pos - 1], rgs[pos]);
        for (std::int64_t t = pos + 1; t < g.n; ++t) {
            rgs[t] = 0;
            max_prefix[t] = max_prefix[t - 1];
        }
        const double l = codelength(g, rgs);
        if (l < best.codelength - 1e-15) {
            best.codelength = l;
            best.labels = rgs;
        }
    }
    return best;
}

}  // namespace escluster
