#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "escluster/baseline.hpp"
#include "escluster/datagen.hpp"
#include "escluster/early_stopping.hpp"
#include "escluster/edge_probability.hpp"
#include "escluster/edge_recall.hpp"
#include "escluster/errors.hpp"
#include "escluster/feature_store.hpp"
#include "escluster/knn_graph.hpp"
#include "escluster/map_equation.hpp"
#include "escluster/metrics.hpp"

namespace escluster {

struct PipelineConfig {
    std::int64_t k = 80;
    double tau = 0.5;
    double theta = 0.22;
    double delta = 0.12;
    double eta = 0.60;
    std::string mode = "es";  // es | eser
    std::string merge_rule = "mean";
    bool nep_literal = false;
    bool recall_on_similarity = false;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency

    // Inputs; n/d override the sidecar when set.
    std::string features_path;
    std::string labels_path;
    std::optional<std::int64_t> n;
    std::optional<std::int64_t> d;

    // Stage artifacts.
    std::string knn_cache_path;  // reused when present, written after a build
    std::string model_path;
    bool train = false;
    std::int64_t train_epochs = 500;
    double train_learning_rate = 0.5;

    // Outputs.
    std::string partition_out;
    std::string summary_out;
    std::string metrics_out;
    std::string edges_out;  // early-stop edge dump (TSV)
};

// Per-domain parameter presets plus the matching K.
inline void apply_profile(PipelineConfig& cfg, const std::string& name) {
    if (name == "ms1m") {
        cfg.k = 80;
        cfg.tau = 0.5;
        cfg.theta = 0.22;
        cfg.delta = 0.12;
        cfg.eta = 0.60;
    } else if (name == "msmt17") {
        cfg.k = 40;
        cfg.tau = 0.5;
        cfg.theta = 0.50;
        cfg.delta = 0.20;
        cfg.eta = 0.50;
    } else if (name == "veri776") {
        cfg.k = 60;
        cfg.tau = 0.5;
        cfg.theta = 0.30;
        cfg.delta = 0.16;
        cfg.eta = 0.50;
    } else if (name == "synth") {
        // Tuned on the seeded synthetic benchmark family.
        cfg.k = 40;
        cfg.tau = 0.5;
        cfg.theta = 0.30;
        cfg.delta = 0.12;
        cfg.eta = 0.50;
    } else {
        throw ParameterError("unknown profile \"" + name + "\" (ms1m|msmt17|veri776|synth)");
    }
}

// Flat key-value config file; unknown keys are rejected so typos surface.
inline void apply_config_json(PipelineConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("config: top level must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "profile") apply_profile(cfg, value.get<std::string>());
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "profile") continue;
        else if (key == "k") cfg.k = value.get<std::int64_t>();
        else if (key == "tau") cfg.tau = value.get<double>();
        else if (key == "theta") cfg.theta = value.get<double>();
        else if (key == "delta") cfg.delta = value.get<double>();
        else if (key == "eta") cfg.eta = value.get<double>();
        else if (key == "mode") cfg.mode = value.get<std::string>();
        else if (key == "merge_rule") cfg.merge_rule = value.get<std::string>();
        else if (key == "nep_literal") cfg.nep_literal = value.get<bool>();
        else if (key == "recall_on_similarity") cfg.recall_on_similarity = value.get<bool>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "threads") cfg.threads = value.get<int>();
        else if (key == "features") cfg.features_path = value.get<std::string>();
        else if (key == "labels") cfg.labels_path = value.get<std::string>();
        else if (key == "n") cfg.n = value.get<std::int64_t>();
        else if (key == "d") cfg.d = value.get<std::int64_t>();
        else if (key == "knn_cache") cfg.knn_cache_path = value.get<std::string>();
        else if (key == "model") cfg.model_path = value.get<std::string>();
        else if (key == "train") cfg.train = value.get<bool>();
        else if (key == "train_epochs") cfg.train_epochs = value.get<std::int64_t>();
        else if (key == "train_learning_rate") cfg.train_learning_rate = value.get<double>();
        else if (key == "partition_out") cfg.partition_out = value.get<std::string>();
        else if (key == "summary_out") cfg.summary_out = value.get<std::string>();
        else if (key == "metrics_out") cfg.metrics_out = value.get<std::string>();
        else if (key == "edges_out") cfg.edges_out = value.get<std::string>();
        else throw ParameterError("config: unknown key \"" + key + "\"");
    }
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("load_config: " + path + ": " + e.what());
    }
    PipelineConfig cfg;
    apply_config_json(cfg, j);
    return cfg;
}

inline std::vector<std::string> validate(const PipelineConfig& cfg) {
    if (cfg.k < 1) throw ParameterError("config: k must be >= 1");
    if (cfg.tau <= 0.0) throw ParameterError("config: tau must be > 0");
    for (auto [name, v] : {std::pair<const char*, double>{"theta", cfg.theta},
                           {"delta", cfg.delta},
                           {"eta", cfg.eta}}) {
        if (v < 0.0 || v > 1.0) {
            throw ParameterError(std::string("config: ") + name + " must lie in [0, 1]");
        }
    }
    if (cfg.mode != "es" && cfg.mode != "eser") {
        throw ParameterError("config: mode must be es or eser");
    }
    if (cfg.mode == "eser" && cfg.model_path.empty() && !cfg.train) {
        throw ParameterError("config: mode=eser needs --model or --train");
    }
    merge_rule_from_string(cfg.merge_rule);
    std::vector<std::string> warnings;
    if (cfg.delta > cfg.theta) {
        warnings.push_back("delta > theta: the recall band extends above the early-stop threshold");
    }
    return warnings;
}

struct StageInfo {
    std::string name;
    double seconds = 0.0;
    std::int64_t items = 0;
};

struct RunResult {
    Partition partition;
    std::optional<MetricsReport> metrics;
    std::vector<StageInfo> stages;
    std::vector<std::string> warnings;
    std::int64_t es_edges = 0;
    std::int64_t candidate_edges = 0;
    std::int64_t accepted_edges = 0;
};

namespace detail {

class StageClock {
public:
    explicit StageClock(std::vector<StageInfo>& log) : log_(log) {}

    template <typename F>
    auto run(const std::string& name, std::int64_t* items, F&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            auto result = fn();
            finish(name, t0, items);
            return result;
        } catch (const Error& e) {
            throw Error("stage " + name + ": " + e.what());
        }
    }

private:
    void finish(const std::string& name, std::chrono::steady_clock::time_point t0,
                std::int64_t* items) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log_.push_back({name, secs, items ? *items : 0});
    }

    std::vector<StageInfo>& log_;
};

}  // namespace detail

struct LoadedInputs {
    FeatureSet features;
    std::optional<LabelSet> labels;
};

// Flags override the sidecar; with neither, the sidecar next to the
// feature file must exist.
inline LoadedInputs load_inputs(const PipelineConfig& cfg) {
    if (cfg.features_path.empty()) throw ParameterError("load_inputs: features path required");
    std::int64_t n = cfg.n.value_or(0);
    std::int64_t d = cfg.d.value_or(0);
    if (!cfg.n || !cfg.d) {
        const std::string sidecar =
            std::filesystem::path(cfg.features_path).replace_extension(".json").string();
        if (!std::filesystem::exists(sidecar)) {
            throw ParameterError("load_inputs: provide --n/--d or a sidecar " + sidecar);
        }
        const FeatureSidecar sc = load_sidecar(sidecar);
        if (!cfg.n) n = sc.n;
        if (!cfg.d) d = sc.d;
    }
    LoadedInputs in;
    in.features = normalize(load_features(cfg.features_path, n, d));
    if (!cfg.labels_path.empty()) {
        LabelSet ls = load_labels(cfg.labels_path);
        if (ls.size() != in.features.n) {
            throw DimensionError("load_inputs: " + std::to_string(ls.size()) + " labels for " +
                                 std::to_string(in.features.n) + " samples");
        }
        in.labels = std::move(ls);
    }
    return in;
}

// Reuse the KNN cache when it is present and shape-compatible; otherwise
// build and (when a path is configured) persist it.
inline KnnGraph obtain_knn(const PipelineConfig& cfg, const FeatureSet& fs) {
    if (!cfg.knn_cache_path.empty() && std::filesystem::exists(cfg.knn_cache_path)) {
        KnnGraph g = load_knn(cfg.knn_cache_path);
        if (g.n != fs.n || g.k != cfg.k) {
            throw ParameterError("knn cache " + cfg.knn_cache_path + " has n=" + std::to_string(g.n) +
                                 ", k=" + std::to_string(g.k) + " but the run needs n=" +
                                 std::to_string(fs.n) + ", k=" + std::to_string(cfg.k));
        }
        return g;
    }
    KnnGraph g = build_knn(fs, cfg.k, cfg.threads);
    if (!cfg.knn_cache_path.empty()) save_knn(g, cfg.knn_cache_path);
    return g;
}

inline void write_partition(const Partition& part, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("write_partition: cannot open " + path);
    for (auto label : part.labels) out << label << '\n';
    if (!out) throw Error("write_partition: short write to " + path);
}

inline void write_summary(const Partition& part, const std::string& path) {
    std::int64_t num_clusters = 0;
    for (auto l : part.labels) num_clusters = std::max<std::int64_t>(num_clusters, l + 1);
    nlohmann::json j{{"n", part.labels.size()},
                     {"num_clusters", num_clusters},
                     {"codelength", part.codelength}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("write_summary: cannot open " + path);
    out << j.dump(2) << '\n';
}

namespace detail {

inline RunResult run_pipeline(const PipelineConfig& cfg, bool with_recall) {
    RunResult res;
    res.warnings = validate(cfg);
    detail::StageClock clock(res.stages);

    LoadedInputs in = clock.run("load", nullptr, [&] { return load_inputs(cfg); });
    const KnnGraph knn = clock.run("knn", nullptr, [&] { return obtain_knn(cfg, in.features); });
    const NepGraph nep = clock.run("nep", nullptr, [&] {
        return cfg.nep_literal ? compute_all_nep_literal(knn, cfg.tau, in.features, cfg.threads)
                               : compute_all_nep(knn, cfg.tau, cfg.threads);
    });
    const EdgeSet des = clock.run("early_stop", &res.es_edges, [&] {
        EdgeSet e = early_stop_edges(nep, cfg.theta);
        res.es_edges = static_cast<std::int64_t>(e.edges.size());
        return e;
    });
    if (!cfg.edges_out.empty()) dump_edges_tsv(des, cfg.edges_out);

    EdgeSet accepted;
    accepted.kind = EdgeKind::recall_accepted;
    if (with_recall) {
        const EdgeSet candidates = clock.run("recall_candidates", &res.candidate_edges, [&] {
            EdgeSet e = recall_candidates(nep, cfg.theta, cfg.delta, cfg.recall_on_similarity);
            res.candidate_edges = static_cast<std::int64_t>(e.edges.size());
            return e;
        });
        const auto feats = clock.run("pair_features", nullptr,
                                     [&] { return edge_features(candidates, nep, cfg.threads); });
        LinkagePredictor model;
        if (cfg.train) {
            if (!in.labels) {
                throw ParameterError("run: --train requires ground-truth labels");
            }
            model = clock.run("train", nullptr, [&] {
                TrainConfig tc{cfg.train_epochs, cfg.train_learning_rate, cfg.seed};
                return train_predictor(candidates, feats, *in.labels, tc);
            });
            if (!cfg.model_path.empty()) save_predictor(model, cfg.model_path);
        } else {
            if (cfg.model_path.empty()) {
                throw ParameterError("run: edge recall needs a trained model (--model) or --train");
            }
            model = clock.run("load_model", nullptr, [&] { return load_predictor(cfg.model_path); });
        }
        accepted = clock.run("recall_filter", &res.accepted_edges, [&] {
            const auto scored = predict_scores(model, candidates, feats);
            EdgeSet e = filter_by_eta(scored, cfg.eta);
            res.accepted_edges = static_cast<std::int64_t>(e.edges.size());
            return e;
        });
    }

    const WeightedGraph graph = clock.run("transition", nullptr, [&] {
        return build_transition(des, accepted, in.features.n, merge_rule_from_string(cfg.merge_rule));
    });
    res.partition = clock.run("optimize", nullptr, [&] { return optimize(graph, cfg.seed); });

    if (in.labels) {
        res.metrics = evaluate_clustering(res.partition.labels, in.labels->labels);
    }
    if (!cfg.partition_out.empty()) write_partition(res.partition, cfg.partition_out);
    if (!cfg.summary_out.empty()) write_summary(res.partition, cfg.summary_out);
    if (res.metrics && !cfg.metrics_out.empty()) {
        std::ofstream out(cfg.metrics_out, std::ios::trunc);
        if (!out) throw Error("run: cannot open " + cfg.metrics_out);
        out << to_json(*res.metrics).dump(2) << '\n';
    }
    return res;
}

}  // namespace detail

// Unsupervised route: early-stop edges only.
inline RunResult run_es(const PipelineConfig& cfg) { return detail::run_pipeline(cfg, false); }

// Supervised route: early-stop edges plus predictor-accepted recalls.
inline RunResult run_eser(const PipelineConfig& cfg) { return detail::run_pipeline(cfg, true); }

// Trains the linkage predictor on this config's labeled data and saves it.
inline LinkagePredictor run_train(const PipelineConfig& cfg) {
    LoadedInputs in = load_inputs(cfg);
    if (!in.labels) throw ParameterError("train: ground-truth labels required");
    const KnnGraph knn = obtain_knn(cfg, in.features);
    const NepGraph nep = cfg.nep_literal
                             ? compute_all_nep_literal(knn, cfg.tau, in.features, cfg.threads)
                             : compute_all_nep(knn, cfg.tau, cfg.threads);
    const EdgeSet candidates = recall_candidates(nep, cfg.theta, cfg.delta, cfg.recall_on_similarity);
    const auto feats = edge_features(candidates, nep, cfg.threads);
    TrainConfig tc{cfg.train_epochs, cfg.train_learning_rate, cfg.seed};
    LinkagePredictor model = train_predictor(candidates, feats, *in.labels, tc);
    if (!cfg.model_path.empty()) save_predictor(model, cfg.model_path);
    return model;
}

enum class ReportKind { ending_stats, post_stop_stats };

// Ending-position / post-stop diagnostics across a threshold sweep.
inline nlohmann::json run_report(const PipelineConfig& cfg, ReportKind kind,
                                 const std::vector<double>& thresholds,
                                 const std::vector<StatsMode>& modes) {
    LoadedInputs in = load_inputs(cfg);
    if (!in.labels) throw ParameterError("report: ground-truth labels required");
    const KnnGraph knn = obtain_knn(cfg, in.features);
    const NepGraph nep = cfg.nep_literal
                             ? compute_all_nep_literal(knn, cfg.tau, in.features, cfg.threads)
                             : compute_all_nep(knn, cfg.tau, cfg.threads);

    nlohmann::json entries = nlohmann::json::array();
    if (kind == ReportKind::ending_stats) {
        for (const StatsMode mode : modes) {
            for (const double t : thresholds) {
                const EndingStatsReport r = ending_position_stats(nep, *in.labels, mode, t);
                entries.push_back({{"mode", to_string(r.mode)},
                                   {"threshold", r.threshold},
                                   {"negative_fraction_at_ending", r.negative_fraction_at_ending},
                                   {"nodes_with_ending", r.nodes_with_ending},
                                   {"negative_endings", r.negative_endings},
                                   {"n", r.n}});
            }
        }
        return nlohmann::json{{"kind", "ending_stats"}, {"entries", entries}};
    }
    for (const double t : thresholds) {
        const PostStopStatsReport r = post_stop_positive_stats(nep, *in.labels, t);
        entries.push_back({{"theta", r.theta},
                           {"post_stop_entries", r.post_stop_entries},
                           {"positive_post_stop_entries", r.positive_post_stop_entries},
                           {"positive_fraction", r.positive_fraction},
                           {"avg_positive_per_sample", r.avg_positive_per_sample},
                           {"n", r.n}});
    }
    return nlohmann::json{{"kind", "post_stop_stats"}, {"entries", entries}};
}

}  // namespace escluster
