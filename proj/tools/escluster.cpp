// Command-line front end. Stages compose through files: synth writes the
// features/labels triple, knn writes the binary neighbor cache, cluster /
// recall-cluster write partitions, evaluate and report write JSON.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "escluster/escluster.hpp"

namespace {

using escluster::PipelineConfig;

// Shared pipeline options. Precedence: defaults < --config file <
// --profile < explicit flags.
struct CommonOpts {
    PipelineConfig flags;
    std::string config_path;
    std::string profile;

    CLI::Option* config_opt = nullptr;
    CLI::Option* profile_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* tau_opt = nullptr;
    CLI::Option* theta_opt = nullptr;
    CLI::Option* delta_opt = nullptr;
    CLI::Option* eta_opt = nullptr;
    CLI::Option* merge_opt = nullptr;
    CLI::Option* literal_opt = nullptr;
    CLI::Option* recall_sim_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
    CLI::Option* features_opt = nullptr;
    CLI::Option* labels_opt = nullptr;
    CLI::Option* n_opt = nullptr;
    CLI::Option* d_opt = nullptr;
    CLI::Option* cache_opt = nullptr;
    std::int64_t n_flag = 0;
    std::int64_t d_flag = 0;

    void attach(CLI::App* cmd, bool with_thresholds) {
        config_opt = cmd->add_option("--config", config_path, "flat key-value JSON config file");
        profile_opt = cmd->add_option("--profile", profile,
                                      "parameter profile: ms1m|msmt17|veri776|synth");
        features_opt = cmd->add_option("--features", flags.features_path, "features.bin path");
        labels_opt = cmd->add_option("--labels", flags.labels_path, "labels.txt path");
        n_opt = cmd->add_option("--n", n_flag, "sample count (overrides sidecar)");
        d_opt = cmd->add_option("--d", d_flag, "feature dimension (overrides sidecar)");
        k_opt = cmd->add_option("--k", flags.k, "neighbors per node");
        tau_opt = cmd->add_option("--tau", flags.tau, "edge probability temperature");
        if (with_thresholds) {
            theta_opt = cmd->add_option("--theta", flags.theta, "early stopping threshold");
            delta_opt = cmd->add_option("--delta", flags.delta, "edge recall threshold");
            eta_opt = cmd->add_option("--eta", flags.eta, "predictor score threshold");
        }
        merge_opt = cmd->add_option("--merge-rule", flags.merge_rule,
                                    "undirected merge rule: mean|max|sum");
        literal_opt = cmd->add_flag("--nep-literal", flags.nep_literal,
                                    "literal bridge-node probability reading");
        recall_sim_opt = cmd->add_flag("--recall-on-similarity", flags.recall_on_similarity,
                                       "recall candidates by cosine similarity instead");
        seed_opt = cmd->add_option("--seed", flags.seed, "deterministic seed");
        threads_opt = cmd->add_option("--threads", flags.threads, "worker cap (0 = hardware)");
        cache_opt = cmd->add_option("--knn-cache", flags.knn_cache_path,
                                    "KNN cache path (reused when present)");
    }

    PipelineConfig materialize() const {
        PipelineConfig cfg;
        if (config_opt->count()) cfg = escluster::load_config(config_path);
        if (profile_opt->count()) escluster::apply_profile(cfg, profile);
        if (features_opt->count()) cfg.features_path = flags.features_path;
        if (labels_opt->count()) cfg.labels_path = flags.labels_path;
        if (n_opt->count()) cfg.n = n_flag;
        if (d_opt->count()) cfg.d = d_flag;
        if (k_opt->count()) cfg.k = flags.k;
        if (tau_opt->count()) cfg.tau = flags.tau;
        if (theta_opt && theta_opt->count()) cfg.theta = flags.theta;
        if (delta_opt && delta_opt->count()) cfg.delta = flags.delta;
        if (eta_opt && eta_opt->count()) cfg.eta = flags.eta;
        if (merge_opt->count()) cfg.merge_rule = flags.merge_rule;
        if (literal_opt->count()) cfg.nep_literal = flags.nep_literal;
        if (recall_sim_opt->count()) cfg.recall_on_similarity = flags.recall_on_similarity;
        if (seed_opt->count()) cfg.seed = flags.seed;
        if (threads_opt->count()) cfg.threads = flags.threads;
        if (cache_opt->count()) cfg.knn_cache_path = flags.knn_cache_path;
        return cfg;
    }
};

void log_run(const escluster::RunResult& res) {
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& s : res.stages) {
        std::cerr << "[" << s.name << "] " << s.seconds << "s";
        if (s.items > 0) std::cerr << " (" << s.items << " edges)";
        std::cerr << '\n';
    }
    std::int64_t clusters = 0;
    for (auto l : res.partition.labels) clusters = std::max<std::int64_t>(clusters, l + 1);
    std::cerr << "clusters: " << clusters << ", codelength: " << res.partition.codelength
              << " bits\n";
    if (res.metrics) std::cerr << escluster::format_table(*res.metrics);
}

std::vector<double> parse_threshold_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw escluster::ParameterError("--thresholds: empty list");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"embedding clustering via neighbor-based edge probabilities and the map equation"};
    app.require_subcommand(1);

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic benchmark triple");
    std::string synth_dir;
    escluster::SynthConfig synth_cfg;
    synth->add_option("--out-dir", synth_dir, "output directory")->required();
    synth->add_option("--clusters", synth_cfg.num_clusters, "number of clusters");
    synth->add_option("--size-min", synth_cfg.size_min, "minimum cluster size");
    synth->add_option("--size-max", synth_cfg.size_max, "maximum cluster size");
    synth->add_option("--d", synth_cfg.d, "feature dimension");
    synth->add_option("--noise", synth_cfg.noise_sigma, "per-coordinate Gaussian noise");
    synth->add_option("--center-cos", synth_cfg.max_center_cosine,
                      "maximum allowed pairwise center cosine");
    synth->add_option("--seed", synth_cfg.seed, "generator seed");
    synth->callback([&] {
        const auto data = escluster::gen_sphere_mixture(synth_cfg);
        std::filesystem::create_directories(synth_dir);
        const auto dir = std::filesystem::path(synth_dir);
        escluster::save_features(data.features, (dir / "features.bin").string());
        escluster::save_sidecar({data.features.n, data.features.d},
                                (dir / "features.json").string());
        escluster::save_labels(data.labels, (dir / "labels.txt").string());
        std::cerr << "wrote " << data.features.n << " samples in d=" << data.features.d << " to "
                  << synth_dir << '\n';
    });

    // ---- knn ------------------------------------------------------------
    auto* knn = app.add_subcommand("knn", "build the exact KNN graph and write the cache");
    CommonOpts knn_opts;
    std::string knn_out;
    knn_opts.attach(knn, false);
    knn->add_option("--out", knn_out, "KNN cache output path")->required();
    knn->callback([&] {
        PipelineConfig cfg = knn_opts.materialize();
        const auto in = escluster::load_inputs(cfg);
        const auto graph = escluster::build_knn(in.features, cfg.k, cfg.threads);
        escluster::save_knn(graph, knn_out);
        std::cerr << "knn: n=" << graph.n << ", k=" << graph.k << " -> " << knn_out << '\n';
    });

    // ---- nep ------------------------------------------------------------
    auto* nep = app.add_subcommand("nep", "compute edge probabilities and dump them as TSV");
    CommonOpts nep_opts;
    std::string nep_out;
    nep_opts.attach(nep, false);
    nep->add_option("--out", nep_out, "TSV dump path")->required();
    nep->callback([&] {
        PipelineConfig cfg = nep_opts.materialize();
        const auto in = escluster::load_inputs(cfg);
        const auto graph = escluster::obtain_knn(cfg, in.features);
        const auto probs = cfg.nep_literal
                               ? escluster::compute_all_nep_literal(graph, cfg.tau, in.features,
                                                                    cfg.threads)
                               : escluster::compute_all_nep(graph, cfg.tau, cfg.threads);
        escluster::dump_nep_tsv(probs, nep_out);
        std::cerr << "nep: " << graph.n * graph.k << " entries -> " << nep_out << '\n';
    });

    // ---- cluster (unsupervised route) ------------------------------------
    auto* cluster = app.add_subcommand("cluster", "early-stop clustering (unsupervised)");
    CommonOpts cluster_opts;
    std::string cluster_out, cluster_summary, cluster_metrics, cluster_edges;
    cluster_opts.attach(cluster, true);
    cluster->add_option("--out", cluster_out, "partition output path")->required();
    cluster->add_option("--summary", cluster_summary, "JSON summary path");
    cluster->add_option("--metrics-out", cluster_metrics, "metrics JSON path (needs --labels)");
    cluster->add_option("--edges-out", cluster_edges, "early-stop edge dump (TSV)");
    cluster->callback([&] {
        PipelineConfig cfg = cluster_opts.materialize();
        cfg.mode = "es";
        cfg.partition_out = cluster_out;
        cfg.summary_out = cluster_summary;
        cfg.metrics_out = cluster_metrics;
        cfg.edges_out = cluster_edges;
        log_run(escluster::run_es(cfg));
    });

    // ---- train ------------------------------------------------------------
    auto* train = app.add_subcommand("train", "train the linkage predictor on labeled data");
    CommonOpts train_opts;
    std::string train_model;
    std::int64_t train_epochs = 500;
    double train_lr = 0.5;
    train_opts.attach(train, true);
    train->add_option("--model", train_model, "predictor JSON output path")->required();
    train->add_option("--epochs", train_epochs, "training epochs");
    train->add_option("--lr", train_lr, "learning rate");
    train->callback([&] {
        PipelineConfig cfg = train_opts.materialize();
        cfg.model_path = train_model;
        cfg.train_epochs = train_epochs;
        cfg.train_learning_rate = train_lr;
        for (const auto& w : escluster::validate(cfg)) std::cerr << "warning: " << w << '\n';
        const auto model = escluster::run_train(cfg);
        std::cerr << "train: " << model.loss_curve.front() << " -> " << model.loss_curve.back()
                  << " loss over " << model.epochs << " epochs -> " << train_model << '\n';
    });

    // ---- recall-cluster (supervised route) ---------------------------------
    auto* recall = app.add_subcommand("recall-cluster",
                                      "early-stop clustering plus predictor edge recall");
    CommonOpts recall_opts;
    std::string recall_out, recall_summary, recall_metrics, recall_model, recall_edges;
    bool recall_train = false;
    std::int64_t recall_epochs = 500;
    double recall_lr = 0.5;
    recall_opts.attach(recall, true);
    recall->add_option("--out", recall_out, "partition output path")->required();
    recall->add_option("--summary", recall_summary, "JSON summary path");
    recall->add_option("--metrics-out", recall_metrics, "metrics JSON path (needs --labels)");
    recall->add_option("--edges-out", recall_edges, "early-stop edge dump (TSV)");
    recall->add_option("--model", recall_model, "predictor JSON path (load, or save with --train)");
    recall->add_flag("--train", recall_train, "train the predictor on this run's labeled data");
    recall->add_option("--epochs", recall_epochs, "training epochs (with --train)");
    recall->add_option("--lr", recall_lr, "learning rate (with --train)");
    recall->callback([&] {
        PipelineConfig cfg = recall_opts.materialize();
        cfg.mode = "eser";
        cfg.partition_out = recall_out;
        cfg.summary_out = recall_summary;
        cfg.metrics_out = recall_metrics;
        cfg.edges_out = recall_edges;
        if (!recall_model.empty()) cfg.model_path = recall_model;
        cfg.train = recall_train;
        cfg.train_epochs = recall_epochs;
        cfg.train_learning_rate = recall_lr;
        log_run(escluster::run_eser(cfg));
    });

    // ---- evaluate -----------------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate", "score a predicted partition against labels");
    std::string eval_pred, eval_gt, eval_out;
    evaluate->add_option("--pred", eval_pred, "predicted partition file")->required();
    evaluate->add_option("--labels", eval_gt, "ground-truth labels file")->required();
    evaluate->add_option("--out", eval_out, "metrics JSON output path");
    evaluate->callback([&] {
        const auto pred = escluster::load_labels(eval_pred);
        const auto gt = escluster::load_labels(eval_gt);
        const auto report = escluster::evaluate_clustering(pred.labels, gt.labels);
        std::cout << escluster::format_table(report);
        if (!eval_out.empty()) {
            std::ofstream out(eval_out, std::ios::trunc);
            if (!out) throw escluster::Error("evaluate: cannot open " + eval_out);
            out << escluster::to_json(report).dump(2) << '\n';
        }
    });

    // ---- report --------------------------------------------------------------
    auto* report = app.add_subcommand("report", "ending-position / post-stop diagnostics");
    CommonOpts report_opts;
    std::string report_kind = "ending_stats";
    std::string report_thresholds;
    std::string report_modes = "raw_similarity,sorted_nep,unsorted_nep";
    std::string report_out;
    report_opts.attach(report, true);
    report->add_option("--kind", report_kind, "ending_stats|post_stop_stats");
    report->add_option("--thresholds", report_thresholds, "comma-separated threshold list")
        ->required();
    report->add_option("--stats-mode", report_modes,
                       "comma-separated modes for ending_stats");
    report->add_option("--out", report_out, "JSON output path");
    report->callback([&] {
        PipelineConfig cfg = report_opts.materialize();
        const auto thresholds = parse_threshold_list(report_thresholds);
        std::vector<escluster::StatsMode> modes;
        std::stringstream ss(report_modes);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item == "raw_similarity") modes.push_back(escluster::StatsMode::raw_similarity);
            else if (item == "sorted_nep") modes.push_back(escluster::StatsMode::sorted_nep);
            else if (item == "unsorted_nep") modes.push_back(escluster::StatsMode::unsorted_nep);
            else throw escluster::ParameterError("--stats-mode: unknown mode \"" + item + "\"");
        }
        escluster::ReportKind kind;
        if (report_kind == "ending_stats") kind = escluster::ReportKind::ending_stats;
        else if (report_kind == "post_stop_stats") kind = escluster::ReportKind::post_stop_stats;
        else throw escluster::ParameterError("--kind: must be ending_stats or post_stop_stats");
        const auto j = escluster::run_report(cfg, kind, thresholds, modes);
        if (report_out.empty()) {
            std::cout << j.dump(2) << '\n';
        } else {
            std::ofstream out(report_out, std::ios::trunc);
            if (!out) throw escluster::Error("report: cannot open " + report_out);
            out << j.dump(2) << '\n';
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const escluster::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
