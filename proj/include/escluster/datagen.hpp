#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "escluster/errors.hpp"
#include "escluster/feature_store.hpp"
#include "escluster/rng.hpp"

namespace escluster {

// Seeded sphere-mixture generator: cluster centers on the unit sphere with
// bounded pairwise cosine, per-point Gaussian noise, renormalized.
struct SynthConfig {
    std::int64_t num_clusters = 50;
    std::int64_t size_min = 5;
    std::int64_t size_max = 100;
    std::int64_t d = 64;
    // Calibrated so the benchmark is neither trivially separable by one
    // global similarity threshold nor hopeless: at 0.08 every method,
    // including plain threshold components, scores a perfect F.
    double noise_sigma = 0.14;
    double max_center_cosine = 0.3;  // reject center pairs above this
    std::uint64_t seed = 7;
};

struct SynthData {
    FeatureSet features;
    LabelSet labels;
};

inline SynthData gen_sphere_mixture(const SynthConfig& cfg) {
    if (cfg.num_clusters < 1) throw ParameterError("gen_sphere_mixture: num_clusters must be >= 1");
    if (cfg.size_min < 1 || cfg.size_max < cfg.size_min) {
        throw ParameterError("gen_sphere_mixture: need 1 <= size_min <= size_max");
    }
    if (cfg.d < 2) throw ParameterError("gen_sphere_mixture: d must be >= 2");
    if (cfg.noise_sigma < 0.0) throw ParameterError("gen_sphere_mixture: noise_sigma must be >= 0");

    Rng rng(cfg.seed);
    const auto random_unit = [&](std::vector<double>& v) {
        double norm = 0.0;
        do {
            norm = 0.0;
            for (auto& x : v) {
                x = rng.normal();
                norm += x * x;
            }
        } while (norm < 1e-24);
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
    };

    // Rejection-sample centers until all pairwise cosines stay below the cap.
    std::vector<std::vector<double>> centers;
    centers.reserve(cfg.num_clusters);
    std::int64_t attempts = 0;
    const std::int64_t budget = 1000 * cfg.num_clusters;
    std::vector<double> cand(cfg.d);
    while (static_cast<std::int64_t>(centers.size()) < cfg.num_clusters) {
        if (++attempts > budget) {
            throw ParameterError(
                "gen_sphere_mixture: center rejection budget exhausted; use fewer clusters, a "
                "higher max_center_cosine, or a larger dimension");
        }
        random_unit(cand);
        bool ok = true;
        for (const auto& c : centers) {
            double dot = 0.0;
            for (std::int64_t i = 0; i < cfg.d; ++i) dot += cand[i] * c[i];
            if (dot > cfg.max_center_cosine) {
                ok = false;
                break;
            }
        }
        if (ok) centers.push_back(cand);
    }

    std::vector<std::int64_t> sizes(cfg.num_clusters);
    std::int64_t n = 0;
    for (auto& s : sizes) {
        s = static_cast<std::int64_t>(
            rng.uniform_int(static_cast<std::uint64_t>(cfg.size_min),
                            static_cast<std::uint64_t>(cfg.size_max)));
        n += s;
    }

    SynthData out;
    out.features.n = n;
    out.features.d = cfg.d;
    out.features.data.resize(static_cast<std::size_t>(n * cfg.d));
    out.labels.labels.reserve(n);

    std::size_t row = 0;
    std::vector<double> point(cfg.d);
    for (std::int64_t c = 0; c < cfg.num_clusters; ++c) {
        for (std::int64_t s = 0; s < sizes[c]; ++s) {
            double norm = 0.0;
            do {
                norm = 0.0;
                for (std::int64_t i = 0; i < cfg.d; ++i) {
                    point[i] = centers[c][i] + cfg.noise_sigma * rng.normal();
                    norm += point[i] * point[i];
                }
            } while (norm < 1e-24);
            norm = std::sqrt(norm);
            float* dst = out.features.data.data() + row * cfg.d;
            for (std::int64_t i = 0; i < cfg.d; ++i) {
                dst[i] = static_cast<float>(point[i] / norm);
            }
            out.labels.labels.push_back(c);
            ++row;
        }
    }
    // Rows were built unit-norm in double; normalize() re-asserts the
    // invariant on the float32 values.
    out.features = normalize(std::move(out.features));
    return out;
}

}  // namespace escluster
