#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "escluster/errors.hpp"

namespace escluster {

// N row-major D-dimensional vectors. Storage is float32 (the on-disk
// format); all downstream arithmetic runs in double.
struct FeatureSet {
    std::int64_t n = 0;
    std::int64_t d = 0;
    std::vector<float> data;  // n * d, row-major
    bool normalized = false;

    std::span<const float> row(std::int64_t i) const {
        return {data.data() + i * d, static_cast<std::size_t>(d)};
    }
    std::span<float> row(std::int64_t i) {
        return {data.data() + i * d, static_cast<std::size_t>(d)};
    }
};

// Ground-truth identity per sample. Ids need not be contiguous.
struct LabelSet {
    std::vector<std::int64_t> labels;

    std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
};

// Raw little-endian float32 file, row-major, exactly n*d values.
inline FeatureSet load_features(const std::string& path, std::int64_t n, std::int64_t d) {
    if (n < 1 || d < 1) {
        throw ParameterError("load_features: n and d must be >= 1 (got n=" +
                             std::to_string(n) + ", d=" + std::to_string(d) + ")");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_features: cannot open " + path);

    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::int64_t>(in.tellg());
    const std::int64_t expected = n * d * static_cast<std::int64_t>(sizeof(float));
    if (bytes != expected) {
        throw DimensionError("load_features: " + path + " holds " + std::to_string(bytes) +
                             " bytes but n=" + std::to_string(n) + ", d=" + std::to_string(d) +
                             " requires " + std::to_string(expected));
    }
    in.seekg(0, std::ios::beg);

    FeatureSet fs;
    fs.n = n;
    fs.d = d;
    fs.data.resize(static_cast<std::size_t>(n * d));
    in.read(reinterpret_cast<char*>(fs.data.data()), expected);
    if (!in) throw Error("load_features: short read from " + path);

    for (std::size_t idx = 0; idx < fs.data.size(); ++idx) {
        if (!std::isfinite(fs.data[idx])) {
            throw DataError("load_features: non-finite value at flat index " + std::to_string(idx));
        }
    }
    return fs;
}

inline void save_features(const FeatureSet& fs, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("save_features: cannot open " + path);
    out.write(reinterpret_cast<const char*>(fs.data.data()),
              static_cast<std::streamsize>(fs.data.size() * sizeof(float)));
    if (!out) throw Error("save_features: short write to " + path);
}

// Unit-normalize every row. Norms are accumulated in double; a zero-norm
// row is a hard error because dropping it would desynchronize labels.
inline FeatureSet normalize(FeatureSet fs) {
    for (std::int64_t i = 0; i < fs.n; ++i) {
        auto r = fs.row(i);
        double sq = 0.0;
        for (float v : r) sq += static_cast<double>(v) * static_cast<double>(v);
        if (sq <= 0.0) {
            throw DegenerateInputError("normalize: zero-norm row at index " + std::to_string(i));
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (float& v : r) v = static_cast<float>(static_cast<double>(v) * inv);
    }
    fs.normalized = true;
    return fs;
}

// One integer per line, order preserved. An empty file is an empty set.
inline LabelSet load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_labels: cannot open " + path);
    LabelSet ls;
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() && in.eof()) break;
        std::size_t pos = 0;
        std::int64_t value = 0;
        try {
            value = std::stoll(line, &pos);
        } catch (const std::exception&) {
            throw ParseError("load_labels: non-integer at line " + std::to_string(lineno));
        }
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\r' || line[pos] == '\t')) ++pos;
        if (pos != line.size()) {
            throw ParseError("load_labels: non-integer at line " + std::to_string(lineno));
        }
        if (value < 0) {
            throw ParseError("load_labels: negative label at line " + std::to_string(lineno));
        }
        ls.labels.push_back(value);
    }
    return ls;
}

inline void save_labels(const LabelSet& ls, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("save_labels: cannot open " + path);
    for (auto v : ls.labels) out << v << '\n';
    if (!out) throw Error("save_labels: short write to " + path);
}

// {"n": ..., "d": ...} sidecar next to features.bin.
struct FeatureSidecar {
    std::int64_t n = 0;
    std::int64_t d = 0;
};

inline FeatureSidecar load_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_sidecar: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("load_sidecar: " + path + ": " + e.what());
    }
    if (!j.contains("n") || !j.contains("d")) {
        throw ParseError("load_sidecar: " + path + " must carry integer fields n and d");
    }
    return {j.at("n").get<std::int64_t>(), j.at("d").get<std::int64_t>()};
}

inline void save_sidecar(const FeatureSidecar& sc, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("save_sidecar: cannot open " + path);
    nlohmann::json j{{"n", sc.n}, {"d", sc.d}};
    out << j.dump(2) << '\n';
}

}  // namespace escluster
