#include "escluster/feature_store.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "test_util.hpp"

using namespace escluster;

namespace {

void write_floats(const std::string& path, const std::vector<float>& values) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
}

TEST(FeatureStore, LoadDecodesRowMajor) {
    esctest::TempDir tmp;
    write_floats(tmp.file("f.bin"), {3.0f, 4.0f});
    const FeatureSet fs = load_features(tmp.file("f.bin"), 1, 2);
    EXPECT_EQ(fs.n, 1);
    EXPECT_EQ(fs.d, 2);
    EXPECT_FALSE(fs.normalized);
    EXPECT_FLOAT_EQ(fs.data[0], 3.0f);
    EXPECT_FLOAT_EQ(fs.data[1], 4.0f);
}

TEST(FeatureStore, SizeMismatchIsDimensionError) {
    esctest::TempDir tmp;
    write_floats(tmp.file("f.bin"), {1.0f, 2.0f, 3.0f});
    EXPECT_THROW(load_features(tmp.file("f.bin"), 2, 2), DimensionError);
}

TEST(FeatureStore, NanIsDataError) {
    esctest::TempDir tmp;
    write_floats(tmp.file("f.bin"), {1.0f, std::numeric_limits<float>::quiet_NaN()});
    EXPECT_THROW(load_features(tmp.file("f.bin"), 1, 2), DataError);
}

TEST(FeatureStore, NormalizeScalesToUnitNorm) {
    FeatureSet fs = esctest::make_features({{3.0f, 4.0f}});
    fs = normalize(std::move(fs));
    EXPECT_TRUE(fs.normalized);
    EXPECT_NEAR(fs.data[0], 0.6f, 1e-7);
    EXPECT_NEAR(fs.data[1], 0.8f, 1e-7);
}

TEST(FeatureStore, NormalizeKeepsUnitRows) {
    FeatureSet fs = esctest::make_features({{0.0f, 0.0f, 1.0f}});
    fs = normalize(std::move(fs));
    EXPECT_FLOAT_EQ(fs.data[2], 1.0f);
}

TEST(FeatureStore, ZeroNormRowIsDegenerate) {
    FeatureSet fs = esctest::make_features({{1.0f, 0.0f}, {0.0f, 0.0f}});
    try {
        normalize(std::move(fs));
        FAIL() << "expected DegenerateInputError";
    } catch (const DegenerateInputError& e) {
        EXPECT_NE(std::string(e.what()).find("index 1"), std::string::npos);
    }
}

TEST(FeatureStore, NormalizeIsIdempotent) {
    FeatureSet fs = esctest::make_features({{0.3f, -1.5f, 2.0f}, {5.0f, 0.1f, -0.2f}});
    const FeatureSet once = normalize(fs);
    const FeatureSet twice = normalize(once);
    for (std::size_t i = 0; i < once.data.size(); ++i) {
        EXPECT_NEAR(once.data[i], twice.data[i], 1e-7);
    }
}

TEST(FeatureStore, SaveLoadRoundTripsBitExactly) {
    esctest::TempDir tmp;
    FeatureSet fs = esctest::make_features({{0.25f, -1.75f}, {3.5f, 0.125f}});
    save_features(fs, tmp.file("f.bin"));
    const FeatureSet back = load_features(tmp.file("f.bin"), 2, 2);
    EXPECT_EQ(fs.data, back.data);
}

TEST(FeatureStore, LoadLabelsParsesLines) {
    esctest::TempDir tmp;
    std::ofstream(tmp.file("l.txt")) << "0\n0\n1\n";
    const LabelSet ls = load_labels(tmp.file("l.txt"));
    EXPECT_EQ(ls.labels, (std::vector<std::int64_t>{0, 0, 1}));
}

TEST(FeatureStore, BadLabelLineReportsLineNumber) {
    esctest::TempDir tmp;
    std::ofstream(tmp.file("l.txt")) << "0\nx\n";
    try {
        load_labels(tmp.file("l.txt"));
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(FeatureStore, EmptyLabelFileIsEmptySet) {
    esctest::TempDir tmp;
    std::ofstream(tmp.file("l.txt"));
    EXPECT_EQ(load_labels(tmp.file("l.txt")).size(), 0);
}

TEST(FeatureStore, SidecarRoundTrip) {
    esctest::TempDir tmp;
    save_sidecar({123, 45}, tmp.file("f.json"));
    const FeatureSidecar sc = load_sidecar(tmp.file("f.json"));
    EXPECT_EQ(sc.n, 123);
    EXPECT_EQ(sc.d, 45);
}

}  // namespace
