#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "halluscan/error.hpp"
#include "halluscan/keyframe.hpp"
#include "support/oracles.hpp"

using namespace halluscan;
using namespace halluscan::testing;

namespace {

DistanceMatrix to_matrix(const Matrix& m) {
    DistanceMatrix d(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j) d.set(i, j, m[i][j]);
    return d;
}

DistanceMatrix line(const std::vector<double>& x) { return to_matrix(abs_diff_matrix(x)); }

FrameSet frames_from(const std::vector<std::vector<double>>& features) {
    FrameSet fs;
    std::vector<FeatureVector> f;
    for (std::size_t i = 0; i < features.size(); ++i) {
        fs.frames.push_back({static_cast<int>(i), static_cast<int>(i), static_cast<double>(i), {}});
        f.push_back(FeatureVector::normalized(features[i]));
    }
    fs.features = std::move(f);
    fs.total_duration_s = static_cast<double>(features.size());
    return fs;
}

}  // namespace

TEST(PairwiseDistances, SingleFrameIsZero) {
    auto d = pairwise_distances(frames_from({{1.0, 0.0}}), DistanceMetric::cosine);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d(0, 0), 0.0);
}

TEST(PairwiseDistances, IdenticalFramesGiveZeroMatrix) {
    auto d = pairwise_distances(frames_from({{0.3, 0.4}, {0.3, 0.4}}), DistanceMetric::cosine);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(d(i, j), 0.0);
}

TEST(PairwiseDistances, MatchesFrameDistanceAndIsSymmetric) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> feats(20, std::vector<double>(5));
    for (auto& f : feats)
        for (auto& v : f) v = u(rng);
    auto fs = frames_from(feats);
    auto d1 = pairwise_distances(fs, DistanceMetric::cosine, 1);
    auto d3 = pairwise_distances(fs, DistanceMetric::cosine, 3);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(d1(i, i), 0.0);
        for (std::size_t j = 0; j < 20; ++j) {
            EXPECT_EQ(d1(i, j), d1(j, i));
            EXPECT_EQ(d1(i, j), d3(i, j));
            if (i != j) EXPECT_EQ(d1(i, j), frame_distance(fs.feature(i), fs.feature(j)));
        }
    }
}

TEST(PairwiseDistances, MissingFeaturesIsContractError) {
    FrameSet fs;
    fs.frames.push_back({0, 0, 0.0, {}});
    EXPECT_THROW(pairwise_distances(fs, DistanceMetric::cosine), ContractError);
}

TEST(PairwiseDistances, OneDimensionalExampleRows) {
    auto d = line({0.0, 1.0, 3.0});
    const double rows[3][3] = {{0, 1, 3}, {1, 0, 2}, {3, 2, 0}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(d(i, j), rows[i][j]);
}

TEST(ChooseDc, ConstantDistances) {
    DistanceMatrix d(4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j) d.set(i, j, 0.7);
    EXPECT_EQ(choose_dc(d), 0.7);
}

TEST(ChooseDc, AllIdenticalUsesFloor) {
    EXPECT_EQ(choose_dc(DistanceMatrix(5)), kMinCutoff);
}

TEST(ChooseDc, OneToHundredAtTwoPercent) {
    std::vector<double> values(100);
    std::iota(values.begin(), values.end(), 1.0);
    const double expected = oracle_quantile(values, 0.02);
    EXPECT_NEAR(expected, 2.98, 1e-12);
    EXPECT_NEAR(quantile(values, 0.02), expected, 1e-12);
    std::shuffle(values.begin(), values.end(), std::mt19937_64(1));
    EXPECT_NEAR(quantile(values, 0.02), expected, 1e-12);
}

TEST(ChooseDc, UsesEachPairOnce) {
    auto d = line({0.0, 1.0, 3.0, 6.0});
    std::vector<double> pairs = {1, 3, 6, 2, 5, 3};
    EXPECT_NEAR(choose_dc(d, 0.5), oracle_quantile(pairs, 0.5), 1e-12);
}

TEST(ChooseDc, Contract) {
    EXPECT_THROW(choose_dc(DistanceMatrix(1)), ContractError);
    EXPECT_THROW(choose_dc(DistanceMatrix(3), 0.0), ContractError);
    EXPECT_THROW(choose_dc(DistanceMatrix(3), 1.0), ContractError);
}

TEST(LocalDensity, CutoffOneDimensionalExample) {
    auto d = line({0.0, 1.0, 2.0, 10.0});
    const auto expected = oracle_rho(abs_diff_matrix({0.0, 1.0, 2.0, 10.0}), 1.5, false);
    EXPECT_EQ(expected, (std::vector<double>{1, 2, 1, 0}));
    EXPECT_EQ(local_density(d, 1.5, DensityKernel::cutoff), expected);
}

TEST(LocalDensity, GaussianAtExactlyDc) {
    auto rho = local_density(line({0.0, 0.5}), 0.5, DensityKernel::gaussian);
    EXPECT_NEAR(rho[0], 0.367879, 1e-6);
    EXPECT_EQ(rho[0], rho[1]);
}

TEST(LocalDensity, CutoffBoundaryIsStrict) {
    EXPECT_EQ(local_density(line({0.0, 0.5}), 0.5, DensityKernel::cutoff), (std::vector<double>{0, 0}));
}

TEST(LocalDensity, NonPositiveDcIsContractError) {
    EXPECT_THROW(local_density(line({0.0, 1.0}), 0.0, DensityKernel::gaussian), ContractError);
}

TEST(RelativeDistance, OneDimensionalExample) {
    const std::vector<double> x = {0.0, 1.0, 2.0, 10.0};
    const std::vector<double> rho = {1, 2, 1, 0};
    const auto expected = oracle_delta(abs_diff_matrix(x), rho);
    EXPECT_EQ(expected, (std::vector<double>{1, 9, 1, 8}));
    EXPECT_EQ(relative_distance(line(x), rho), expected);
}

TEST(RelativeDistance, AllIdenticalGivesZero) {
    EXPECT_EQ(relative_distance(DistanceMatrix(3), std::vector<double>{2, 2, 2}), (std::vector<double>{0, 0, 0}));
}

TEST(RelativeDistance, TwoFramesBothBranches) {
    DistanceMatrix d(2);
    d.set(0, 1, 0.7);
    EXPECT_EQ(relative_distance(d, std::vector<double>{2, 1}), (std::vector<double>{0.7, 0.7}));
}

TEST(RelativeDistance, TiedMaximaBothTakeMaxDistance) {
    auto d = line({0.0, 1.0, 5.0});
    auto delta = relative_distance(d, std::vector<double>{3, 3, 1});
    EXPECT_EQ(delta[0], 5.0);
    EXPECT_EQ(delta[1], 4.0);
    EXPECT_EQ(delta[2], 4.0);
}

TEST(DensityStats, GammaIsProduct) {
    auto s = DensityStats::from({1, 2, 1, 0}, {1, 9, 1, 8});
    EXPECT_EQ(s.gamma, (std::vector<double>{1, 18, 1, 0}));
    EXPECT_THROW(DensityStats::from({1, 2}, {1}), ContractError);
}

TEST(SelectKeyframes, WorkedExample) {
    auto s = DensityStats::from({1, 2, 1, 0}, {1, 9, 1, 8});
    EXPECT_EQ(select_keyframes(s, 1).indices, (std::vector<int>{1}));
}

TEST(SelectKeyframes, AllFramesWhenMEqualsN) {
    auto s = DensityStats::from({1, 2, 1, 0}, {1, 9, 1, 8});
    EXPECT_EQ(select_keyframes(s, 4).indices, (std::vector<int>{0, 1, 2, 3}));
}

TEST(SelectKeyframes, TiesGoToLowerIndex) {
    auto s = DensityStats::from({1, 1, 1, 1}, {1, 1, 1, 1});
    EXPECT_EQ(select_keyframes(s, 2).indices, (std::vector<int>{0, 1}));
}

TEST(SelectKeyframes, MoreThanNIsContractError) {
    auto s = DensityStats::from({1, 1}, {1, 1});
    EXPECT_THROW(select_keyframes(s, 3), ContractError);
    EXPECT_THROW(select_keyframes(s, 0), ContractError);
}

TEST(SelectKeyframes, PropertyPermutationStable) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> small(0, 3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 30;
        std::vector<double> rho(n), delta(n);
        for (std::size_t i = 0; i < n; ++i) {
            rho[i] = small(rng);
            delta[i] = small(rng);
        }
        const std::size_t m = 1 + rng() % n;
        auto k = select_keyframes(DensityStats::from(rho, delta), m).indices;

        // reference: order by (-gamma, index)
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double ga = rho[a] * delta[a], gb = rho[b] * delta[b];
            return ga != gb ? ga > gb : a < b;
        });
        std::vector<int> expected(order.begin(), order.begin() + static_cast<long>(m));
        std::sort(expected.begin(), expected.end());
        ASSERT_EQ(k, expected);
    }
}

TEST(AutoKeyframeCount, LargestGap) {
    auto s = DensityStats::from({10, 9, 1, 0.5}, {1, 1, 1, 1});
    EXPECT_EQ(auto_keyframe_count(s), 2u);
    EXPECT_EQ(auto_keyframe_count(DensityStats::from({1}, {1})), 1u);
}

TEST(Anchors, IncludeEndpointsOnce) {
    EXPECT_EQ(anchor_indices({{0, 3}}, 7), (std::vector<int>{0, 3, 6}));
    EXPECT_EQ(anchor_indices({{3}}, 7), (std::vector<int>{0, 3, 6}));
    EXPECT_EQ(anchor_indices({{0}}, 1), (std::vector<int>{0}));
}

TEST(DetailFrames, SevenFrameTrace) {
    const std::vector<double> x = {0.0, 0.0, 0.5, 1.0, 1.0, 1.6, 2.0};
    const std::vector<int> h = {0, 3, 6};
    EXPECT_EQ(oracle_details(abs_diff_matrix(x), h, 0.4), (std::vector<int>{2, 5}));
    EXPECT_EQ(extract_detail_frames(line(x), h, 0.4), (std::vector<int>{2, 5}));
}

TEST(DetailFrames, IdenticalFramesAndLargeThresholdGiveNone) {
    EXPECT_TRUE(extract_detail_frames(DistanceMatrix(5), std::vector<int>{0, 2, 4}, 0.1).empty());
    EXPECT_TRUE(extract_detail_frames(line({0, 0.1, 0.5, 0.9, 1.2}), std::vector<int>{0, 2, 4}, 5.0).empty());
}

TEST(DetailFrames, Contract) {
    auto d = line({0, 1, 2, 3});
    EXPECT_THROW(extract_detail_frames(d, std::vector<int>{1, 3}, 0.3), ContractError);
    EXPECT_THROW(extract_detail_frames(d, std::vector<int>{0, 2}, 0.3), ContractError);
    EXPECT_THROW(extract_detail_frames(d, std::vector<int>{0, 2, 1, 3}, 0.3), ContractError);
    EXPECT_THROW(extract_detail_frames(d, std::vector<int>{0, 3}, 0.0), ContractError);
}

TEST(DetailFrames, PropertyMatchesOracleAndStaysInsideSegments) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng() % 40;
        std::vector<double> x(n);
        for (auto& v : x) v = u(rng);
        std::vector<int> h = {0};
        for (std::size_t i = 1; i + 1 < n; ++i)
            if (rng() % 4 == 0) h.push_back(static_cast<int>(i));
        h.push_back(static_cast<int>(n) - 1);
        const double tau = 0.05 + u(rng) / 3.0;
        auto got = extract_detail_frames(line(x), h, tau);
        ASSERT_EQ(got, oracle_details(abs_diff_matrix(x), h, tau));
        for (int dtl : got) EXPECT_TRUE(std::find(h.begin(), h.end(), dtl) == h.end());
    }
}

TEST(BuildClusters, SingleKeyframeCollectsBothSides) {
    auto c = build_clusters({{3}}, std::vector<int>{2, 5}, std::vector<int>{0, 3, 6});
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c.clusters[0].keyframe_index, 3);
    EXPECT_EQ(c.clusters[0].detail_indices, (std::vector<int>{2, 5}));
    EXPECT_EQ(c.clusters[0].frames(), (std::vector<int>{2, 3, 5}));
}

TEST(BuildClusters, NoDetailsGivesBareKeyframes) {
    auto c = build_clusters({{1, 4}}, {}, std::vector<int>{0, 1, 4, 6});
    ASSERT_EQ(c.size(), 2u);
    EXPECT_TRUE(c.clusters[0].detail_indices.empty());
    EXPECT_EQ(c.clusters[1].cluster_id, 1);
    EXPECT_EQ(c.detail_count(), 0u);
}

TEST(BuildClusters, LeftKeyframeRule) {
    auto c = build_clusters({{2, 8}}, std::vector<int>{5}, std::vector<int>{0, 2, 8, 9});
    EXPECT_EQ(c.clusters[0].detail_indices, (std::vector<int>{5}));
    EXPECT_TRUE(c.clusters[1].detail_indices.empty());
}

TEST(BuildClusters, DetailOnKeyframeIsContractError) {
    EXPECT_THROW(build_clusters({{2}}, std::vector<int>{2}, std::vector<int>{0, 2, 4}), ContractError);
}

TEST(BuildClusters, PropertyPartitionsDetails) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + rng() % 40;
        std::vector<std::vector<double>> feats(n, std::vector<double>(4));
        for (auto& f : feats)
            for (auto& v : f) v = u(rng);
        KeyframeOptions o;
        o.m = 1 + rng() % 4;
        o.tau_d = 0.02;
        auto a = analyze_keyframes(frames_from(feats), o);
        std::size_t total = 0;
        std::vector<int> seen;
        for (std::size_t i = 0; i < a.clusters.size(); ++i) {
            const auto& c = a.clusters.clusters[i];
            EXPECT_EQ(c.keyframe_index, a.keyframes.indices[i]);
            EXPECT_TRUE(std::is_sorted(c.detail_indices.begin(), c.detail_indices.end()));
            total += c.detail_indices.size();
            seen.insert(seen.end(), c.detail_indices.begin(), c.detail_indices.end());
        }
        std::sort(seen.begin(), seen.end());
        EXPECT_EQ(total, a.details.size());
        EXPECT_EQ(seen, a.details);
    }
}

TEST(AnalyzeKeyframes, ClampsMAndHandlesSingleFrame) {
    KeyframeOptions o;
    o.m = 10;
    auto a = analyze_keyframes(frames_from({{1, 0}, {0, 1}, {1, 1}}), o);
    EXPECT_EQ(a.keyframes.m(), 3u);
    auto single = analyze_keyframes(frames_from({{1, 0}}), o);
    EXPECT_EQ(single.keyframes.indices, (std::vector<int>{0}));
    EXPECT_EQ(single.clusters.size(), 1u);
}

TEST(AnalyzeKeyframes, AutoModePicksLargestGap) {
    // two tight, well separated groups
    std::vector<std::vector<double>> feats;
    for (int i = 0; i < 10; ++i) feats.push_back({1.0, 0.002 * i * i});
    for (int i = 0; i < 10; ++i) feats.push_back({0.003 * i * i, 1.0});
    KeyframeOptions o;
    o.m_auto = true;
    o.dc_fraction = 0.2;
    auto a = analyze_keyframes(frames_from(feats), o);
    ASSERT_EQ(a.keyframes.m(), 2u);
    EXPECT_LT(a.keyframes.indices[0], 10);
    EXPECT_GE(a.keyframes.indices[1], 10);
}

TEST(Kernel, ParseRoundTrip) {
    EXPECT_EQ(parse_kernel("cutoff"), DensityKernel::cutoff);
    EXPECT_EQ(to_string(DensityKernel::gaussian), "gaussian");
    EXPECT_THROW(parse_kernel("triangle"), ContractError);
}
