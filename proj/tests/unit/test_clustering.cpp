#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "generators.hpp"
#include "nuteval/clustering.hpp"
#include "nuteval/error.hpp"
#include "oracles.hpp"

using namespace nuteval;
using namespace nuteval::codebook;

namespace {

std::vector<std::vector<double>> blobs(std::size_t centres, std::size_t per, double spread, std::uint64_t seed,
                                       std::size_t dim = 8) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    for (std::size_t c = 0; c < centres; ++c) {
        auto centre = gen::unit(rng, dim);
        for (auto& x : centre) x *= 10.0;
        for (std::size_t i = 0; i < per; ++i) {
            auto p = centre;
            for (auto& x : p) x += spread * gen::normal(rng);
            rows.push_back(p);
        }
    }
    return rows;
}

}  // namespace

TEST(KMeans, TwoTightPairsMatchBestPartition) {
    const std::vector<std::vector<double>> rows{{0, 0}, {0.1, 0}, {5, 5}, {5, 5.1}};
    const auto r = kmeans(PointSet::from_rows(rows), {2, 1});
    EXPECT_EQ(r.assignment[0], r.assignment[1]);
    EXPECT_EQ(r.assignment[2], r.assignment[3]);
    EXPECT_NE(r.assignment[0], r.assignment[2]);

    // brute force over all 2-partitions
    double best = INFINITY;
    for (unsigned mask = 1; mask < (1u << rows.size()) - 1; ++mask) {
        double sse = 0;
        for (unsigned side = 0; side < 2; ++side) {
            std::vector<double> mean(2, 0.0);
            int n = 0;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (((mask >> i) & 1u) == side) {
                    mean[0] += rows[i][0];
                    mean[1] += rows[i][1];
                    ++n;
                }
            }
            for (auto& m : mean) m /= n;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (((mask >> i) & 1u) == side) sse += std::pow(oracle::distance(rows[i], mean), 2);
            }
        }
        best = std::min(best, sse);
    }
    EXPECT_NEAR(r.sse, best, 1e-12);
}

TEST(KMeans, KEqualsNGivesSingletons) {
    const auto r = kmeans(PointSet::from_rows({{0}, {1}, {2}, {3}}), {4, 9});
    EXPECT_EQ(std::set<std::size_t>(r.assignment.begin(), r.assignment.end()).size(), 4u);
    EXPECT_DOUBLE_EQ(r.sse, 0.0);
}

TEST(KMeans, Preconditions) {
    const auto p = PointSet::from_rows({{0}, {1}});
    EXPECT_THROW(kmeans(p, {1, 0}), PreconditionError);
    EXPECT_THROW(kmeans(p, {3, 0}), PreconditionError);
}

TEST(KMeans, SseNeverIncreasesAndIsDeterministic) {
    const auto p = PointSet::from_rows(blobs(6, 15, 1.5, 8));
    const auto a = kmeans(p, {6, 21, 300, 3});
    for (std::size_t i = 1; i < a.sse_history.size(); ++i) EXPECT_LE(a.sse_history[i], a.sse_history[i - 1] + 1e-9);
    const auto b = kmeans(p, {6, 21, 300, 3});
    EXPECT_EQ(a.assignment, b.assignment);
    EXPECT_EQ(a.sse, b.sse);
}

TEST(KMeans, DuplicatePointsKeepEveryClusterNonEmpty) {
    const auto r = kmeans(PointSet::from_rows({{0}, {0}, {0}, {0}, {1}}), {3, 2});
    EXPECT_EQ(std::set<std::size_t>(r.assignment.begin(), r.assignment.end()).size(), 3u);
}

TEST(Silhouette, SeparatedPairs) {
    const auto s = silhouette(PointSet::from_rows({{0}, {0.1}, {10}, {10.1}}), std::vector<std::size_t>{0, 0, 1, 1});
    EXPECT_NEAR(s.score, 0.99, 0.001);
}

TEST(Silhouette, IdenticalPointsScoreZero) {
    const auto s = silhouette(PointSet::from_rows({{1, 1}, {1, 1}, {1, 1}, {1, 1}}), std::vector<std::size_t>{0, 0, 1, 1});
    for (double x : s.per_point) EXPECT_EQ(x, 0.0);
}

TEST(Silhouette, FivePointHandCase) {
    const std::vector<std::vector<double>> rows{{0, 0}, {1, 0}, {0, 2}, {6, 1}, {7, 3}};
    const std::vector<std::size_t> labels{4, 4, 4, 9, 9};
    const auto s = silhouette(PointSet::from_rows(rows), labels);
    const auto want = oracle::silhouette(rows, labels);
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_NEAR(s.per_point[i], want[i], 1e-15);
}

TEST(Silhouette, SingletonScoresZeroAndPreconditions) {
    const auto s = silhouette(PointSet::from_rows({{0}, {1}, {5}}), std::vector<std::size_t>{0, 0, 1});
    EXPECT_EQ(s.per_point[2], 0.0);
    EXPECT_THROW(silhouette(PointSet::from_rows({{0}, {1}}), std::vector<std::size_t>{0, 0}), PreconditionError);
    EXPECT_THROW(silhouette(PointSet::from_rows({{0}, {1}}), std::vector<std::size_t>{0}), PreconditionError);
}

TEST(Silhouette, RandomClusteringsMatchOracleAndStayInRange) {
    Rng rng(12);
    for (int i = 0; i < 150; ++i) {
        const auto n = 3 + rng.below(15);
        const auto dim = 1 + rng.below(4);
        std::vector<std::vector<double>> rows;
        std::vector<std::size_t> labels;
        for (std::uint64_t j = 0; j < n; ++j) {
            std::vector<double> p(dim);
            for (auto& x : p) x = gen::normal(rng);
            rows.push_back(p);
            labels.push_back(j < 2 ? j : rng.below(4));
        }
        const auto s = silhouette(PointSet::from_rows(rows), labels);
        const auto want = oracle::silhouette(rows, labels);
        for (std::size_t j = 0; j < n; ++j) {
            ASSERT_NEAR(s.per_point[j], want[j], 1e-12);
            ASSERT_GE(s.per_point[j], -1.0);
            ASSERT_LE(s.per_point[j], 1.0);
        }
    }
}

TEST(TrimmedSilhouette, Cases) {
    const std::vector<double> s{-1, 1, 1, 1};
    EXPECT_DOUBLE_EQ(trimmed_silhouette(s, 0.25), 1.0);
    EXPECT_DOUBLE_EQ(trimmed_silhouette(s, 0.0), 0.5);
    const std::vector<double> flat(10, 0.5);
    for (double tau : {0.0, 0.05, 0.1, 0.3, 0.49}) EXPECT_DOUBLE_EQ(trimmed_silhouette(flat, tau), 0.5);
    EXPECT_THROW(trimmed_silhouette(s, 0.5), PreconditionError);
    EXPECT_THROW(trimmed_silhouette(s, -0.1), PreconditionError);
}

TEST(SelectDimension, SingleCandidate) {
    const auto p = PointSet::from_rows(blobs(2, 5, 0.1, 3));
    const std::vector<std::size_t> ks{2};
    const std::vector<double> taus{0.0};
    const auto sel = select_dimension(p, ks, taus, 1);
    EXPECT_EQ(sel.k, 2u);
    EXPECT_EQ(sel.tau, 0.0);
    EXPECT_EQ(sel.table.size(), 1u);
}

TEST(SelectDimension, TwentyBlobsPickTwenty) {
    const auto p = PointSet::from_rows(blobs(20, 10, 0.15, 99, 16));
    const std::vector<std::size_t> ks{10, 15, 20};
    const std::vector<double> taus{0.0, 0.05, 0.10};
    const auto sel = select_dimension(p, ks, taus, 5);
    EXPECT_EQ(sel.k, 20u);
    EXPECT_EQ(sel.table.size(), 9u);
    for (const auto& row : sel.table) EXPECT_LE(row.score, sel.score);
}
