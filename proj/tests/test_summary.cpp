#include "lsbm/lsbm.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace lsbm;

namespace {

PosteriorSamples from_labels(const std::vector<std::vector<int>>& draws) {
    PosteriorSamples s;
    s.n = static_cast<Eigen::Index>(draws.front().size());
    for (const auto& z : draws) {
        for (int v : z) {
            s.z.push_back(static_cast<std::uint16_t>(v));
            s.theta.push_back(0.0);
        }
        const int k = *std::max_element(z.begin(), z.end()) + 1;
        s.K_nonempty.push_back(k);
        s.K_total.push_back(k);
        s.kernel_ids.emplace_back(static_cast<std::size_t>(k), 0);
        s.log_score.push_back(0.0);
    }
    return s;
}

Eigen::MatrixXd line_distances(const std::vector<double>& pts) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) d(i, j) = std::abs(pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)]);
    return d;
}

} // namespace

TEST(Similarity, IdenticalDrawsGiveBlockMatrix) {
    const auto s = from_labels({{0, 0, 1, 1}, {1, 1, 0, 0}, {0, 0, 1, 1}});
    Eigen::MatrixXd expect(4, 4);
    expect << 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1;
    EXPECT_EQ(posterior_similarity(s), expect);
}

TEST(Similarity, HalfOfDrawsAgree) {
    const auto s = from_labels({{0, 0, 1}, {0, 1, 1}});
    const Eigen::MatrixXd sim = posterior_similarity(s);
    EXPECT_EQ(sim(0, 1), 0.5);
    EXPECT_EQ(sim(1, 2), 0.5);
    EXPECT_EQ(sim(0, 2), 0.0);
}

TEST(Similarity, PropertiesOnRandomDraws) {
    Philox rng(1);
    std::vector<std::vector<int>> draws;
    for (int d = 0; d < 30; ++d) {
        std::vector<int> z(8);
        for (auto& v : z) v = static_cast<int>(rng.index(3));
        draws.push_back(z);
    }
    const Eigen::MatrixXd sim = posterior_similarity(from_labels(draws));
    EXPECT_EQ(sim, sim.transpose());
    EXPECT_EQ(sim.diagonal(), Eigen::VectorXd::Ones(8));
    EXPECT_GE(sim.minCoeff(), 0.0);
    EXPECT_LE(sim.maxCoeff(), 1.0);
    // permuting the labels inside any draw leaves the matrix unchanged
    auto relabelled = draws;
    for (auto& z : relabelled)
        for (auto& v : z) v = (v + 1) % 3;
    EXPECT_EQ(posterior_similarity(from_labels(relabelled)), sim);
}

TEST(AverageLinkage, HandTracedMergeOrder) {
    const auto merges = average_linkage(line_distances({0, 1, 3, 7, 8}));
    ASSERT_EQ(merges.size(), 4u);
    const std::vector<std::tuple<int, int, double>> expect{{0, 1, 1.0}, {3, 4, 1.0}, {0, 2, 2.5}, {0, 3, 37.0 / 6.0}};
    for (std::size_t s = 0; s < 4; ++s) {
        EXPECT_EQ(merges[s].a, std::get<0>(expect[s]));
        EXPECT_EQ(merges[s].b, std::get<1>(expect[s]));
        EXPECT_NEAR(merges[s].height, std::get<2>(expect[s]), 1e-12);
    }
    EXPECT_EQ(cut_tree(merges, 5, 2), (std::vector<int>{0, 0, 0, 1, 1}));
    EXPECT_EQ(cut_tree(merges, 5, 3), (std::vector<int>{0, 0, 1, 2, 2}));
    EXPECT_EQ(cut_tree(merges, 5, 5), (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Consensus, RecoversPlantedBlocks) {
    Philox rng(2);
    std::vector<std::vector<int>> draws;
    for (int d = 0; d < 50; ++d) {
        std::vector<int> z{0, 0, 0, 1, 1, 1, 2, 2};
        // occasional noise on one node
        if (rng.uniform() < 0.2) z[static_cast<std::size_t>(rng.index(8))] = static_cast<int>(rng.index(3));
        draws.push_back(z);
    }
    const auto s = from_labels(draws);
    const auto r = consensus_clusters(posterior_similarity(s), 3);
    EXPECT_EQ(r.labels, (std::vector<int>{0, 0, 0, 1, 1, 1, 2, 2}));
    EXPECT_EQ(r.K_hat, 3);
    EXPECT_THROW(consensus_clusters(posterior_similarity(s), 9), std::invalid_argument);
}

TEST(KPosterior, HistogramAndMode) {
    const auto s = from_labels({{0, 0, 1}, {0, 1, 2}, {0, 0, 1}, {0, 0, 0}});
    const auto h = k_posterior(s);
    ASSERT_EQ(h.size(), 4u);
    EXPECT_EQ(h[1], 0.25);
    EXPECT_EQ(h[2], 0.5);
    EXPECT_EQ(h[3], 0.25);
    EXPECT_EQ(k_posterior_mode(s), 2);
    const auto r = consensus_clusters(posterior_similarity(s), s);
    EXPECT_EQ(r.K_hat, 2);
}

TEST(Ari, ClosedFormCases) {
    EXPECT_DOUBLE_EQ(ari(std::vector<int>{0, 0, 1, 1}, std::vector<int>{5, 5, 2, 2}), 1.0);
    EXPECT_DOUBLE_EQ(ari(std::vector<int>{0, 1, 2, 3}, std::vector<int>{0, 0, 0, 0}), 0.0);
    EXPECT_THROW(ari(std::vector<int>{0}, std::vector<int>{0, 1}), std::invalid_argument);
}

TEST(Ari, MatchesPairCountingOracleAndIsSymmetric) {
    Philox rng(3);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 5 + rng.index(40);
        std::vector<int> a(n), b(n);
        for (auto& v : a) v = static_cast<int>(rng.index(4));
        for (auto& v : b) v = static_cast<int>(rng.index(3));
        EXPECT_NEAR(ari(a, b), oracle::ari_pairs(a, b), 1e-12);
        EXPECT_NEAR(ari(a, b), ari(b, a), 1e-12);
        EXPECT_LE(ari(a, b), 1.0 + 1e-12);
    }
}

TEST(Procrustes, RecoversExactRotation) {
    Philox rng(4);
    for (int d : {1, 2, 3, 5}) {
        Eigen::MatrixXd x(40, d);
        for (auto& v : x.reshaped()) v = rng.normal();
        const Eigen::MatrixXd q = oracle::random_orthogonal(d, rng);
        const auto r = procrustes_align(x * q, x);
        EXPECT_LT(r.residual, 1e-10);
        EXPECT_LT((r.rotation * r.rotation.transpose() - Eigen::MatrixXd::Identity(d, d)).norm(), 1e-12);
    }
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 3);
    EXPECT_LT((procrustes_align(x, x).rotation - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-12);
    EXPECT_THROW(procrustes_align(x, x.leftCols(2)), std::invalid_argument);
}

TEST(Procrustes, TwoDimensionalGridSearch) {
    Philox rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::MatrixXd a(30, 2), b(30, 2);
        for (auto& v : a.reshaped()) v = rng.normal();
        for (auto& v : b.reshaped()) v = rng.normal();
        double best = std::numeric_limits<double>::infinity();
        for (int step = 0; step < 20000; ++step) {
            const double t = 2 * std::numbers::pi * step / 20000;
            for (double flip : {1.0, -1.0}) {
                Eigen::Matrix2d q;
                q << std::cos(t), -flip * std::sin(t), std::sin(t), flip * std::cos(t);
                best = std::min(best, (a * q - b).norm());
            }
        }
        const auto r = procrustes_align(a, b);
        EXPECT_LE(r.residual, best + 1e-12);
        EXPECT_NEAR(r.residual, best, 1e-4);
        EXPECT_LE(r.residual, (a - b).norm() + 1e-12);
    }
}

namespace {

ModelState curve_state(const Eigen::MatrixXd& x, KernelAssignment ka) {
    ModelState s(x, Hyperparams{}, std::make_shared<const KernelMenu>(KernelMenu::single(std::move(ka))));
    return s;
}

} // namespace

TEST(CurveFits, RecoverNoiseFreeCurves) {
    const int n = 40;
    Eigen::VectorXd theta(n);
    Eigen::MatrixXd x(n, 3);
    for (int i = 0; i < n; ++i) {
        theta(i) = 0.1 + 0.8 * i / (n - 1);
        x(i, 0) = theta(i);
        x(i, 1) = 0.4;
        x(i, 2) = 0.2 + 0.5 * theta(i) - 0.3 * theta(i) * theta(i);
    }
    const KernelAssignment ka{KernelSpec::fixed_identity(),
                              KernelSpec::with_delta(BasisFamily::constant(), Eigen::MatrixXd::Constant(1, 1, 1e8)),
                              KernelSpec::with_delta(BasisFamily::polynomial(2), 1e8 * Eigen::MatrixXd::Identity(3, 3))};
    ModelState s = curve_state(x, ka);
    s.initialise(std::vector<int>(n, 0), theta, {0});
    const auto fits = curve_fits(s, std::vector<int>(n, 0), theta, 50);
    ASSERT_EQ(fits.size(), 3u);
    for (const auto& f : fits) {
        ASSERT_EQ(f.grid.size(), 50u);
        EXPECT_DOUBLE_EQ(f.grid.front(), 0.1);
        EXPECT_DOUBLE_EQ(f.grid.back(), 0.9);
        for (std::size_t g = 0; g < f.grid.size(); ++g) {
            const double t = f.grid[g];
            const double expect = f.dimension == 0 ? t : f.dimension == 1 ? 0.4 : 0.2 + 0.5 * t - 0.3 * t * t;
            EXPECT_NEAR(f.values[g], expect, 1e-4) << "dimension " << f.dimension;
        }
    }
    EXPECT_THROW(curve_fits(s, std::vector<int>(n - 1, 0), theta), std::invalid_argument);
}

TEST(CurveFits, PicksHigherMarginalKernel) {
    const int n = 60;
    Philox rng(6);
    Eigen::VectorXd theta(n);
    Eigen::MatrixXd x(n, 1);
    for (int i = 0; i < n; ++i) {
        theta(i) = rng.uniform();
        x(i, 0) = 1.5 * theta(i) * theta(i) + 0.01 * rng.normal();
    }
    KernelMenu menu;
    menu.add({KernelSpec::with_delta(BasisFamily::constant(), Eigen::MatrixXd::Constant(1, 1, 1.0))}, 1);
    menu.add({KernelSpec::with_delta(BasisFamily::polynomial(2), Eigen::MatrixXd::Identity(3, 3))}, 1);
    menu.normalise();
    ModelState s(x, Hyperparams{}, std::make_shared<const KernelMenu>(menu));
    s.initialise(std::vector<int>(n, 0), theta, {0});
    const auto fits = curve_fits(s, std::vector<int>(n, 0), theta);
    ASSERT_EQ(fits.size(), 1u);
    EXPECT_EQ(fits[0].kernel_id, 1);
}
