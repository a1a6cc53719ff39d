#include "lsbm/lsbm.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace lsbm;

namespace {

KernelSpec constant_c(double c) { return KernelSpec::with_delta(BasisFamily::constant(), Eigen::MatrixXd::Constant(1, 1, c)); }

std::shared_ptr<const KernelMenu> shared(KernelMenu m) {
    m.normalise();
    return std::make_shared<const KernelMenu>(std::move(m));
}

KernelMenu two_kernel_menu() {
    KernelMenu m;
    m.add({constant_c(1.0)}, 1.0);
    m.add({KernelSpec::with_delta(BasisFamily::homogeneous_linear(), Eigen::MatrixXd::Constant(1, 1, 2.0))}, 2.0);
    m.normalise();
    return m;
}

struct Toy {
    Eigen::MatrixXd x;
    Eigen::VectorXd theta;
};

Toy toy6() {
    Toy t{Eigen::MatrixXd(6, 1), Eigen::VectorXd(6)};
    t.x << 0.1, 0.15, 0.5, 0.55, 0.9, 0.2;
    t.theta << 0.2, 0.3, 0.1, 0.4, 0.6, 0.5;
    return t;
}

Hyperparams toy_hyper() {
    Hyperparams h;
    h.b0 = 0.01;
    h.omega = 0.3;
    return h;
}

McmcConfig k_only(long sweeps, std::uint64_t seed) {
    McmcConfig cfg;
    cfg.n_samples = sweeps;
    cfg.burn_in = 1000;
    cfg.seed = seed;
    cfg.p_theta_scan = 0.0;
    return cfg;
}

} // namespace

TEST(KMeans, SeparatedBlobsRecovered) {
    Philox rng(1);
    Eigen::MatrixXd x(90, 2);
    std::vector<int> truth;
    for (int i = 0; i < 90; ++i) {
        const int k = i % 3;
        truth.push_back(k);
        x(i, 0) = 5.0 * k + 0.1 * rng.normal();
        x(i, 1) = (k == 1 ? 4.0 : 0.0) + 0.1 * rng.normal();
    }
    const auto r = kmeans(x, 3, rng, 10);
    EXPECT_DOUBLE_EQ(ari(r.labels, truth), 1.0);
}

TEST(Init, SquareRootTheta) {
    Eigen::MatrixXd x(2, 1);
    x << 0.25, 1.0;
    InitOptions opt;
    opt.theta_mode = ThetaInit::sqrt_abs_first_coordinate;
    opt.labels = std::vector<int>{0, 0};
    const ModelState s = init_state(x, 1, Hyperparams{}, KernelMenu::single({constant_c(1)}), opt);
    EXPECT_DOUBLE_EQ(s.theta(0), 0.5);
    EXPECT_DOUBLE_EQ(s.theta(1), 1.0);
}

TEST(Init, UserThetaAndValidation) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 1);
    InitOptions opt;
    opt.theta_mode = ThetaInit::user;
    EXPECT_THROW(init_state(x, 1, Hyperparams{}, KernelMenu::single({constant_c(1)}), opt), std::invalid_argument);
    opt.theta = Eigen::Vector3d(0.1, 0.2, 0.3);
    const ModelState s = init_state(x, 1, Hyperparams{}, KernelMenu::single({constant_c(1)}), opt);
    EXPECT_EQ(s.thetas(), *opt.theta);
    EXPECT_THROW(init_state(x, 4, Hyperparams{}, KernelMenu::single({constant_c(1)}), opt), std::invalid_argument);
    EXPECT_THROW(parse_theta_init("median"), std::invalid_argument);
    EXPECT_EQ(parse_theta_init(to_string(ThetaInit::sqrt_abs_first_coordinate)), ThetaInit::sqrt_abs_first_coordinate);
}

TEST(Init, PermutationSearchMatchesKernelsToCommunities) {
    // community A is constant in θ, community B is a steep line through the origin
    Philox rng(2);
    const int n = 60;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd theta(n);
    std::vector<int> truth;
    for (int i = 0; i < n; ++i) {
        theta(i) = 0.2 + 0.8 * rng.uniform();
        const int k = i < n / 2 ? 0 : 1;
        truth.push_back(k);
        x(i, 0) = (k == 0 ? 0.5 : 3.0 * theta(i)) + 0.01 * rng.normal();
    }
    KernelMenu menu;
    menu.add({constant_c(1.0)}, 1.0);
    menu.add({KernelSpec::with_delta(BasisFamily::homogeneous_linear(), Eigen::MatrixXd::Constant(1, 1, 10.0))}, 1.0);
    InitOptions opt;
    opt.theta_mode = ThetaInit::user;
    opt.theta = theta;
    std::vector<int> swapped = truth;
    for (auto& v : swapped) v = 1 - v;
    opt.labels = swapped;
    opt.kernel_ids = {0, 1};
    const ModelState s = init_state(x, 2, Hyperparams{}, menu, opt);
    EXPECT_EQ(s.labels(), truth);
    opt.permutation_search = false;
    EXPECT_EQ(init_state(x, 2, Hyperparams{}, menu, opt).labels(), swapped);
}

TEST(GibbsZ, SingleCommunityIsNoOp) {
    const Toy t = toy6();
    ModelState s(t.x, Hyperparams{}, shared(KernelMenu::single({constant_c(1)})));
    s.initialise(std::vector<int>(6, 0), t.theta, {0});
    Philox rng(3);
    for (int i = 0; i < 6; ++i) EXPECT_EQ(gibbs_update_z(s, i, rng), 0);
}

TEST(GibbsZ, SymmetricCaseIsFair) {
    Eigen::MatrixXd x(3, 1);
    x << 0.3, 0.3, 0.3;
    ModelState s(x, Hyperparams{}, shared(KernelMenu::single({constant_c(1)})));
    s.initialise({0, 1, 0}, Eigen::Vector3d(0.1, 0.1, 0.1), {0, 0});
    // node 2 sees one identical node in each community
    const auto p = z_conditional(s, 2);
    EXPECT_NEAR(p[0], 0.5, 1e-12);
    EXPECT_NEAR(p[1], 0.5, 1e-12);
}

TEST(GibbsZ, ConditionalMatchesEnumeratedMarginals) {
    const Toy t = toy6();
    const Hyperparams h = toy_hyper();
    const KernelMenu menu = KernelMenu::single({constant_c(1)});
    ModelState s(t.x.topRows(5), h, shared(menu));
    const std::vector<int> z{0, 0, 1, 1, 2};
    s.initialise(z, t.theta.head(5), {0, 0, 0});
    const int i = 1, K = 3;
    std::vector<double> logs;
    for (int k = 0; k < K; ++k) {
        std::vector<int> zk = z;
        zk[i] = k;
        double ml = 0;
        for (int c = 0; c < K; ++c) {
            std::vector<Eigen::Index> idx;
            for (int l = 0; l < 5; ++l)
                if (zk[static_cast<std::size_t>(l)] == c) idx.push_back(l);
            Eigen::MatrixXd xc(static_cast<Eigen::Index>(idx.size()), 1);
            Eigen::VectorXd tc(static_cast<Eigen::Index>(idx.size()));
            for (std::size_t r = 0; r < idx.size(); ++r) {
                xc(static_cast<Eigen::Index>(r), 0) = t.x(idx[r], 0);
                tc(static_cast<Eigen::Index>(r)) = t.theta(idx[r]);
            }
            ml += oracle::community_marginal(menu.options[0], xc, tc, h.a0, h.b0);
        }
        logs.push_back(log_prior_z(zk, K, h.nu) + ml);
    }
    const double norm = log_sum_exp(logs);
    const auto p = z_conditional(s, i);
    for (int k = 0; k < K; ++k) EXPECT_NEAR(p[static_cast<std::size_t>(k)], std::exp(logs[static_cast<std::size_t>(k)] - norm), 1e-10);

    Philox rng(4);
    const int draws = 20000;
    std::vector<double> freq(K, 0.0);
    for (int r = 0; r < draws; ++r) {
        freq[static_cast<std::size_t>(gibbs_update_z(s, i, rng))] += 1.0 / draws;
        s.move(i, z[i]);
    }
    for (int k = 0; k < K; ++k) {
        const double pk = p[static_cast<std::size_t>(k)];
        EXPECT_LE(std::abs(freq[static_cast<std::size_t>(k)] - pk), 3 * std::sqrt(pk * (1 - pk) / draws) + 1e-9);
    }
}

TEST(ThetaMove, RecoversPriorWhenLikelihoodIgnoresTheta) {
    const Toy t = toy6();
    Hyperparams h;
    h.mu_theta = 0.3;
    h.sigma2_theta = 0.04;
    h.sigma2_star = 0.04;
    ModelState s(t.x, h, shared(KernelMenu::single({constant_c(1)})));
    s.initialise(std::vector<int>(6, 0), t.theta, {0});
    Philox rng(5);
    std::vector<double> draws;
    long accepted = 0;
    const int sweeps = 100000;
    for (int r = 0; r < sweeps; ++r) {
        accepted += mh_update_theta(s, 2, rng);
        draws.push_back(s.theta(2));
    }
    double mean = 0, var = 0;
    for (double v : draws) mean += v / sweeps;
    for (double v : draws) var += (v - mean) * (v - mean) / (sweeps - 1);
    EXPECT_LE(std::abs(mean - 0.3), 3 * oracle::batch_se(draws));
    EXPECT_NEAR(var, 0.04, 0.004);
    const double rate = static_cast<double>(accepted) / sweeps;
    EXPECT_GT(rate, 0.3);
    EXPECT_LT(rate, 0.9);
}

TEST(SplitMerge, AcceptedMovesKeepStateConsistent) {
    const Toy t = toy6();
    ModelState s(t.x, toy_hyper(), shared(two_kernel_menu()));
    s.initialise(std::vector<int>(6, 0), t.theta, {0});
    Philox rng(6);
    int splits = 0, merges = 0;
    for (int r = 0; r < 3000; ++r) {
        const int before = s.K();
        const auto res = split_merge_move(s, rng);
        if (res.accepted) {
            (res.is_split ? splits : merges)++;
            EXPECT_EQ(s.K(), before + (res.is_split ? 1 : -1));
            if (res.is_split) EXPECT_NE(s.z(res.i), s.z(res.j));
            else EXPECT_EQ(s.z(res.i), s.z(res.j));
        }
        ModelState fresh(t.x, toy_hyper(), s.menu_ptr());
        fresh.initialise(s.labels(), s.thetas(), s.kernel_ids());
        ASSERT_NEAR(marginal_loglik(s), marginal_loglik(fresh), 1e-8 * (1 + std::abs(marginal_loglik(fresh))));
    }
    EXPECT_GT(splits, 0);
    EXPECT_GT(merges, 0);
}

TEST(SplitMerge, MergeProposalReplaysSplitProbability) {
    const Toy t = toy6();
    ModelState s(t.x, toy_hyper(), shared(KernelMenu::single({constant_c(1)})));
    s.initialise({0, 0, 1, 1, 0, 1}, t.theta, {0, 0});
    // with a single kernel the replayed probability is the product of sequential choices
    const std::vector<Eigen::Index> order{1, 3, 4, 5};
    const std::vector<int> side{0, 1, 0, 1};
    const double lq = split_log_proposal(s, 0, 2, 0, 0, order, side);
    Community ci = s.make_community(0), cj = s.make_community(0);
    ci.add(s.x(0), s.theta(0));
    cj.add(s.x(2), s.theta(2));
    double expect = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        const double li = ci.predictive(s.x(order[r]), s.theta(order[r]));
        const double lj = cj.predictive(s.x(order[r]), s.theta(order[r]));
        const double pick = side[r] == 0 ? li : lj;
        expect += pick - std::log(std::exp(li) + std::exp(lj));
        (side[r] == 0 ? ci : cj).add(s.x(order[r]), s.theta(order[r]));
    }
    EXPECT_NEAR(lq, expect, 1e-10);
}

TEST(SplitMerge, PartitionPosteriorMatchesEnumeration) {
    const Toy t = toy6();
    const Hyperparams h = toy_hyper();
    const KernelMenu menu = KernelMenu::single({constant_c(1)});
    const auto exact = oracle::partition_posterior(t.x, t.theta, h, menu);
    ModelState s(t.x, h, shared(menu));
    s.initialise(std::vector<int>(6, 0), t.theta, {0});
    McmcConfig cfg = k_only(150000, 7);
    cfg.p_z_scan = 0.0; // split/merge and empty moves only
    const auto samples = run(s, cfg);
    EXPECT_LT(oracle::total_variation(exact, oracle::partition_frequencies(samples)), 0.02);
}

TEST(SplitMerge, KernelMenuPartitionPosteriorMatchesEnumeration) {
    const Toy t = toy6();
    const Hyperparams h = toy_hyper();
    const KernelMenu menu = two_kernel_menu();
    const auto exact = oracle::partition_posterior(t.x, t.theta, h, menu);
    ModelState s(t.x, h, shared(menu));
    s.initialise(std::vector<int>(6, 0), t.theta, {0});
    const auto samples = run(s, k_only(150000, 8));
    EXPECT_LT(oracle::total_variation(exact, oracle::partition_frequencies(samples)), 0.02);
}

TEST(EmptyMove, ProposalCorrection) {
    const Toy t = toy6();
    ModelState s(t.x, toy_hyper(), shared(KernelMenu::single({constant_c(1)})));
    s.initialise({0, 0, 0, 1, 1, 1}, t.theta, {0, 0});
    Philox rng(9);
    auto r = empty_community_move(s, rng);
    EXPECT_TRUE(r.add);
    EXPECT_NEAR(r.log_q_ratio, std::log(0.5), 1e-15);
    if (!r.accepted) s.add_community(0);
    // last label now empty, previous one occupied: removal carries q∅ = 2
    for (int tries = 0; tries < 100; ++tries) {
        ModelState copy = s;
        r = empty_community_move(copy, rng);
        if (!r.add) {
            EXPECT_NEAR(r.log_q_ratio, std::log(2.0), 1e-15);
            break;
        }
    }
    s.add_community(0);
    for (int tries = 0; tries < 100; ++tries) {
        ModelState copy = s;
        r = empty_community_move(copy, rng);
        EXPECT_EQ(r.log_q_ratio, 0.0);
    }
}

TEST(EmptyMove, KMatchesConditionalOnFixedAllocation) {
    const Toy t = toy6();
    const Hyperparams h = toy_hyper();
    const std::vector<int> z{0, 0, 1, 1, 1, 0};
    ModelState s(t.x, h, shared(KernelMenu::single({constant_c(1)})));
    s.initialise(z, t.theta, {0, 0});
    McmcConfig cfg;
    cfg.n_samples = 200000;
    cfg.burn_in = 1000;
    cfg.seed = 10;
    cfg.p_z_scan = cfg.p_theta_scan = cfg.p_split_merge = 0.0;
    const auto samples = run(s, cfg);
    std::vector<double> logs;
    for (int K = 2; K < 40; ++K) logs.push_back(log_prior_K(K, h.omega) + log_prior_z(z, K, h.nu));
    const double norm = log_sum_exp(logs);
    for (int K = 2; K < 22; ++K) {
        std::vector<double> ind;
        for (int v : samples.K_total) ind.push_back(v == K ? 1.0 : 0.0);
        double freq = 0;
        for (double v : ind) freq += v / static_cast<double>(ind.size());
        const double p = std::exp(logs[static_cast<std::size_t>(K - 2)] - norm);
        EXPECT_LE(std::abs(freq - p), 3 * oracle::batch_se(ind) + 1e-3) << "K=" << K;
    }
}

TEST(KernelMove, SingleOptionIsNoOp) {
    const Toy t = toy6();
    ModelState s(t.x, Hyperparams{}, shared(KernelMenu::single({constant_c(1)})));
    s.initialise(std::vector<int>(6, 0), t.theta, {0});
    Philox rng(11);
    EXPECT_EQ(kernel_resample_move(s, 0, rng), 0);
}

TEST(KernelMove, ConditionalSumsToOneAndEmptyFollowsPrior) {
    const Toy t = toy6();
    ModelState s(t.x, Hyperparams{}, shared(two_kernel_menu()));
    s.initialise({0, 0, 0, 0, 0, 0}, t.theta, {0, 1});
    const auto p = kernel_conditional(s, 0);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
    const auto q = kernel_conditional(s, 1);
    EXPECT_NEAR(q[0], 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(q[1], 2.0 / 3.0, 1e-12);
}

TEST(KernelMove, SelectsGeneratingKernelForLargeCommunity) {
    Philox rng(12);
    const int n = 200;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd theta(n);
    for (int i = 0; i < n; ++i) {
        theta(i) = rng.uniform();
        x(i, 0) = theta(i) - 4 * theta(i) * theta(i) + 0.05 * rng.normal();
    }
    KernelMenu menu;
    menu.add({KernelSpec::zellner(BasisFamily::constant())}, 1);
    menu.add({KernelSpec::zellner(BasisFamily::affine_linear())}, 1);
    menu.add({KernelSpec::zellner(BasisFamily::polynomial(2))}, 1);
    menu.normalise();
    resolve_zellner(menu, theta);
    ModelState s(x, Hyperparams{}, shared(menu));
    s.initialise(std::vector<int>(n, 0), theta, {0});
    EXPECT_GT(kernel_conditional(s, 0)[2], 0.95);
}

TEST(Runner, SeedDeterminismAndBookkeeping) {
    const Toy t = toy6();
    ModelState a(t.x, toy_hyper(), shared(two_kernel_menu()));
    a.initialise({0, 0, 0, 1, 1, 1}, t.theta, {0, 1});
    ModelState b = a;
    McmcConfig cfg;
    cfg.n_samples = 500;
    cfg.burn_in = 100;
    cfg.thinning = 3;
    cfg.seed = 42;
    const auto sa = run(a, cfg), sb = run(b, cfg);
    EXPECT_EQ(sa.size(), static_cast<std::size_t>(cfg.stored_count()));
    EXPECT_EQ(sa.size(), 133u);
    EXPECT_EQ(sa.z, sb.z);
    EXPECT_EQ(sa.theta, sb.theta);
    for (double v : sa.log_score) EXPECT_TRUE(std::isfinite(v));
    for (std::size_t d = 0; d < sa.size(); ++d) {
        EXPECT_LE(sa.K_nonempty[d], sa.K_total[d]);
        EXPECT_EQ(static_cast<int>(sa.kernel_ids[d].size()), sa.K_nonempty[d]);
        for (auto v : sa.labels(d)) EXPECT_LT(v, sa.K_nonempty[d]);
    }
    for (const auto& m : {sa.acceptance.theta, sa.acceptance.split, sa.acceptance.merge, sa.acceptance.empty_add}) {
        EXPECT_GE(m.rate(), 0.0);
        EXPECT_LE(m.rate(), 1.0);
    }
    ModelState c(t.x, toy_hyper(), shared(two_kernel_menu()));
    c.initialise({0, 0, 0, 1, 1, 1}, t.theta, {0, 1});
    cfg.seed = 43;
    EXPECT_NE(run(c, cfg).theta, sa.theta);
}

TEST(Runner, FixedKNeverChangesK) {
    const Toy t = toy6();
    ModelState s(t.x, toy_hyper(), shared(KernelMenu::single({constant_c(1)})));
    s.initialise({0, 0, 0, 1, 1, 1}, t.theta, {0, 0});
    McmcConfig cfg;
    cfg.n_samples = 300;
    cfg.burn_in = 0;
    cfg.K_known = 2;
    const auto out = run(s, cfg);
    for (int k : out.K_total) EXPECT_EQ(k, 2);
    cfg.K_known = 3;
    EXPECT_THROW(run(s, cfg), std::invalid_argument);
}

TEST(Runner, ChainsConcatenate) {
    const Toy t = toy6();
    ModelState s(t.x, toy_hyper(), shared(KernelMenu::single({constant_c(1)})));
    s.initialise({0, 0, 0, 1, 1, 1}, t.theta, {0, 0});
    McmcConfig cfg;
    cfg.n_samples = 200;
    cfg.burn_in = 50;
    cfg.seed = 5;
    const auto merged = run_chains(s, cfg, 3);
    EXPECT_EQ(merged.size(), 450u);
    ModelState first = s;
    const auto single = run(first, cfg);
    EXPECT_TRUE(std::equal(single.z.begin(), single.z.end(), merged.z.begin()));
    EXPECT_THROW(run_chains(s, cfg, 0), std::invalid_argument);
}

TEST(Config, Validation) {
    McmcConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.burn_in = cfg.n_samples;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = McmcConfig{};
    cfg.p_empty = 1.5;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = McmcConfig{};
    cfg.K_known = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
