// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is the number of failed criteria.

#include "lsbm/lsbm.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace lsbm;

namespace {

struct Outcome {
    bool pass = false;
    std::string summary;
    std::vector<std::string> details;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.summary = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.summary.c_str(), secs);
    for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

template <class... T>
std::string cat(const T&... parts) {
    std::ostringstream s;
    (s << ... << parts);
    return s.str();
}

Outcome table_row(const std::string& name, double threshold, bool exact) {
    Outcome o;
    double total = 0, lo = 2, slowest = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const ExperimentResult r = run_experiment(table1_options(name, seed));
        total += r.ari;
        lo = std::min(lo, r.ari);
        slowest = std::max(slowest, r.seconds);
        o.details.push_back(cat("seed ", seed, ": ARI ", fmt("%.4f", r.ari), ", ", fmt("%.1f", r.seconds), " s"));
    }
    const double mean = total / 5;
    o.pass = exact ? lo == 1.0 : mean >= threshold;
    o.summary = exact ? cat("min ARI ", fmt("%.4f", lo), " (need 1 on all 5 seeds)")
                      : cat("mean ARI ", fmt("%.4f", mean), " (need >= ", threshold, ")");
    o.summary += cat(", slowest run ", fmt("%.1f", slowest), " s");
    return o;
}

Outcome hardy_weinberg() {
    Outcome o;
    bool ok = true;
    for (const auto& [kernels, label, threshold] :
         {std::tuple{HwKernels::quadratic, "quadratic", 0.70}, std::tuple{HwKernels::cubic_identity, "cubic+identity", 0.58}}) {
        const ExperimentResult fixed = run_experiment(hardy_weinberg_options(kernels, 1, false));
        const ExperimentResult free = run_experiment(hardy_weinberg_options(kernels, 1, true));
        const bool ari_ok = fixed.ari >= threshold;
        const bool k_ok = free.K_mode == 2;
        ok = ok && ari_ok && k_ok;
        std::string hist;
        for (std::size_t k = 1; k < free.k_posterior.size(); ++k) {
            if (free.k_posterior[k] > 0) hist += cat(" K=", k, ":", fmt("%.3f", free.k_posterior[k]));
        }
        o.details.push_back(cat(label, ": ARI ", fmt("%.4f", fixed.ari), " (need >= ", threshold, ") ", ari_ok ? "ok" : "MISS", "; K-unknown mode ",
                                free.K_mode, " (need 2) ", k_ok ? "ok" : "MISS", ", ARI ", fmt("%.4f", free.ari), "; runs ",
                                fmt("%.1f", fixed.seconds), " s and ", fmt("%.1f", free.seconds), " s"));
        o.details.push_back(cat("  K posterior:", hist));
    }
    o.pass = ok;
    o.summary = ok ? "all thresholds met" : "thresholds missed, see details";
    return o;
}

Eigen::MatrixXd random_spd(int q, Philox& rng) {
    Eigen::MatrixXd g(q, q);
    for (int r = 0; r < q; ++r)
        for (int c = 0; c < q; ++c) g(r, c) = rng.normal();
    return g * g.transpose() / q + 0.2 * Eigen::MatrixXd::Identity(q, q);
}

Outcome conjugacy() {
    Outcome o;
    Philox rng(2024);
    std::vector<std::pair<std::string, std::function<KernelSpec()>>> families{
        {"fixed_identity", [] { return KernelSpec::fixed_identity(); }},
        {"constant", [&] { return KernelSpec::with_delta(BasisFamily::constant(), random_spd(1, rng)); }},
        {"homogeneous_linear", [&] { return KernelSpec::with_delta(BasisFamily::homogeneous_linear(), random_spd(1, rng)); }},
        {"affine_linear", [&] { return KernelSpec::with_delta(BasisFamily::affine_linear(), random_spd(2, rng)); }},
        {"polynomial(2)", [&] { return KernelSpec::with_delta(BasisFamily::polynomial(2), random_spd(3, rng)); }},
        {"polynomial(3)", [&] { return KernelSpec::with_delta(BasisFamily::polynomial(3), random_spd(4, rng)); }},
        {"homogeneous_polynomial(2)", [&] { return KernelSpec::with_delta(BasisFamily::homogeneous_polynomial(2), random_spd(2, rng)); }},
        {"truncated_power_spline", [&] { return KernelSpec::with_delta(BasisFamily::spline({0.25, 0.5, 0.75}), random_spd(6, rng)); }},
    };
    double worst_ml = 0, worst_loo = 0;
    for (const auto& [name, make] : families) {
        double fam_ml = 0, fam_loo = 0;
        for (int rep = 0; rep < 50; ++rep) {
            const KernelSpec spec = make();
            const int n = 1 + static_cast<int>(rng.index(10));
            Eigen::MatrixXd x(n, 1);
            Eigen::VectorXd theta(n);
            for (int i = 0; i < n; ++i) {
                theta(i) = rng.uniform();
                x(i, 0) = 0.5 * theta(i) + 0.1 * rng.normal();
            }
            Hyperparams h;
            h.a0 = 0.5 + rng.uniform();
            h.b0 = 0.001 + 0.1 * rng.uniform();
            const KernelAssignment ka{spec};
            Community com(&ka, h.a0, h.b0);
            double sequential = 0;
            for (int i = 0; i < n; ++i) {
                sequential += com.predictive(x.data() + i, theta(i));
                com.add(x.data() + i, theta(i));
            }
            fam_ml = std::max(fam_ml, std::abs(com.log_marginal() - sequential) / std::max(1.0, std::abs(sequential)));
            if (n >= 2) {
                auto menu = std::make_shared<const KernelMenu>(KernelMenu::single(ka));
                ModelState full(x, h, menu);
                full.initialise(std::vector<int>(static_cast<std::size_t>(n), 0), theta, {0});
                const int i = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
                std::vector<int> z(static_cast<std::size_t>(n), 0);
                z[static_cast<std::size_t>(i)] = 1;
                ModelState reduced(x, h, menu);
                reduced.initialise(z, theta, {0, 0});
                const double scratch = predictive_logpdf(reduced, i, 0, false);
                fam_loo = std::max(fam_loo, std::abs(predictive_logpdf(full, i, 0, true) - scratch) / std::max(1.0, std::abs(scratch)));
            }
        }
        o.details.push_back(cat(name, ": marginal vs sequential ", fmt("%.2e", fam_ml), ", leave-one-out vs reduced ", fmt("%.2e", fam_loo)));
        worst_ml = std::max(worst_ml, fam_ml);
        worst_loo = std::max(worst_loo, fam_loo);
    }
    o.pass = worst_ml <= 1e-8 && worst_loo <= 1e-10;
    o.summary = cat("worst relative error ", fmt("%.2e", worst_ml), " (need <= 1e-8), leave-one-out ", fmt("%.2e", worst_loo),
                    " (need <= 1e-10)");
    return o;
}

Outcome sampler_exactness() {
    Outcome o;
    bool ok = true;
    Hyperparams h;
    h.b0 = 0.01;
    h.omega = 0.3;
    const KernelMenu menu = KernelMenu::single({KernelSpec::with_delta(BasisFamily::constant(), Eigen::MatrixXd::Constant(1, 1, 1.0))});
    auto shared = std::make_shared<const KernelMenu>(menu);
    Eigen::VectorXd xs(7), ts(7);
    xs << 0.1, 0.15, 0.5, 0.55, 0.9, 0.2, 0.45;
    ts << 0.2, 0.3, 0.1, 0.4, 0.6, 0.5, 0.35;

    // fixed K: labelled z posterior against enumeration
    for (const auto& [n, K] : {std::pair{7, 2}, std::pair{5, 3}}) {
        const Eigen::MatrixXd x = xs.head(n);
        const Eigen::VectorXd theta = ts.head(n);
        std::map<std::vector<int>, double> exact;
        std::vector<double> logs;
        const auto all = oracle::all_labellings(n, K);
        for (const auto& z : all) {
            double ml = 0;
            for (int k = 0; k < K; ++k) {
                std::vector<Eigen::Index> idx;
                for (int i = 0; i < n; ++i)
                    if (z[static_cast<std::size_t>(i)] == k) idx.push_back(i);
                Eigen::MatrixXd xk(static_cast<Eigen::Index>(idx.size()), 1);
                Eigen::VectorXd tk(static_cast<Eigen::Index>(idx.size()));
                for (std::size_t r = 0; r < idx.size(); ++r) {
                    xk(static_cast<Eigen::Index>(r), 0) = x(idx[r], 0);
                    tk(static_cast<Eigen::Index>(r)) = theta(idx[r]);
                }
                ml += oracle::community_marginal(menu.options[0], xk, tk, h.a0, h.b0);
            }
            logs.push_back(log_prior_z(z, K, h.nu) + ml);
        }
        const double norm = log_sum_exp(logs);
        for (std::size_t s = 0; s < all.size(); ++s) exact[all[s]] = std::exp(logs[s] - norm);

        ModelState state(x, h, shared);
        state.initialise(std::vector<int>(static_cast<std::size_t>(n), 0), theta, std::vector<int>(static_cast<std::size_t>(K), 0));
        McmcConfig cfg;
        cfg.n_samples = 200000;
        cfg.burn_in = 1000;
        cfg.seed = 11;
        cfg.p_theta_scan = 0.0;
        cfg.K_known = K;
        const auto samples = run(state, cfg);
        // stored labels are compacted, so compare against uncompacted draws by
        // mapping each exact labelling through the same compaction
        std::map<std::vector<int>, double> exact_compact, empirical;
        for (const auto& [z, p] : exact) {
            std::vector<int> seen(static_cast<std::size_t>(K), -1);
            int next = 0;
            for (int k = 0; k < K; ++k)
                if (std::count(z.begin(), z.end(), k)) seen[static_cast<std::size_t>(k)] = next++;
            std::vector<int> c;
            for (int v : z) c.push_back(seen[static_cast<std::size_t>(v)]);
            exact_compact[c] += p;
        }
        for (std::size_t t = 0; t < samples.size(); ++t) {
            const auto lab = samples.labels(t);
            empirical[std::vector<int>(lab.begin(), lab.end())] += 1.0 / static_cast<double>(samples.size());
        }
        const double tv = oracle::total_variation(exact_compact, empirical);
        ok = ok && tv < 0.02;
        o.details.push_back(cat("fixed K=", K, ", n=", n, ": TV ", fmt("%.4f", tv), " over ", samples.size(), " draws (need < 0.02)"));
    }

    // K moves on a fixed allocation
    {
        const int n = 6;
        const std::vector<int> z{0, 0, 1, 1, 1, 0};
        std::vector<double> logs;
        for (int K = 2; K < 200; ++K) logs.push_back(log_prior_K(K, h.omega) + log_prior_z(z, K, h.nu));
        const double norm = log_sum_exp(logs);
        // bins K = 2..8 and a pooled tail K >= 9; single far-tail values are too
        // rare for a usable standard error, so the spread of independent chains
        // gives the error instead of batch means
        const int tail = 9, chains = 40;
        std::vector<double> exact(tail + 1, 0.0);
        for (std::size_t j = 0; j < logs.size(); ++j)
            exact[std::min<std::size_t>(j + 2, tail)] += std::exp(logs[j] - norm);
        std::vector<std::vector<double>> freq(chains, std::vector<double>(tail + 1, 0.0));
        double draws = 0;
        for (int c = 0; c < chains; ++c) {
            ModelState state(xs.head(n), h, shared);
            state.initialise(z, ts.head(n), {0, 0});
            McmcConfig cfg;
            cfg.n_samples = 50000;
            cfg.burn_in = 1000;
            cfg.seed = 100 + static_cast<std::uint64_t>(c);
            cfg.p_z_scan = cfg.p_theta_scan = cfg.p_split_merge = 0.0;
            const auto samples = run(state, cfg);
            for (int v : samples.K_total)
                freq[c][static_cast<std::size_t>(std::min(v, tail))] += 1.0 / static_cast<double>(samples.size());
            draws += static_cast<double>(samples.size());
        }
        double worst = 0;
        int worst_bin = 2;
        for (int K = 2; K <= tail; ++K) {
            double mean = 0, var = 0;
            for (const auto& f : freq) mean += f[K] / chains;
            for (const auto& f : freq) var += (f[K] - mean) * (f[K] - mean) / (chains - 1);
            const double p = exact[K];
            const double se = std::max(std::sqrt(var / chains), std::sqrt(p * (1 - p) / draws));
            const double dev = std::abs(mean - p) / se;
            if (dev > worst) worst = dev, worst_bin = K;
        }
        ok = ok && worst <= 3.0;
        o.details.push_back(cat("K on fixed z, ", chains, " chains, bins K = 2..8 and K >= 9: worst deviation ", fmt("%.2f", worst), " standard errors at bin ", worst_bin, " (need <= 3)"));
    }

    // informational: full K-unknown sampler against the partition posterior
    {
        const Eigen::MatrixXd x = xs.head(6);
        const auto exact = oracle::partition_posterior(x, ts.head(6), h, menu);
        ModelState state(x, h, shared);
        state.initialise(std::vector<int>(6, 0), ts.head(6), {0});
        McmcConfig cfg;
        cfg.n_samples = 200000;
        cfg.burn_in = 1000;
        cfg.seed = 13;
        cfg.p_theta_scan = 0.0;
        const double tv = oracle::total_variation(exact, oracle::partition_frequencies(run(state, cfg)));
        o.details.push_back(cat("(info) K unknown, n=6, split/merge + empty + Gibbs: partition TV ", fmt("%.4f", tv)));
    }
    o.pass = ok;
    o.summary = ok ? "enumeration matched" : "enumeration mismatch";
    return o;
}

Outcome closed_forms() {
    Outcome o;
    double worst_mass = 0;
    for (int n = 1; n <= 6; ++n) {
        for (int K = 1; K <= 3; ++K) {
            std::vector<double> logs;
            for (const auto& z : oracle::all_labellings(n, K)) logs.push_back(log_prior_z(z, K, 1.0));
            worst_mass = std::max(worst_mass, std::abs(std::exp(log_sum_exp(logs)) - 1.0));
        }
    }
    Philox rng(7);
    double worst_ase = 0;
    for (int d : {1, 2, 3, 5}) {
        Eigen::MatrixXd x(60, d);
        for (auto& v : x.reshaped()) v = rng.uniform();
        const Eigen::MatrixXd p = x * x.transpose();
        const Embedding e = ase(p, d);
        worst_ase = std::max(worst_ase, (e.positions * e.positions.transpose() - p).norm() / p.norm());
    }
    double worst_proc = 0;
    for (int d : {2, 3, 4}) {
        Eigen::MatrixXd x(50, d);
        for (auto& v : x.reshaped()) v = rng.normal();
        const Eigen::MatrixXd q = oracle::random_orthogonal(d, rng);
        worst_proc = std::max(worst_proc, procrustes_align(x * q, x).residual);
    }
    o.pass = worst_mass < 1e-10 && worst_ase < 1e-8 && worst_proc < 1e-10;
    o.summary = cat("prior mass error ", fmt("%.1e", worst_mass), ", ASE relative error ", fmt("%.1e", worst_ase),
                    " (need < 1e-8), Procrustes residual ", fmt("%.1e", worst_proc), " (need < 1e-10)");
    return o;
}

Outcome kernel_selection() {
    Outcome o;
    Philox rng(8);
    const std::vector<std::pair<std::string, std::function<double(double)>>> truths{
        {"constant", [](double) { return 0.4; }},
        {"affine_linear", [](double t) { return 0.2 + 0.6 * t; }},
        {"polynomial(2)", [](double t) { return t - 4 * t * t; }},
    };
    bool ok = true;
    for (std::size_t truth = 0; truth < truths.size(); ++truth) {
        const int n = 200;
        Eigen::MatrixXd x(n, 1);
        Eigen::VectorXd theta(n);
        for (int i = 0; i < n; ++i) {
            theta(i) = rng.uniform();
            x(i, 0) = truths[truth].second(theta(i)) + 0.05 * rng.normal();
        }
        KernelMenu menu;
        menu.add({KernelSpec::zellner(BasisFamily::constant())}, 1);
        menu.add({KernelSpec::zellner(BasisFamily::affine_linear())}, 1);
        menu.add({KernelSpec::zellner(BasisFamily::polynomial(2))}, 1);
        menu.normalise();
        resolve_zellner(menu, theta);
        ModelState s(x, Hyperparams{}, std::make_shared<const KernelMenu>(menu));
        s.initialise(std::vector<int>(n, 0), theta, {static_cast<int>((truth + 1) % 3)});
        const double p = kernel_conditional(s, 0)[truth];
        // the move itself draws from this conditional
        int hits = 0;
        for (int r = 0; r < 2000; ++r) {
            ModelState copy = s;
            hits += kernel_resample_move(copy, 0, rng) == static_cast<int>(truth);
        }
        ok = ok && p > 0.95;
        o.details.push_back(cat(truths[truth].first, ": posterior probability ", fmt("%.4f", p), ", move picked it in ",
                                fmt("%.3f", hits / 2000.0), " of draws"));
    }
    o.pass = ok;
    o.summary = ok ? "generating kernel selected with probability > 0.95 in every case" : "selection probability at or below 0.95";
    return o;
}

} // namespace

int main() {
    std::printf("acceptance run\n");
    report(1, "SBM synthetic row", [] { return table_row("sbm_fig3a", 1.0, true); });
    report(2, "DCSBM synthetic row", [] { return table_row("dcsbm_fig3b", 0.75, false); });
    report(3, "quadratic synthetic row", [] { return table_row("quadratic_fig3c", 0.75, false); });
    report(4, "Hardy-Weinberg", hardy_weinberg);
    report(5, "conjugacy oracles", conjugacy);
    report(6, "sampler exactness", sampler_exactness);
    report(7, "closed-form probability checks", closed_forms);
    report(8, "kernel selection", kernel_selection);
    std::printf("%d of 8 criteria failed\n", failures);
    return failures;
}
