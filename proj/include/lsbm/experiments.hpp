#ifndef LSBM_EXPERIMENTS_HPP
#define LSBM_EXPERIMENTS_HPP

#include "lsbm/kernels.hpp"
#include "lsbm/model.hpp"
#include "lsbm/random.hpp"
#include "lsbm/sampler.hpp"
#include "lsbm/simulate.hpp"
#include "lsbm/spectral.hpp"
#include "lsbm/summary.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lsbm {

/// One synthetic run: simulate a preset, embed, fit, summarise.
struct ExperimentOptions {
    std::string preset;
    std::uint64_t data_seed = 1;
    std::uint64_t chain_seed = 1;
    long n_samples = 10000;
    long burn_in = 1000;
    std::optional<int> K_known = 2;
    int K_init = 2;
    ThetaInit theta_init = ThetaInit::first_coordinate_noise;
    KernelMenu menu;
    // Rotate the embedding onto the true positions before fitting.
    bool align_to_truth = false;
    int chains = 1;
};

struct ExperimentResult {
    double ari = 0.0;
    int K_mode = 0;
    std::vector<double> k_posterior;
    AcceptanceStats acceptance;
    double seconds = 0.0;
    std::vector<int> labels;
    std::vector<int> truth;
};

/// Kernel menus used for the synthetic table: constant for the SBM,
/// homogeneous linear with an identity first coordinate for the DCSBM and
/// quadratic with an identity first coordinate for the quadratic LSBM.
inline KernelMenu table1_menu(const std::string& preset_name, int d) {
    if (preset_name == "sbm_fig3a") {
        return KernelMenu::single(make_assignment(d, KernelSpec::zellner(BasisFamily::constant())));
    }
    if (preset_name == "dcsbm_fig3b") {
        return KernelMenu::single(
            make_assignment(d, KernelSpec::zellner(BasisFamily::homogeneous_linear()), KernelSpec::fixed_identity()));
    }
    if (preset_name == "quadratic_fig3c") {
        return KernelMenu::single(make_assignment(d, KernelSpec::zellner(BasisFamily::polynomial(2)), KernelSpec::fixed_identity()));
    }
    throw std::invalid_argument("no synthetic-table kernels for preset '" + preset_name + "'");
}

enum class HwKernels { quadratic, cubic_identity };

inline KernelMenu hardy_weinberg_menu(HwKernels k) {
    if (k == HwKernels::quadratic) return KernelMenu::single(make_assignment(3, KernelSpec::zellner(BasisFamily::polynomial(2))));
    return KernelMenu::single(make_assignment(3, KernelSpec::zellner(BasisFamily::polynomial(3)), KernelSpec::fixed_identity()));
}

inline ExperimentOptions table1_options(const std::string& preset_name, std::uint64_t seed) {
    ExperimentOptions o;
    o.preset = preset_name;
    o.data_seed = seed;
    o.chain_seed = seed;
    o.menu = table1_menu(preset_name, 2);
    return o;
}

/// The quadratic run starts θ at |x̂₁|^{1/2}; the cubic run keeps the
/// identity first coordinate and the default θ start.
inline ExperimentOptions hardy_weinberg_options(HwKernels k, std::uint64_t seed, bool K_unknown) {
    ExperimentOptions o;
    o.preset = "hardy_weinberg";
    o.data_seed = seed;
    o.chain_seed = seed;
    o.menu = hardy_weinberg_menu(k);
    o.theta_init = k == HwKernels::quadratic ? ThetaInit::sqrt_abs_first_coordinate : ThetaInit::first_coordinate_noise;
    o.align_to_truth = true;
    if (K_unknown) o.K_known.reset();
    return o;
}

inline ExperimentResult run_experiment(const ExperimentOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    const LsbmSpec spec = preset(opt.preset);
    Philox rng(opt.data_seed);
    const LatentSample lat = sample_latent(spec, spec.n, rng);
    const AdjacencyMatrix a = sample_rdpg(lat.x, rng);
    Embedding emb = ase(a, spec.dims());
    if (opt.align_to_truth) emb.positions = procrustes_align(emb.positions, lat.x).aligned;

    Hyperparams hyper;
    hyper.mu_theta = emb.positions.col(0).mean();
    InitOptions init;
    init.theta_mode = opt.theta_init;
    init.seed = opt.chain_seed;
    ModelState state = init_state(emb.positions, opt.K_known.value_or(opt.K_init), hyper, opt.menu, init);

    McmcConfig cfg;
    cfg.n_samples = opt.n_samples;
    cfg.burn_in = opt.burn_in;
    cfg.seed = opt.chain_seed;
    cfg.K_known = opt.K_known;
    const PosteriorSamples samples = opt.chains > 1 ? run_chains(state, cfg, opt.chains) : run(state, cfg);

    ExperimentResult r;
    const ClusterResult clusters = consensus_clusters(posterior_similarity(samples), samples);
    r.labels = clusters.labels;
    r.truth = lat.z;
    r.ari = ari(r.labels, r.truth);
    r.k_posterior = k_posterior(samples);
    r.K_mode = k_posterior_mode(samples);
    r.acceptance = samples.acceptance;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

} // namespace lsbm

#endif
