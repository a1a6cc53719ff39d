#ifndef LSBM_SAMPLER_HPP
#define LSBM_SAMPLER_HPP

#include "lsbm/kmeans.hpp"
#include "lsbm/model.hpp"
#include "lsbm/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lsbm {

struct McmcConfig {
    long n_samples = 10000; // total sweeps, burn-in included
    long burn_in = 1000;
    long thinning = 1;
    std::uint64_t seed = 0;
    // Per-sweep probabilities of running each move block.
    double p_z_scan = 1.0;
    double p_theta_scan = 1.0;
    double p_split_merge = 1.0;
    double p_empty = 1.0;
    double p_kernel = 1.0;
    std::optional<int> K_known;

    void validate() const {
        if (n_samples <= 0) throw std::invalid_argument("n_samples must be positive");
        if (burn_in < 0 || burn_in >= n_samples) throw std::invalid_argument("burn_in must lie in [0, n_samples)");
        if (thinning <= 0) throw std::invalid_argument("thinning must be positive");
        for (double p : {p_z_scan, p_theta_scan, p_split_merge, p_empty, p_kernel}) {
            if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("move probabilities must lie in [0, 1]");
        }
        if (K_known && *K_known < 1) throw std::invalid_argument("K_known must be at least 1");
    }
    long stored_count() const { return (n_samples - burn_in) / thinning; }
    bool k_moves() const { return !K_known.has_value(); }
};

struct MoveCounter {
    long attempts = 0;
    long accepts = 0;

    void record(bool accepted) {
        ++attempts;
        accepts += accepted ? 1 : 0;
    }
    double rate() const { return attempts ? static_cast<double>(accepts) / static_cast<double>(attempts) : 0.0; }
    MoveCounter& operator+=(const MoveCounter& o) {
        attempts += o.attempts;
        accepts += o.accepts;
        return *this;
    }
};

struct AcceptanceStats {
    MoveCounter z_change; // Gibbs draws that moved the node
    MoveCounter theta;
    MoveCounter split;
    MoveCounter merge;
    MoveCounter empty_add;
    MoveCounter empty_remove;
    MoveCounter kernel_change;

    AcceptanceStats& operator+=(const AcceptanceStats& o) {
        z_change += o.z_change;
        theta += o.theta;
        split += o.split;
        merge += o.merge;
        empty_add += o.empty_add;
        empty_remove += o.empty_remove;
        kernel_change += o.kernel_change;
        return *this;
    }
};

/// Stored draws. Labels are compacted per draw: non-empty communities are
/// renumbered 0..K₊-1 in order of their internal label.
struct PosteriorSamples {
    Eigen::Index n = 0;
    std::vector<std::uint16_t> z;  // size() * n, draw-major
    std::vector<double> theta;     // size() * n
    std::vector<int> K_nonempty;
    std::vector<int> K_total;
    std::vector<std::vector<int>> kernel_ids; // per draw, per compacted community
    std::vector<double> log_score;
    AcceptanceStats acceptance;

    std::size_t size() const { return K_nonempty.size(); }
    std::span<const std::uint16_t> labels(std::size_t s) const {
        return {z.data() + s * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
    }
    std::span<const double> thetas(std::size_t s) const {
        return {theta.data() + s * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
    }

    void append(const PosteriorSamples& o) {
        if (n == 0) n = o.n;
        if (o.n != n) throw std::invalid_argument("cannot merge samples with different node counts");
        z.insert(z.end(), o.z.begin(), o.z.end());
        theta.insert(theta.end(), o.theta.begin(), o.theta.end());
        K_nonempty.insert(K_nonempty.end(), o.K_nonempty.begin(), o.K_nonempty.end());
        K_total.insert(K_total.end(), o.K_total.begin(), o.K_total.end());
        kernel_ids.insert(kernel_ids.end(), o.kernel_ids.begin(), o.kernel_ids.end());
        log_score.insert(log_score.end(), o.log_score.begin(), o.log_score.end());
        acceptance += o.acceptance;
    }

    Eigen::VectorXd theta_mean() const {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
        for (std::size_t s = 0; s < size(); ++s) {
            acc += Eigen::Map<const Eigen::VectorXd>(theta.data() + s * static_cast<std::size_t>(n), n);
        }
        return size() ? Eigen::VectorXd(acc / static_cast<double>(size())) : acc;
    }
};

enum class ThetaInit { first_coordinate_noise, sqrt_abs_first_coordinate, user };

inline const char* to_string(ThetaInit t) {
    switch (t) {
    case ThetaInit::first_coordinate_noise: return "first_coordinate_noise";
    case ThetaInit::sqrt_abs_first_coordinate: return "sqrt_abs_first_coordinate";
    case ThetaInit::user: return "user";
    }
    return "?";
}

inline ThetaInit parse_theta_init(const std::string& s) {
    if (s == "first_coordinate_noise") return ThetaInit::first_coordinate_noise;
    if (s == "sqrt_abs_first_coordinate") return ThetaInit::sqrt_abs_first_coordinate;
    if (s == "user") return ThetaInit::user;
    throw std::invalid_argument("unknown theta initialisation '" + s + "'");
}

struct InitOptions {
    ThetaInit theta_mode = ThetaInit::first_coordinate_noise;
    std::optional<Eigen::VectorXd> theta;     // for ThetaInit::user
    std::optional<std::vector<int>> labels;   // 0-based; k-means otherwise
    std::vector<int> kernel_ids;              // per community; all 0 when empty
    bool permutation_search = true;
    int kmeans_restarts = 100;
    std::uint64_t seed = 0;
};

inline Eigen::VectorXd initial_theta(const Eigen::MatrixXd& x, const Hyperparams& hyper, const InitOptions& opt, Philox& rng) {
    const Eigen::Index n = x.rows();
    Eigen::VectorXd theta(n);
    switch (opt.theta_mode) {
    case ThetaInit::first_coordinate_noise: {
        const double sd = std::sqrt(hyper.sigma2_eps);
        for (Eigen::Index i = 0; i < n; ++i) theta(i) = x(i, 0) + rng.normal(0.0, sd);
        break;
    }
    case ThetaInit::sqrt_abs_first_coordinate:
        theta = x.col(0).cwiseAbs().cwiseSqrt();
        break;
    case ThetaInit::user:
        if (!opt.theta || opt.theta->size() != n) throw std::invalid_argument("user theta initialisation needs n values");
        theta = *opt.theta;
        break;
    }
    return theta;
}

/// Builds the starting state: θ by the chosen rule, Zellner scalings frozen
/// from that θ, z by k-means (or given labels) and, when communities carry
/// different kernels, the label permutation with the highest marginal likelihood.
inline ModelState init_state(const Eigen::MatrixXd& x, int K, const Hyperparams& hyper, KernelMenu menu, const InitOptions& opt = {}) {
    if (K < 1) throw std::invalid_argument("init_state: K must be at least 1");
    if (K > x.rows()) throw std::invalid_argument("init_state: K exceeds the number of nodes");
    Philox rng(opt.seed, 0x1u);
    Eigen::VectorXd theta = initial_theta(x, hyper, opt, rng);
    menu.normalise();
    resolve_zellner(menu, theta);

    std::vector<int> labels;
    if (opt.labels) {
        labels = *opt.labels;
        if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw std::invalid_argument("init labels: wrong length");
    } else {
        labels = kmeans(x, K, rng, opt.kmeans_restarts).labels;
    }
    std::vector<int> kernel_ids = opt.kernel_ids;
    if (kernel_ids.empty()) kernel_ids.assign(static_cast<std::size_t>(K), 0);
    if (static_cast<int>(kernel_ids.size()) != K) throw std::invalid_argument("init: one kernel id per community required");

    ModelState state(x, hyper, std::make_shared<const KernelMenu>(std::move(menu)));
    state.initialise(labels, theta, kernel_ids);

    const bool mixed = std::adjacent_find(kernel_ids.begin(), kernel_ids.end(), std::not_equal_to<>()) != kernel_ids.end();
    if (opt.permutation_search && mixed) {
        if (K > 8) throw std::invalid_argument("init: permutation search supports at most 8 communities");
        std::vector<int> perm(static_cast<std::size_t>(K));
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<int> best_labels = labels;
        double best = marginal_loglik(state);
        while (std::next_permutation(perm.begin(), perm.end())) {
            std::vector<int> trial(labels.size());
            for (std::size_t i = 0; i < labels.size(); ++i) trial[i] = perm[static_cast<std::size_t>(labels[i])];
            state.initialise(trial, theta, kernel_ids);
            const double score = marginal_loglik(state);
            if (score > best) {
                best = score;
                best_labels = trial;
            }
        }
        state.initialise(best_labels, theta, kernel_ids);
    }
    return state;
}

/// Full conditional p(z_i = k | z^{-i}, X, θ) over all K labels.
inline std::vector<double> z_conditional(const ModelState& state, Eigen::Index i) {
    const int K = state.K();
    const double nu_k = state.hyper().nu / K;
    const int own = state.z(i);
    std::vector<double> w(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const double others = state.count(k) - (k == own ? 1 : 0);
        w[static_cast<std::size_t>(k)] = std::log(others + nu_k) + predictive_logpdf(state, i, k, true);
    }
    normalise_log_weights(w);
    return w;
}

inline int gibbs_update_z(ModelState& state, Eigen::Index i, Philox& rng) {
    if (state.K() == 1) return 0;
    const std::vector<double> p = z_conditional(state, i);
    const int k = static_cast<int>(sample_discrete(p, rng));
    state.move(i, k);
    return k;
}

inline bool mh_update_theta(ModelState& state, Eigen::Index i, Philox& rng) {
    const double cur = state.theta(i);
    const double prop = cur + rng.normal(0.0, std::sqrt(state.hyper().sigma2_star));
    const Community& com = state.community(state.z(i));
    const double log_ratio = com.predictive_without(state.x(i), cur, prop) - com.predictive_without(state.x(i), cur, cur) +
                             log_prior_theta(prop, state.hyper()) - log_prior_theta(cur, state.hyper());
    if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
        state.set_theta(i, prop);
        return true;
    }
    return false;
}

namespace detail {

inline std::vector<int> community_counts(const ModelState& state) {
    std::vector<int> c(static_cast<std::size_t>(state.K()));
    for (int k = 0; k < state.K(); ++k) c[static_cast<std::size_t>(k)] = state.count(k);
    return c;
}

inline int draw_kernel(const KernelMenu& menu, Philox& rng) {
    if (menu.size() == 1) return 0;
    std::vector<double> p(menu.log_weights.begin(), menu.log_weights.end());
    normalise_log_weights(p);
    return static_cast<int>(sample_discrete(p, rng));
}

/// log of ½[1{ki=kc}p(kj) + 1{kj=kc}p(ki)]: density of the split kernel proposal.
inline double log_split_kernel_density(const KernelMenu& menu, int kc, int ki, int kj) {
    if (menu.size() == 1) return 0.0;
    double acc = 0.0;
    if (ki == kc) acc += std::exp(menu.log_weights[static_cast<std::size_t>(kj)]);
    if (kj == kc) acc += std::exp(menu.log_weights[static_cast<std::size_t>(ki)]);
    return std::log(0.5 * acc);
}

/// log of ½[1{ki=km} + 1{kj=km}]: probability that a merge keeps kernel km.
inline double log_merge_kernel_prob(const KernelMenu& menu, int km, int ki, int kj) {
    if (menu.size() == 1) return 0.0;
    return std::log(0.5 * ((ki == km ? 1.0 : 0.0) + (kj == km ? 1.0 : 0.0)));
}

} // namespace detail

/// Probability of one sequential restricted allocation: seeds i and j start
/// the two children, then each node in `order` joins child i (side[l] = 0) or
/// child j (side[l] = 1) with probability proportional to its predictive.
inline double split_log_proposal(const ModelState& state, Eigen::Index i, Eigen::Index j, int kernel_i, int kernel_j,
                                 const std::vector<Eigen::Index>& order, const std::vector<int>& side) {
    Community ci = state.make_community(kernel_i);
    Community cj = state.make_community(kernel_j);
    ci.add(state.x(i), state.theta(i));
    cj.add(state.x(j), state.theta(j));
    double log_q = 0.0;
    for (std::size_t t = 0; t < order.size(); ++t) {
        const Eigen::Index l = order[t];
        const double li = ci.predictive(state.x(l), state.theta(l));
        const double lj = cj.predictive(state.x(l), state.theta(l));
        const double top = std::max(li, lj);
        const double lse = top + std::log(std::exp(li - top) + std::exp(lj - top));
        if (side[t] == 0) {
            log_q += li - lse;
            ci.add(state.x(l), state.theta(l));
        } else {
            log_q += lj - lse;
            cj.add(state.x(l), state.theta(l));
        }
    }
    return log_q;
}

struct SplitMergeResult {
    bool is_split = false;
    bool accepted = false;
    double log_accept = 0.0;
    double log_q = 0.0; // allocation proposal log-probability (forward for splits, replayed for merges)
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    int kernel_i = 0;
    int kernel_j = 0;
    std::vector<Eigen::Index> order;
    std::vector<int> side;
};

/// One split/merge attempt on the labelled state. A split creates a new
/// community placed at a uniformly chosen label among K+1 (the displaced
/// community moves to the end); a merge removes z_j's label by moving the last
/// community into it. The ratio includes the matching 1/(K+1) labelling terms.
inline SplitMergeResult split_merge_move(ModelState& state, Philox& rng) {
    const Eigen::Index n = state.n();
    if (n < 2) throw std::invalid_argument("split_merge_move needs at least 2 nodes");
    const KernelMenu& menu = state.menu();
    const Hyperparams& h = state.hyper();
    SplitMergeResult r;
    r.i = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    r.j = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n - 1)));
    if (r.j >= r.i) ++r.j;
    const int K = state.K();
    const int a = state.z(r.i);
    const int b = state.z(r.j);
    r.is_split = a == b;

    std::vector<Eigen::Index> rest;
    for (Eigen::Index l = 0; l < n; ++l) {
        const int zl = state.z(l);
        if (l != r.i && l != r.j && (zl == a || zl == b)) rest.push_back(l);
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    r.order = rest;
    std::vector<int> counts = detail::community_counts(state);
    const double old_prior_z = log_prior_counts(counts, h.nu);
    const double log1m_omega = std::log1p(-h.omega);

    if (r.is_split) {
        const int kc = state.kernel_id(a);
        int ki = kc, kj = kc;
        if (menu.size() > 1) {
            if (rng.bernoulli(0.5)) {
                kj = detail::draw_kernel(menu, rng);
            } else {
                ki = detail::draw_kernel(menu, rng);
            }
        }
        r.kernel_i = ki;
        r.kernel_j = kj;
        Community ci = state.make_community(ki);
        Community cj = state.make_community(kj);
        ci.add(state.x(r.i), state.theta(r.i));
        cj.add(state.x(r.j), state.theta(r.j));
        r.side.reserve(rest.size());
        for (Eigen::Index l : rest) {
            const double li = ci.predictive(state.x(l), state.theta(l));
            const double lj = cj.predictive(state.x(l), state.theta(l));
            const double top = std::max(li, lj);
            const double lse = top + std::log(std::exp(li - top) + std::exp(lj - top));
            if (std::log(rng.uniform()) < li - lse) {
                r.log_q += li - lse;
                ci.add(state.x(l), state.theta(l));
                r.side.push_back(0);
            } else {
                r.log_q += lj - lse;
                cj.add(state.x(l), state.theta(l));
                r.side.push_back(1);
            }
        }
        counts[static_cast<std::size_t>(a)] = ci.size();
        counts.push_back(cj.size());
        const auto& lw = menu.log_weights;
        r.log_accept = ci.log_marginal() + cj.log_marginal() - state.community(a).log_marginal() +
                       log_prior_counts(counts, h.nu) - old_prior_z + log1m_omega +
                       lw[static_cast<std::size_t>(ki)] + lw[static_cast<std::size_t>(kj)] - lw[static_cast<std::size_t>(kc)] +
                       std::log(static_cast<double>(K + 1)) + detail::log_merge_kernel_prob(menu, kc, ki, kj) -
                       detail::log_split_kernel_density(menu, kc, ki, kj) - r.log_q;
        r.accepted = r.log_accept >= 0.0 || std::log(rng.uniform()) < r.log_accept;
        // The label slot is drawn regardless so the stream does not depend on the outcome.
        const int slot = static_cast<int>(rng.index(static_cast<std::size_t>(K + 1)));
        if (r.accepted) {
            std::vector<Eigen::Index> moved{r.j};
            for (std::size_t t = 0; t < rest.size(); ++t) {
                if (r.side[t] == 1) moved.push_back(rest[t]);
            }
            const int fresh = state.add_community(kj);
            state.relabel(moved, fresh);
            if (ki != kc) state.set_kernel(a, ki);
            state.swap_labels(fresh, slot);
        }
        return r;
    }

    const int ka = state.kernel_id(a);
    const int kb = state.kernel_id(b);
    int km = ka;
    if (menu.size() > 1 && rng.bernoulli(0.5)) km = kb;
    r.kernel_i = ka;
    r.kernel_j = kb;
    r.side.reserve(rest.size());
    for (Eigen::Index l : rest) r.side.push_back(state.z(l) == a ? 0 : 1);
    r.log_q = split_log_proposal(state, r.i, r.j, ka, kb, rest, r.side);
    Community cm = state.make_community(km);
    for (Eigen::Index l = 0; l < n; ++l) {
        const int zl = state.z(l);
        if (zl == a || zl == b) cm.accumulate(state.x(l), state.theta(l), 1.0);
    }
    cm.refresh();
    counts[static_cast<std::size_t>(a)] += counts[static_cast<std::size_t>(b)];
    counts.erase(counts.begin() + b);
    const auto& lw = menu.log_weights;
    r.log_accept = cm.log_marginal() - state.community(a).log_marginal() - state.community(b).log_marginal() +
                   log_prior_counts(counts, h.nu) - old_prior_z - log1m_omega +
                   lw[static_cast<std::size_t>(km)] - lw[static_cast<std::size_t>(ka)] - lw[static_cast<std::size_t>(kb)] -
                   std::log(static_cast<double>(K)) + detail::log_split_kernel_density(menu, km, ka, kb) + r.log_q -
                   detail::log_merge_kernel_prob(menu, km, ka, kb);
    r.accepted = r.log_accept >= 0.0 || std::log(rng.uniform()) < r.log_accept;
    if (r.accepted) {
        state.relabel(state.members(b), a);
        if (km != ka) state.set_kernel(a, km);
        state.swap_labels(b, K - 1);
        state.pop_community();
    }
    return r;
}

struct EmptyMoveResult {
    bool add = false;
    bool accepted = false;
    double log_q_ratio = 0.0; // log q∅
};

/// Adds an empty community at the end, or removes the last label when it is
/// empty. Removal is proposed with probability ½ whenever the last label is
/// empty, otherwise an addition is always proposed.
inline EmptyMoveResult empty_community_move(ModelState& state, Philox& rng) {
    const Hyperparams& h = state.hyper();
    const int K = state.K();
    const bool last_empty = state.count(K - 1) == 0;
    EmptyMoveResult r;
    r.add = !last_empty || rng.bernoulli(0.5);
    std::vector<int> counts = detail::community_counts(state);
    const double old_prior_z = log_prior_counts(counts, h.nu);
    double log_target;
    if (r.add) {
        r.log_q_ratio = last_empty ? 0.0 : std::log(0.5);
        counts.push_back(0);
        log_target = log_prior_counts(counts, h.nu) - old_prior_z + std::log1p(-h.omega);
    } else {
        counts.pop_back();
        r.log_q_ratio = counts.back() > 0 ? std::log(2.0) : 0.0;
        log_target = log_prior_counts(counts, h.nu) - old_prior_z - std::log1p(-h.omega);
    }
    const int kernel = r.add ? detail::draw_kernel(state.menu(), rng) : 0;
    const double log_accept = log_target + r.log_q_ratio;
    r.accepted = log_accept >= 0.0 || std::log(rng.uniform()) < log_accept;
    if (r.accepted) {
        if (r.add) {
            state.add_community(kernel);
        } else {
            state.pop_community();
        }
    }
    return r;
}

/// Posterior probabilities over the kernel menu for community k.
inline std::vector<double> kernel_conditional(const ModelState& state, int k) {
    const KernelMenu& menu = state.menu();
    const std::vector<Eigen::Index> members = state.members(k);
    std::vector<double> w(menu.size());
    for (std::size_t id = 0; id < menu.size(); ++id) {
        double ml = 0.0;
        if (static_cast<int>(id) == state.kernel_id(k)) {
            ml = state.community(k).log_marginal();
        } else if (!members.empty()) {
            Community c = state.make_community(static_cast<int>(id));
            for (Eigen::Index l : members) c.accumulate(state.x(l), state.theta(l), 1.0);
            c.refresh();
            ml = c.log_marginal();
        }
        w[id] = menu.log_weights[id] + ml;
    }
    normalise_log_weights(w);
    return w;
}

/// Exact Gibbs draw of community k's kernel; returns the new menu index.
inline int kernel_resample_move(ModelState& state, int k, Philox& rng) {
    if (state.menu().size() == 1) return state.kernel_id(k);
    const std::vector<double> p = kernel_conditional(state, k);
    const int id = static_cast<int>(sample_discrete(p, rng));
    if (id != state.kernel_id(k)) state.set_kernel(k, id);
    return id;
}

class Sampler {
public:
    Sampler(ModelState& state, McmcConfig config) : state_(state), config_(std::move(config)), rng_(config_.seed) {
        config_.validate();
        if (config_.K_known && state_.K() != *config_.K_known) {
            throw std::invalid_argument("initial state K differs from K_known");
        }
    }

    Philox& rng() { return rng_; }
    const AcceptanceStats& acceptance() const { return stats_; }

    void sweep() {
        state_.rebuild();
        const Eigen::Index n = state_.n();
        if (rng_.uniform() < config_.p_z_scan) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const int before = state_.z(i);
                stats_.z_change.record(gibbs_update_z(state_, i, rng_) != before);
            }
        }
        if (rng_.uniform() < config_.p_theta_scan) {
            for (Eigen::Index i = 0; i < n; ++i) stats_.theta.record(mh_update_theta(state_, i, rng_));
        }
        if (config_.k_moves()) {
            if (n >= 2 && rng_.uniform() < config_.p_split_merge) {
                const SplitMergeResult r = split_merge_move(state_, rng_);
                (r.is_split ? stats_.split : stats_.merge).record(r.accepted);
            }
            if (rng_.uniform() < config_.p_empty) {
                const EmptyMoveResult r = empty_community_move(state_, rng_);
                (r.add ? stats_.empty_add : stats_.empty_remove).record(r.accepted);
            }
        }
        if (state_.menu().size() > 1 && rng_.uniform() < config_.p_kernel) {
            for (int k = 0; k < state_.K(); ++k) {
                const int before = state_.kernel_id(k);
                stats_.kernel_change.record(kernel_resample_move(state_, k, rng_) != before);
            }
        }
    }

    void snapshot(PosteriorSamples& out) const {
        const Eigen::Index n = state_.n();
        out.n = n;
        std::vector<int> remap(static_cast<std::size_t>(state_.K()), -1);
        std::vector<int> kernels;
        int next = 0;
        for (int k = 0; k < state_.K(); ++k) {
            if (state_.count(k) > 0) {
                remap[static_cast<std::size_t>(k)] = next++;
                kernels.push_back(state_.kernel_id(k));
            }
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            out.z.push_back(static_cast<std::uint16_t>(remap[static_cast<std::size_t>(state_.z(i))]));
            out.theta.push_back(state_.theta(i));
        }
        out.K_nonempty.push_back(next);
        out.K_total.push_back(state_.K());
        out.kernel_ids.push_back(std::move(kernels));
        out.log_score.push_back(joint_log_score(state_));
    }

    PosteriorSamples run() {
        PosteriorSamples out;
        out.n = state_.n();
        const auto stored = static_cast<std::size_t>(config_.stored_count());
        out.z.reserve(stored * static_cast<std::size_t>(out.n));
        out.theta.reserve(stored * static_cast<std::size_t>(out.n));
        for (long s = 0; s < config_.n_samples; ++s) {
            try {
                sweep();
            } catch (const std::exception& e) {
                throw std::runtime_error("iteration " + std::to_string(s) + ": " + e.what());
            }
            const long post = s - config_.burn_in + 1;
            if (post > 0 && post % config_.thinning == 0) snapshot(out);
        }
        out.acceptance = stats_;
        return out;
    }

private:
    ModelState& state_;
    McmcConfig config_;
    Philox rng_;
    AcceptanceStats stats_;
};

inline PosteriorSamples run(ModelState& state, const McmcConfig& config) {
    Sampler sampler(state, config);
    return sampler.run();
}

/// Runs independent chains from copies of the initial state, chain c with
/// seed config.seed + c, and concatenates their draws.
inline PosteriorSamples run_chains(const ModelState& initial, const McmcConfig& config, int chains) {
    if (chains < 1) throw std::invalid_argument("chains must be at least 1");
    std::vector<PosteriorSamples> results(static_cast<std::size_t>(chains));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
    std::vector<std::thread> workers;
    for (int c = 0; c < chains; ++c) {
        workers.emplace_back([&, c] {
            try {
                ModelState state = initial;
                McmcConfig cfg = config;
                cfg.seed = config.seed + static_cast<std::uint64_t>(c);
                results[static_cast<std::size_t>(c)] = run(state, cfg);
            } catch (...) {
                errors[static_cast<std::size_t>(c)] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    PosteriorSamples merged;
    for (const auto& r : results) merged.append(r);
    return merged;
}

} // namespace lsbm

#endif
