#ifndef LSBM_SUMMARY_HPP
#define LSBM_SUMMARY_HPP

#include "lsbm/model.hpp"
#include "lsbm/sampler.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace lsbm {

/// Co-clustering frequency of every node pair across stored draws.
inline Eigen::MatrixXd posterior_similarity(const PosteriorSamples& samples) {
    const auto n = static_cast<std::size_t>(samples.n);
    const std::size_t S = samples.size();
    if (S == 0) throw std::invalid_argument("posterior_similarity: no samples");
    // Node-major copy so each pair compares two contiguous label runs.
    std::vector<std::uint16_t> by_node(n * S);
    for (std::size_t s = 0; s < S; ++s) {
        const auto lab = samples.labels(s);
        for (std::size_t i = 0; i < n; ++i) by_node[i * S + s] = lab[i];
    }
    Eigen::MatrixXd sim = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t* a = by_node.data() + i * S;
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::uint16_t* b = by_node.data() + j * S;
            std::size_t same = 0;
            for (std::size_t s = 0; s < S; ++s) same += a[s] == b[s];
            const double v = static_cast<double>(same) / static_cast<double>(S);
            sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            sim(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    return sim;
}

struct Merge {
    int a = 0; // surviving cluster id (the lower one)
    int b = 0;
    double height = 0.0;
};

/// Average-linkage agglomeration on a dissimilarity matrix. Clusters are
/// identified by the smallest node index they contain; the pair with the
/// smallest distance merges first, ties going to the lexicographically
/// smallest (lower id, higher id).
inline std::vector<Merge> average_linkage(const Eigen::MatrixXd& dist) {
    const Eigen::Index n = dist.rows();
    if (dist.cols() != n) throw std::invalid_argument("average_linkage: matrix must be square");
    Eigen::MatrixXd d = dist;
    std::vector<double> size(static_cast<std::size_t>(n), 1.0);
    std::vector<char> alive(static_cast<std::size_t>(n), 1);
    std::vector<Eigen::Index> nn(static_cast<std::size_t>(n), -1);
    std::vector<double> nnd(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());

    auto refresh_row = [&](Eigen::Index a) {
        nn[static_cast<std::size_t>(a)] = -1;
        nnd[static_cast<std::size_t>(a)] = std::numeric_limits<double>::infinity();
        for (Eigen::Index b = 0; b < n; ++b) {
            if (b == a || !alive[static_cast<std::size_t>(b)]) continue;
            if (d(a, b) < nnd[static_cast<std::size_t>(a)]) {
                nnd[static_cast<std::size_t>(a)] = d(a, b);
                nn[static_cast<std::size_t>(a)] = b;
            }
        }
    };
    for (Eigen::Index a = 0; a < n; ++a) refresh_row(a);

    std::vector<Merge> merges;
    merges.reserve(static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0)));
    for (Eigen::Index step = 0; step + 1 < n; ++step) {
        Eigen::Index best_a = -1;
        Eigen::Index best_b = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index a = 0; a < n; ++a) {
            if (!alive[static_cast<std::size_t>(a)]) continue;
            const Eigen::Index b = nn[static_cast<std::size_t>(a)];
            const double v = nnd[static_cast<std::size_t>(a)];
            const Eigen::Index lo = std::min(a, b), hi = std::max(a, b);
            if (v < best || (v == best && (lo < best_a || (lo == best_a && hi < best_b)))) {
                best = v;
                best_a = lo;
                best_b = hi;
            }
        }
        const Eigen::Index a = best_a, b = best_b;
        merges.push_back({static_cast<int>(a), static_cast<int>(b), best});
        const double sa = size[static_cast<std::size_t>(a)], sb = size[static_cast<std::size_t>(b)];
        alive[static_cast<std::size_t>(b)] = 0;
        for (Eigen::Index c = 0; c < n; ++c) {
            if (!alive[static_cast<std::size_t>(c)] || c == a) continue;
            const double v = (sa * d(a, c) + sb * d(b, c)) / (sa + sb);
            d(a, c) = v;
            d(c, a) = v;
        }
        size[static_cast<std::size_t>(a)] = sa + sb;
        for (Eigen::Index c = 0; c < n; ++c) {
            if (!alive[static_cast<std::size_t>(c)]) continue;
            const Eigen::Index m = nn[static_cast<std::size_t>(c)];
            if (c == a || m == a || m == b) {
                refresh_row(c);
            } else if (d(c, a) < nnd[static_cast<std::size_t>(c)] ||
                       (d(c, a) == nnd[static_cast<std::size_t>(c)] && a < m)) {
                nnd[static_cast<std::size_t>(c)] = d(c, a);
                nn[static_cast<std::size_t>(c)] = a;
            }
        }
    }
    return merges;
}

/// Labels from cutting the merge sequence at K clusters, numbered 0..K-1 in
/// order of each cluster's smallest node index.
inline std::vector<int> cut_tree(const std::vector<Merge>& merges, Eigen::Index n, int K) {
    if (K < 1 || K > n) throw std::invalid_argument("cut_tree: K must lie in [1, n]");
    std::vector<int> parent(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = static_cast<int>(i);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
        return x;
    };
    const std::size_t steps = static_cast<std::size_t>(n - K);
    for (std::size_t s = 0; s < steps; ++s) parent[static_cast<std::size_t>(find(merges[s].b))] = find(merges[s].a);
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::map<int, int> ids;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int root = find(static_cast<int>(i));
        auto [it, fresh] = ids.try_emplace(root, static_cast<int>(ids.size()));
        labels[static_cast<std::size_t>(i)] = it->second;
    }
    return labels;
}

/// Normalised histogram of the number of non-empty communities per draw;
/// index k holds the probability of K₊ = k.
inline std::vector<double> k_posterior(const PosteriorSamples& samples) {
    if (samples.size() == 0) throw std::invalid_argument("k_posterior: no samples");
    const int top = *std::max_element(samples.K_nonempty.begin(), samples.K_nonempty.end());
    std::vector<double> hist(static_cast<std::size_t>(top + 1), 0.0);
    for (int k : samples.K_nonempty) hist[static_cast<std::size_t>(k)] += 1.0;
    for (double& h : hist) h /= static_cast<double>(samples.size());
    return hist;
}

inline int k_posterior_mode(const PosteriorSamples& samples) {
    const auto hist = k_posterior(samples);
    return static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
}

struct ClusterResult {
    std::vector<int> labels; // 0-based, every label in 0..K_hat-1 used
    int K_hat = 0;
    std::optional<double> ari;
};

/// Average-linkage clustering on 1 − π̂ cut at K clusters.
inline ClusterResult consensus_clusters(const Eigen::MatrixXd& sim, int K) {
    if (K < 1 || K > sim.rows()) throw std::invalid_argument("consensus_clusters: K must lie in [1, n]");
    const Eigen::MatrixXd dist = Eigen::MatrixXd::Ones(sim.rows(), sim.cols()) - sim;
    ClusterResult r;
    r.labels = cut_tree(average_linkage(dist), sim.rows(), K);
    r.K_hat = K;
    return r;
}

/// Cut at the posterior-mode number of non-empty communities.
inline ClusterResult consensus_clusters(const Eigen::MatrixXd& sim, const PosteriorSamples& samples) {
    return consensus_clusters(sim, k_posterior_mode(samples));
}

/// Adjusted Rand index under the permutation model.
template <class A, class B>
double ari(const std::vector<A>& x, const std::vector<B>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("ari: label vectors differ in length");
    const std::size_t n = x.size();
    std::map<A, int> rx;
    std::map<B, int> ry;
    for (const auto& v : x) rx.try_emplace(v, static_cast<int>(rx.size()));
    for (const auto& v : y) ry.try_emplace(v, static_cast<int>(ry.size()));
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rx.size()), static_cast<Eigen::Index>(ry.size()));
    for (std::size_t i = 0; i < n; ++i) table(rx[x[i]], ry[y[i]]) += 1.0;
    auto c2 = [](double m) { return m * (m - 1.0) / 2.0; };
    const double index = table.unaryExpr(c2).sum();
    const double sa = table.rowwise().sum().unaryExpr(c2).sum();
    const double sb = table.colwise().sum().unaryExpr(c2).sum();
    const double total = c2(static_cast<double>(n));
    const double expected = total > 0.0 ? sa * sb / total : 0.0;
    const double maximum = 0.5 * (sa + sb);
    if (maximum == expected) return 1.0;
    return (index - expected) / (maximum - expected);
}

struct ProcrustesResult {
    Eigen::MatrixXd aligned;
    Eigen::MatrixXd rotation;
    double residual = 0.0;
};

/// Orthogonal Q minimising ‖X̂Q − X‖_F.
inline ProcrustesResult procrustes_align(const Eigen::MatrixXd& xhat, const Eigen::MatrixXd& x) {
    if (xhat.rows() != x.rows() || xhat.cols() != x.cols()) {
        throw std::invalid_argument("procrustes_align: shape mismatch");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(xhat.transpose() * x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    ProcrustesResult r;
    r.rotation = svd.matrixU() * svd.matrixV().transpose();
    r.aligned = xhat * r.rotation;
    r.residual = (r.aligned - x).norm();
    return r;
}

struct CurveFit {
    int community = 0;
    int dimension = 0;
    int kernel_id = 0;
    std::vector<double> grid;
    std::vector<double> values;
};

/// Posterior-mean curves μ*_{k,j} on a θ grid for each consensus community,
/// using the posterior-mean θ. Each community takes the menu kernel with the
/// highest marginal likelihood.
inline std::vector<CurveFit> curve_fits(const ModelState& reference, const std::vector<int>& labels,
                                        const Eigen::VectorXd& theta, int grid_points = 200) {
    const Eigen::Index n = reference.n();
    if (static_cast<Eigen::Index>(labels.size()) != n || theta.size() != n) {
        throw std::invalid_argument("curve_fits: length mismatch");
    }
    if (grid_points < 2) throw std::invalid_argument("curve_fits: need at least two grid points");
    const int K = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<CurveFit> out;
    for (int k = 0; k < K; ++k) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (labels[static_cast<std::size_t>(i)] != k) continue;
            lo = std::min(lo, theta(i));
            hi = std::max(hi, theta(i));
        }
        if (!(lo <= hi)) continue;
        int best_id = 0;
        double best = -std::numeric_limits<double>::infinity();
        Community best_com;
        for (std::size_t id = 0; id < reference.menu().size(); ++id) {
            Community c = reference.make_community(static_cast<int>(id));
            for (Eigen::Index i = 0; i < n; ++i) {
                if (labels[static_cast<std::size_t>(i)] == k) c.accumulate(reference.x(i), theta(i), 1.0);
            }
            c.refresh();
            const double ml = c.log_marginal() + reference.menu().log_weights[id];
            if (ml > best) {
                best = ml;
                best_id = static_cast<int>(id);
                best_com = c;
            }
        }
        for (int j = 0; j < best_com.dims(); ++j) {
            const KernelSpec& spec = best_com.kernels()[static_cast<std::size_t>(j)];
            CurveFit f;
            f.community = k;
            f.dimension = j;
            f.kernel_id = best_id;
            for (int g = 0; g < grid_points; ++g) {
                const double t = lo + (hi - lo) * g / (grid_points - 1);
                f.grid.push_back(t);
                f.values.push_back(spec.is_fixed_identity() ? t : spec.basis()(t).dot(best_com.dim(j).mean));
            }
            out.push_back(std::move(f));
        }
    }
    return out;
}

} // namespace lsbm

#endif
