#ifndef LSBM_KMEANS_HPP
#define LSBM_KMEANS_HPP

#include "lsbm/random.hpp"

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <vector>

namespace lsbm {

struct KMeansResult {
    std::vector<int> labels;
    Eigen::MatrixXd centres; // K x d
    double inertia = std::numeric_limits<double>::infinity();
};

namespace detail {

inline Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& x, int K, Philox& rng) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd centres(K, x.cols());
    centres.row(0) = x.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
    Eigen::VectorXd dist = (x.rowwise() - centres.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < K; ++c) {
        const double total = dist.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (pick = 0; pick < n - 1; ++pick) {
                u -= dist(pick);
                if (u < 0.0) break;
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
        }
        centres.row(c) = x.row(pick);
        dist = dist.cwiseMin((x.rowwise() - centres.row(c)).rowwise().squaredNorm());
    }
    return centres;
}

inline KMeansResult lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd centres, int max_iter) {
    const Eigen::Index n = x.rows();
    const int K = static_cast<int>(centres.rows());
    KMeansResult r;
    r.labels.assign(static_cast<std::size_t>(n), -1);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        r.inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < K; ++c) {
                double dd = (x.row(i) - centres.row(c)).squaredNorm();
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            r.inertia += best_d;
            if (r.labels[static_cast<std::size_t>(i)] != best) {
                r.labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed) break;
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, x.cols());
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(r.labels[static_cast<std::size_t>(i)]) += x.row(i);
            counts(r.labels[static_cast<std::size_t>(i)]) += 1.0;
        }
        for (int c = 0; c < K; ++c) {
            // An emptied cluster keeps its previous centre.
            if (counts(c) > 0.0) centres.row(c) = sums.row(c) / counts(c);
        }
    }
    r.centres = std::move(centres);
    return r;
}

} // namespace detail

/// Lloyd's algorithm from k-means++ seeds; the restart with the lowest
/// within-cluster sum of squares wins.
inline KMeansResult kmeans(const Eigen::MatrixXd& x, int K, Philox& rng, int restarts = 100, int max_iter = 300) {
    if (K < 1) throw std::invalid_argument("kmeans: K must be at least 1");
    if (K > x.rows()) throw std::invalid_argument("kmeans: K exceeds the number of points");
    KMeansResult best;
    for (int r = 0; r < restarts; ++r) {
        KMeansResult cur = detail::lloyd(x, detail::kmeanspp_seed(x, K, rng), max_iter);
        if (cur.inertia < best.inertia) best = std::move(cur);
    }
    return best;
}

} // namespace lsbm

#endif
