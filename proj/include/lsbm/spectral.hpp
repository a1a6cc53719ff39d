#ifndef LSBM_SPECTRAL_HPP
#define LSBM_SPECTRAL_HPP

#include "lsbm/graph.hpp"
#include "lsbm/random.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lsbm {

enum class EmbeddingSide { symmetric, left, right };

inline const char* to_string(EmbeddingSide s) {
    switch (s) {
    case EmbeddingSide::symmetric: return "symmetric";
    case EmbeddingSide::left: return "left";
    case EmbeddingSide::right: return "right";
    }
    return "?";
}

/// Estimated latent positions, one row per node.
///
/// For the symmetric (ASE) case the spectrum holds the signed eigenvalues,
/// ordered by decreasing magnitude; for DASE it holds singular values in
/// decreasing order. Column j has squared norm |spectrum(j)|.
struct Embedding {
    Eigen::MatrixXd positions;
    Eigen::VectorXd spectrum;
    EmbeddingSide side = EmbeddingSide::symmetric;

    Eigen::Index n() const { return positions.rows(); }
    Eigen::Index d() const { return positions.cols(); }
};

/// Horizontal concatenation [X, X'] of a directed embedding pair.
struct JointEmbedding {
    Eigen::MatrixXd positions;
};

class EigensolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matrices at most this large (in their larger dimension) are decomposed densely.
inline constexpr Eigen::Index kDenseSpectralLimit = 2000;

namespace detail {

/// Flips each column so that its largest-magnitude entry is positive.
/// Returns the applied signs.
inline Eigen::VectorXd canonical_signs(Eigen::MatrixXd& vecs) {
    Eigen::VectorXd signs(vecs.cols());
    for (Eigen::Index c = 0; c < vecs.cols(); ++c) {
        Eigen::Index arg = 0;
        vecs.col(c).cwiseAbs().maxCoeff(&arg);
        signs(c) = vecs(arg, c) < 0.0 ? -1.0 : 1.0;
        vecs.col(c) *= signs(c);
    }
    return signs;
}

/// Indices of the d entries of largest magnitude, decreasing; ties go to the positive value.
inline std::vector<Eigen::Index> order_by_magnitude(const Eigen::VectorXd& vals, Eigen::Index d) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(vals.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        double ma = std::abs(vals(a)), mb = std::abs(vals(b));
        if (ma != mb) return ma > mb;
        return vals(a) > vals(b);
    });
    idx.resize(static_cast<std::size_t>(d));
    return idx;
}

inline Eigen::MatrixXd orthonormalise(const Eigen::MatrixXd& y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

inline Eigen::MatrixXd random_block(Eigen::Index rows, Eigen::Index cols) {
    Philox rng(0x5eed5eedULL);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
    return m;
}

struct PartialEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

/// Block subspace iteration with Rayleigh-Ritz extraction for the d
/// largest-magnitude eigenpairs of a symmetric operator. Deterministic.
template <class Apply>
PartialEigen subspace_eigs(Apply&& apply, Eigen::Index n, Eigen::Index d, int max_iter = 3000, double tol = 1e-11) {
    const Eigen::Index block = std::min(n, d + std::max<Eigen::Index>(10, d));
    Eigen::MatrixXd q = orthonormalise(random_block(n, block));
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(d);
    for (int iter = 0; iter < max_iter; ++iter) {
        Eigen::MatrixXd aq = apply(q);
        Eigen::MatrixXd t = q.transpose() * aq;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(0.5 * (t + t.transpose()));
        auto order = order_by_magnitude(small.eigenvalues(), d);
        Eigen::VectorXd vals(d);
        Eigen::MatrixXd ritz(n, d);
        for (Eigen::Index c = 0; c < d; ++c) {
            vals(c) = small.eigenvalues()(order[static_cast<std::size_t>(c)]);
            ritz.col(c) = q * small.eigenvectors().col(order[static_cast<std::size_t>(c)]);
        }
        double scale = std::max(std::abs(vals(0)), 1e-300);
        Eigen::MatrixXd resid = apply(ritz) - ritz * vals.asDiagonal();
        double worst = resid.colwise().norm().maxCoeff() / scale;
        if (worst < tol || (iter > 0 && (vals - prev).cwiseAbs().maxCoeff() < tol * tol * scale && worst < 1e-8)) {
            return {vals, ritz};
        }
        prev = vals;
        q = orthonormalise(aq);
    }
    throw EigensolverError("subspace iteration did not converge");
}

} // namespace detail

/// Adjacency spectral embedding of a dense symmetric matrix.
inline Embedding ase(const Eigen::MatrixXd& a, Eigen::Index d) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("ase: matrix must be square");
    }
    if (d < 1 || d > a.rows()) {
        throw std::invalid_argument("ase: d must lie in [1, n]");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) {
        throw EigensolverError("ase: dense eigendecomposition failed");
    }
    auto order = detail::order_by_magnitude(es.eigenvalues(), d);
    Embedding out;
    out.side = EmbeddingSide::symmetric;
    out.spectrum.resize(d);
    Eigen::MatrixXd vecs(a.rows(), d);
    for (Eigen::Index c = 0; c < d; ++c) {
        out.spectrum(c) = es.eigenvalues()(order[static_cast<std::size_t>(c)]);
        vecs.col(c) = es.eigenvectors().col(order[static_cast<std::size_t>(c)]);
    }
    detail::canonical_signs(vecs);
    out.positions = vecs * out.spectrum.cwiseAbs().cwiseSqrt().asDiagonal();
    return out;
}

/// Adjacency spectral embedding; dense below kDenseSpectralLimit nodes,
/// block subspace iteration on the sparse matrix above it.
inline Embedding ase(const AdjacencyMatrix& a, Eigen::Index d) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("ase: adjacency matrix must be square");
    }
    if (!a.symmetric) {
        throw std::invalid_argument("ase: adjacency matrix must be symmetric (use dase for directed graphs)");
    }
    if (d < 1 || d > a.rows()) {
        throw std::invalid_argument("ase: d must lie in [1, n]");
    }
    if (a.rows() <= kDenseSpectralLimit) {
        return ase(Eigen::MatrixXd(a.entries), d);
    }
    const auto& m = a.entries;
    auto res = detail::subspace_eigs([&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return m * x; }, a.rows(), d);
    Embedding out;
    out.side = EmbeddingSide::symmetric;
    out.spectrum = res.values;
    detail::canonical_signs(res.vectors);
    out.positions = res.vectors * out.spectrum.cwiseAbs().cwiseSqrt().asDiagonal();
    return out;
}

namespace detail {

inline std::pair<Embedding, Embedding> finish_dase(Eigen::MatrixXd u, Eigen::VectorXd s, Eigen::MatrixXd v) {
    Eigen::VectorXd signs = canonical_signs(u);
    v = v * signs.asDiagonal();
    Eigen::VectorXd root = s.cwiseSqrt();
    Embedding left{u * root.asDiagonal(), s, EmbeddingSide::left};
    Embedding right{v * root.asDiagonal(), s, EmbeddingSide::right};
    return {std::move(left), std::move(right)};
}

} // namespace detail

/// Directed adjacency spectral embedding of a dense (possibly rectangular) matrix.
inline std::pair<Embedding, Embedding> dase(const Eigen::MatrixXd& a, Eigen::Index d) {
    if (d < 1 || d > std::min(a.rows(), a.cols())) {
        throw std::invalid_argument("dase: d must lie in [1, min(rows, cols)]");
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return detail::finish_dase(svd.matrixU().leftCols(d), svd.singularValues().head(d), svd.matrixV().leftCols(d));
}

/// Directed adjacency spectral embedding of a sparse matrix. A small side
/// (<= kDenseSpectralLimit) is handled through the dense Gram matrix on that
/// side; otherwise subspace iteration on AᵀA.
inline std::pair<Embedding, Embedding> dase(const AdjacencyMatrix& a, Eigen::Index d) {
    const Eigen::Index rows = a.rows(), cols = a.cols();
    if (d < 1 || d > std::min(rows, cols)) {
        throw std::invalid_argument("dase: d must lie in [1, min(rows, cols)]");
    }
    if (std::max(rows, cols) <= kDenseSpectralLimit) {
        return dase(Eigen::MatrixXd(a.entries), d);
    }
    const auto& m = a.entries;
    Eigen::MatrixXd u, v;
    Eigen::VectorXd s;
    if (std::min(rows, cols) <= kDenseSpectralLimit) {
        const bool row_side = rows <= cols;
        Eigen::SparseMatrix<double> gram_sparse = row_side ? Eigen::SparseMatrix<double>(m * m.transpose())
                                                           : Eigen::SparseMatrix<double>(m.transpose() * m);
        Eigen::MatrixXd gram(gram_sparse);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        if (es.info() != Eigen::Success) {
            throw EigensolverError("dase: Gram eigendecomposition failed");
        }
        Eigen::MatrixXd small_vecs = es.eigenvectors().rightCols(d).rowwise().reverse();
        s = es.eigenvalues().tail(d).reverse().cwiseMax(0.0).cwiseSqrt();
        if (s(d - 1) <= 1e-12 * std::max(s(0), 1.0)) {
            throw EigensolverError("dase: requested dimension exceeds numerical rank");
        }
        Eigen::MatrixXd raw = row_side ? Eigen::MatrixXd(m.transpose() * small_vecs) : Eigen::MatrixXd(m * small_vecs);
        // raw * S^-1 is orthonormal in exact arithmetic; QR removes the rounding drift.
        Eigen::MatrixXd other = detail::orthonormalise(raw);
        for (Eigen::Index c = 0; c < d; ++c) {
            if (other.col(c).dot(raw.col(c)) < 0.0) other.col(c) *= -1.0;
        }
        u = row_side ? small_vecs : other;
        v = row_side ? other : small_vecs;
    } else {
        auto res = detail::subspace_eigs(
            [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return m.transpose() * (m * x); }, cols, d);
        s = res.values.cwiseMax(0.0).cwiseSqrt();
        v = res.vectors;
        u = (m * v) * s.cwiseInverse().asDiagonal();
    }
    return detail::finish_dase(std::move(u), std::move(s), std::move(v));
}

inline JointEmbedding joint_embedding(const Embedding& left, const Embedding& right) {
    if (left.n() != right.n() || left.d() != right.d()) {
        throw std::invalid_argument("joint_embedding: left and right embeddings differ in shape");
    }
    JointEmbedding out;
    out.positions.resize(left.n(), 2 * left.d());
    out.positions << left.positions, right.positions;
    return out;
}

namespace detail {

/// Split point (size of the leading group) maximising the two-group Gaussian
/// profile likelihood with pooled variance. With a common variance estimate
/// this is the split minimising the pooled within-group sum of squares.
inline std::size_t profile_likelihood_elbow(std::span<const double> values) {
    const std::size_t p = values.size();
    std::size_t best = 1;
    double best_ss = std::numeric_limits<double>::infinity();
    for (std::size_t q = 1; q < p; ++q) {
        auto ss = [](std::span<const double> g) {
            double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
            double acc = 0.0;
            for (double x : g) acc += (x - mean) * (x - mean);
            return acc;
        };
        double total = ss(values.subspan(0, q)) + ss(values.subspan(q));
        // Relative slack so that rounding noise cannot move the elbow off a degenerate profile.
        if (q == 1 || total < best_ss - 1e-12 * (1.0 + std::abs(best_ss))) {
            best_ss = total;
            best = q;
        }
    }
    return best;
}

} // namespace detail

/// Returns the requested elbow (1 = first) of the scree profile; each further
/// elbow is found on the tail left after the previous one.
inline std::size_t select_dim(std::span<const double> spectrum, std::size_t elbow_index = 1) {
    if (elbow_index < 1) {
        throw std::invalid_argument("select_dim: elbow index starts at 1");
    }
    if (spectrum.size() < 3) {
        throw std::invalid_argument("select_dim: at least 3 spectrum values are required");
    }
    std::size_t offset = 0;
    for (std::size_t e = 1; e <= elbow_index; ++e) {
        auto tail = spectrum.subspan(offset);
        if (tail.size() < 3) {
            throw std::invalid_argument("select_dim: too few values for elbow " + std::to_string(elbow_index));
        }
        offset += detail::profile_likelihood_elbow(tail);
    }
    return offset;
}

/// Top singular values (or absolute eigenvalues) for a scree plot.
inline Eigen::VectorXd scree_values(const AdjacencyMatrix& a, Eigen::Index count) {
    count = std::min<Eigen::Index>(count, std::min(a.rows(), a.cols()));
    if (a.symmetric) {
        return ase(a, count).spectrum.cwiseAbs();
    }
    return dase(a, count).first.spectrum;
}

} // namespace lsbm

#endif
