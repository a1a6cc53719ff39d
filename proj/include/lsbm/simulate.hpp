#ifndef LSBM_SIMULATE_HPP
#define LSBM_SIMULATE_HPP

#include "lsbm/graph.hpp"
#include "lsbm/kernels.hpp"
#include "lsbm/random.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsbm {

/// One coordinate of a latent curve: f(θ) = φ(θ)ᵀc.
struct CurveComponent {
    BasisFamily basis;
    Eigen::VectorXd coef;

    double operator()(double theta) const { return basis(theta).dot(coef); }
};

/// Latent curve f_k: [support] → R^d.
struct LatentCurve {
    std::vector<CurveComponent> components;

    int dims() const { return static_cast<int>(components.size()); }
    Eigen::VectorXd operator()(double theta) const {
        Eigen::VectorXd x(dims());
        for (int j = 0; j < dims(); ++j) x(j) = components[static_cast<std::size_t>(j)](theta);
        return x;
    }
};

/// θ ~ offset + scale · Beta(a, b); Uniform(lo, hi) is Beta(1, 1) with offset lo, scale hi − lo.
struct ThetaDistribution {
    double a = 1.0;
    double b = 1.0;
    double offset = 0.0;
    double scale = 1.0;

    double sample(Philox& rng) const { return offset + scale * rng.beta(a, b); }
    double lower() const { return offset; }
    double upper() const { return offset + scale; }
};

struct LsbmSpec {
    std::string name;
    std::vector<double> weights; // η
    std::vector<LatentCurve> curves;
    ThetaDistribution theta;
    Eigen::Index n = 1000;

    int K() const { return static_cast<int>(curves.size()); }
    int dims() const { return curves.empty() ? 0 : curves.front().dims(); }

    /// Checks η and that every inner product f_k(θ)ᵀf_l(θ') over a grid on the θ support lies in [0, 1].
    void validate(int grid = 1000) const {
        if (curves.empty() || weights.size() != curves.size()) throw std::invalid_argument("spec: one weight per curve required");
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw std::invalid_argument("spec: weights must be nonnegative");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("spec: weights must sum to 1");
        for (const auto& c : curves) {
            if (c.dims() != dims()) throw std::invalid_argument("spec: curves differ in dimension");
        }
        if (!(theta.scale > 0.0 && theta.a > 0.0 && theta.b > 0.0)) throw std::invalid_argument("spec: bad theta distribution");
        Eigen::MatrixXd pts(static_cast<Eigen::Index>(grid) * K(), dims());
        for (int k = 0; k < K(); ++k) {
            for (int g = 0; g < grid; ++g) {
                const double t = theta.lower() + (theta.upper() - theta.lower()) * g / (grid - 1);
                pts.row(static_cast<Eigen::Index>(k) * grid + g) = curves[static_cast<std::size_t>(k)](t).transpose();
            }
        }
        const Eigen::MatrixXd ip = pts * pts.transpose();
        const double tol = 1e-12;
        if (ip.minCoeff() < -tol || ip.maxCoeff() > 1.0 + tol) {
            throw std::invalid_argument("spec '" + name + "': latent inner products leave [0, 1] (range " +
                                        std::to_string(ip.minCoeff()) + " to " + std::to_string(ip.maxCoeff()) + ")");
        }
    }
};

struct LatentSample {
    std::vector<int> z;
    Eigen::VectorXd theta;
    Eigen::MatrixXd x;
};

inline LatentSample sample_latent(const LsbmSpec& spec, Eigen::Index n, Philox& rng) {
    spec.validate();
    LatentSample out;
    out.z.resize(static_cast<std::size_t>(n));
    out.theta.resize(n);
    out.x.resize(n, spec.dims());
    for (Eigen::Index i = 0; i < n; ++i) {
        const int k = static_cast<int>(sample_discrete(spec.weights, rng));
        const double t = spec.theta.sample(rng);
        out.z[static_cast<std::size_t>(i)] = k;
        out.theta(i) = t;
        out.x.row(i) = spec.curves[static_cast<std::size_t>(k)](t).transpose();
    }
    return out;
}

/// Bernoulli(x_iᵀx'_j) edges. Undirected: i < j, mirrored, zero diagonal.
/// Directed: all i ≠ j with right positions x' (x' = x when omitted).
/// Bipartite: every (i, j) between the two position sets.
inline AdjacencyMatrix sample_rdpg(const Eigen::MatrixXd& x, Philox& rng, GraphMode mode = GraphMode::undirected,
                                   const Eigen::MatrixXd* right = nullptr) {
    const Eigen::MatrixXd& y = right ? *right : x;
    if (y.cols() != x.cols()) throw std::invalid_argument("sample_rdpg: position dimensions differ");
    if (mode != GraphMode::bipartite && y.rows() != x.rows()) {
        throw std::invalid_argument("sample_rdpg: square modes need equal node counts");
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Eigen::Index start = mode == GraphMode::undirected ? i + 1 : 0;
        for (Eigen::Index j = start; j < y.rows(); ++j) {
            if (mode == GraphMode::directed && i == j) continue;
            const double p = x.row(i).dot(y.row(j));
            if (p < -1e-12 || p > 1.0 + 1e-12) {
                throw std::domain_error("sample_rdpg: inner product " + std::to_string(p) + " outside [0, 1] for pair (" +
                                        std::to_string(i) + "," + std::to_string(j) + ")");
            }
            if (rng.uniform() < p) {
                trips.emplace_back(static_cast<int>(i), static_cast<int>(j), 1.0);
                if (mode == GraphMode::undirected) trips.emplace_back(static_cast<int>(j), static_cast<int>(i), 1.0);
            }
        }
    }
    AdjacencyMatrix a;
    a.entries.resize(x.rows(), y.rows());
    a.entries.setFromTriplets(trips.begin(), trips.end());
    a.entries.makeCompressed();
    a.symmetric = mode == GraphMode::undirected;
    return a;
}

namespace detail {

inline CurveComponent poly(std::initializer_list<double> coef) {
    Eigen::VectorXd c(static_cast<Eigen::Index>(coef.size()));
    Eigen::Index k = 0;
    for (double v : coef) c(k++) = v;
    const int degree = static_cast<int>(coef.size()) - 1;
    return {degree == 0 ? BasisFamily::constant() : BasisFamily::polynomial(degree), c};
}

inline CurveComponent scaled_theta(double v) {
    Eigen::VectorXd c(1);
    c(0) = v;
    return {BasisFamily::homogeneous_linear(), c};
}

} // namespace detail

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"sbm_fig3a", "dcsbm_fig3b", "quadratic_fig3c", "hardy_weinberg"};
    return names;
}

/// Simulation presets for the synthetic experiments.
///
/// sbm_fig3a       f_k(θ) = ν_k, ν₁ = (3/4, 1/4), ν₂ = (1/4, 3/4), θ ~ Beta(1, 1)
/// dcsbm_fig3b     f_k(θ) = θν_k with the same ν, θ ~ Beta(1, 1)
/// quadratic_fig3c f_k(θ) = (θ, α_kθ² + β_kθ + γ_k) with α = (−1, −4), β = (1, 1),
///                 γ = (0, 0), θ ~ ½·Beta(2, 1) so that every inner product
///                 stays in [0, 1]
/// hardy_weinberg  f₁(θ) = ((1−θ)², θ², 2θ(1−θ)), f₂(θ) = (θ², 2θ(1−θ), (1−θ)²), θ ~ Uniform(0, 1)
inline LsbmSpec preset(const std::string& name) {
    using detail::poly;
    LsbmSpec s;
    s.name = name;
    s.n = 1000;
    s.weights = {0.5, 0.5};
    if (name == "sbm_fig3a") {
        s.curves = {LatentCurve{{poly({0.75}), poly({0.25})}}, LatentCurve{{poly({0.25}), poly({0.75})}}};
    } else if (name == "dcsbm_fig3b") {
        s.curves = {LatentCurve{{detail::scaled_theta(0.75), detail::scaled_theta(0.25)}},
                    LatentCurve{{detail::scaled_theta(0.25), detail::scaled_theta(0.75)}}};
    } else if (name == "quadratic_fig3c") {
        s.curves = {LatentCurve{{poly({0.0, 1.0}), poly({0.0, 1.0, -1.0})}},
                    LatentCurve{{poly({0.0, 1.0}), poly({0.0, 1.0, -4.0})}}};
        s.theta = {2.0, 1.0, 0.0, 0.5};
    } else if (name == "hardy_weinberg") {
        s.curves = {LatentCurve{{poly({1.0, -2.0, 1.0}), poly({0.0, 0.0, 1.0}), poly({0.0, 2.0, -2.0})}},
                    LatentCurve{{poly({0.0, 0.0, 1.0}), poly({0.0, 2.0, -2.0}), poly({1.0, -2.0, 1.0})}}};
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    s.validate();
    return s;
}

// Spec files: {"name": ..., "n": ..., "weights": [...],
//              "theta": {"a", "b", "offset", "scale"},
//              "curves": [[{"basis": <kernel-style basis>, "coef": [...]}, ...], ...]}

inline nlohmann::json spec_to_json(const LsbmSpec& s) {
    using nlohmann::json;
    json curves = json::array();
    for (const auto& c : s.curves) {
        json comps = json::array();
        for (const auto& comp : c.components) {
            json basis = kernel_to_json(KernelSpec::zellner(comp.basis));
            basis.erase("delta");
            comps.push_back({{"basis", basis}, {"coef", std::vector<double>(comp.coef.data(), comp.coef.data() + comp.coef.size())}});
        }
        curves.push_back(comps);
    }
    return {{"name", s.name},
            {"n", s.n},
            {"weights", s.weights},
            {"theta", {{"a", s.theta.a}, {"b", s.theta.b}, {"offset", s.theta.offset}, {"scale", s.theta.scale}}},
            {"curves", curves}};
}

inline LsbmSpec spec_from_json(const nlohmann::json& j) {
    LsbmSpec s;
    s.name = j.value("name", std::string("custom"));
    s.n = j.value("n", static_cast<Eigen::Index>(1000));
    s.weights = j.at("weights").get<std::vector<double>>();
    if (j.contains("theta")) {
        const auto& t = j.at("theta");
        s.theta = {t.value("a", 1.0), t.value("b", 1.0), t.value("offset", 0.0), t.value("scale", 1.0)};
    }
    for (const auto& c : j.at("curves")) {
        LatentCurve curve;
        for (const auto& comp : c) {
            KernelSpec k = kernel_from_json(comp.at("basis"));
            if (k.is_fixed_identity()) throw std::invalid_argument("curve components need a basis");
            const auto coef = comp.at("coef").get<std::vector<double>>();
            if (static_cast<int>(coef.size()) != k.basis().dim()) throw std::invalid_argument("curve coefficient count mismatch");
            curve.components.push_back({k.basis(), Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()))});
        }
        s.curves.push_back(std::move(curve));
    }
    s.validate();
    return s;
}

} // namespace lsbm

#endif
