#ifndef LSBM_KERNELS_HPP
#define LSBM_KERNELS_HPP

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsbm {

/// Upper bound on basis dimension; lets per-community statistics live on the stack.
inline constexpr int kMaxBasis = 12;

using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxBasis, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxBasis, kMaxBasis>;

enum class BasisKind {
    constant,               // (1)
    homogeneous_linear,     // (θ)
    affine_linear,          // (1, θ)
    polynomial,             // (1, θ, …, θ^p)
    homogeneous_polynomial, // (θ, …, θ^p)
    truncated_power_spline  // (θ, θ², θ³, (θ-τ₁)₊³, …)
};

/// Basis functions φ(θ) of a dot-product kernel.
class BasisFamily {
public:
    BasisFamily() = default;

    static BasisFamily constant() { return BasisFamily(BasisKind::constant, 0, {}); }
    static BasisFamily homogeneous_linear() { return BasisFamily(BasisKind::homogeneous_linear, 1, {}); }
    static BasisFamily affine_linear() { return BasisFamily(BasisKind::affine_linear, 1, {}); }
    static BasisFamily polynomial(int degree, bool intercept = true) {
        if (degree < 1) throw std::invalid_argument("polynomial basis needs degree >= 1");
        return BasisFamily(intercept ? BasisKind::polynomial : BasisKind::homogeneous_polynomial, degree, {});
    }
    static BasisFamily homogeneous_polynomial(int degree) { return polynomial(degree, false); }
    static BasisFamily spline(std::vector<double> knots) {
        for (std::size_t l = 1; l < knots.size(); ++l) {
            if (!(knots[l] > knots[l - 1])) throw std::invalid_argument("spline knots must be strictly increasing");
        }
        return BasisFamily(BasisKind::truncated_power_spline, 3, std::move(knots));
    }
    /// Three equispaced knots strictly inside [lo, hi].
    static BasisFamily spline_in_range(double lo, double hi, int count = 3) {
        std::vector<double> knots;
        for (int l = 1; l <= count; ++l) knots.push_back(lo + (hi - lo) * l / (count + 1));
        return spline(std::move(knots));
    }

    BasisKind kind() const { return kind_; }
    int degree() const { return degree_; }
    const std::vector<double>& knots() const { return knots_; }
    bool has_intercept() const {
        return kind_ == BasisKind::constant || kind_ == BasisKind::affine_linear || kind_ == BasisKind::polynomial;
    }

    int dim() const {
        switch (kind_) {
        case BasisKind::constant:
        case BasisKind::homogeneous_linear: return 1;
        case BasisKind::affine_linear: return 2;
        case BasisKind::polynomial: return degree_ + 1;
        case BasisKind::homogeneous_polynomial: return degree_;
        case BasisKind::truncated_power_spline: return 3 + static_cast<int>(knots_.size());
        }
        return 0;
    }

    SmallVec operator()(double theta) const {
        SmallVec out(dim());
        switch (kind_) {
        case BasisKind::constant: out(0) = 1.0; break;
        case BasisKind::homogeneous_linear: out(0) = theta; break;
        case BasisKind::affine_linear:
            out(0) = 1.0;
            out(1) = theta;
            break;
        case BasisKind::polynomial: {
            double p = 1.0;
            for (int e = 0; e <= degree_; ++e, p *= theta) out(e) = p;
            break;
        }
        case BasisKind::homogeneous_polynomial: {
            double p = theta;
            for (int e = 0; e < degree_; ++e, p *= theta) out(e) = p;
            break;
        }
        case BasisKind::truncated_power_spline: {
            out(0) = theta;
            out(1) = theta * theta;
            out(2) = theta * theta * theta;
            for (std::size_t l = 0; l < knots_.size(); ++l) {
                double r = std::max(0.0, theta - knots_[l]);
                out(3 + static_cast<int>(l)) = r * r * r;
            }
            break;
        }
        }
        return out;
    }

    /// n × q design matrix with rows φ(θ_i).
    Eigen::MatrixXd design(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
        Eigen::MatrixXd out(theta.size(), dim());
        for (Eigen::Index i = 0; i < theta.size(); ++i) out.row(i) = (*this)(theta(i)).transpose();
        return out;
    }

    friend bool operator==(const BasisFamily& a, const BasisFamily& b) {
        return a.kind_ == b.kind_ && a.degree_ == b.degree_ && a.knots_ == b.knots_;
    }

private:
    BasisFamily(BasisKind kind, int degree, std::vector<double> knots)
        : kind_(kind), degree_(degree), knots_(std::move(knots)) {
        if (dim() > kMaxBasis) throw std::invalid_argument("basis dimension exceeds " + std::to_string(kMaxBasis));
    }

    BasisKind kind_ = BasisKind::constant;
    int degree_ = 0;
    std::vector<double> knots_;
};

/// GP covariance ξ(θ,θ') = φ(θ)ᵀ Δ φ(θ') for one (community, dimension),
/// or the fixed-identity marker f(θ) = θ with no free coefficients.
///
/// An unset Δ means "Zellner": it is resolved once from the initial θ by
/// resolve_zellner() before sampling.
class KernelSpec {
public:
    KernelSpec() = default;

    static KernelSpec fixed_identity() {
        KernelSpec k;
        k.identity_ = true;
        return k;
    }
    static KernelSpec zellner(BasisFamily basis) {
        KernelSpec k;
        k.basis_ = std::move(basis);
        return k;
    }
    static KernelSpec with_delta(BasisFamily basis, const Eigen::MatrixXd& delta) {
        KernelSpec k;
        k.basis_ = std::move(basis);
        k.set_delta(delta);
        return k;
    }

    bool is_fixed_identity() const { return identity_; }
    bool resolved() const { return identity_ || delta_.has_value(); }
    const BasisFamily& basis() const { return basis_; }
    int dim() const { return identity_ ? 0 : basis_.dim(); }

    const SmallMat& delta() const { return checked(delta_); }
    const SmallMat& delta_inverse() const { return checked(delta_inv_); }
    double delta_logdet() const {
        checked(delta_);
        return delta_logdet_;
    }

    void set_delta(const Eigen::MatrixXd& delta) {
        if (identity_) throw std::logic_error("fixed-identity kernel has no scaling matrix");
        const int q = basis_.dim();
        if (delta.rows() != q || delta.cols() != q) {
            throw std::invalid_argument("scaling matrix must be " + std::to_string(q) + "x" + std::to_string(q));
        }
        if ((delta - delta.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + delta.cwiseAbs().maxCoeff())) {
            throw std::invalid_argument("scaling matrix must be symmetric");
        }
        SmallMat sym = 0.5 * (delta + delta.transpose());
        Eigen::LLT<SmallMat> llt(sym);
        if (llt.info() != Eigen::Success) {
            throw std::invalid_argument("scaling matrix must be positive definite");
        }
        delta_ = sym;
        delta_inv_ = llt.solve(SmallMat::Identity(q, q));
        delta_logdet_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    }

    /// ξ(θ_a, θ_b).
    double operator()(double ta, double tb) const {
        if (identity_) throw std::logic_error("fixed-identity dimension has no covariance kernel");
        return basis_(ta).dot(delta() * basis_(tb));
    }

    friend bool operator==(const KernelSpec& a, const KernelSpec& b) {
        if (a.identity_ != b.identity_) return false;
        if (a.identity_) return true;
        if (!(a.basis_ == b.basis_) || a.delta_.has_value() != b.delta_.has_value()) return false;
        return !a.delta_ || *a.delta_ == *b.delta_;
    }

private:
    static const SmallMat& checked(const std::optional<SmallMat>& m) {
        if (!m) throw std::logic_error("kernel scaling matrix not resolved");
        return *m;
    }

    bool identity_ = false;
    BasisFamily basis_;
    std::optional<SmallMat> delta_;
    std::optional<SmallMat> delta_inv_;
    double delta_logdet_ = 0.0;
};

/// One kernel per embedding dimension for a community.
using KernelAssignment = std::vector<KernelSpec>;

/// Uniform assignment helper: `first` on dimension 1 (often fixed identity),
/// `rest` on the others.
inline KernelAssignment make_assignment(int d, const KernelSpec& rest, std::optional<KernelSpec> first = std::nullopt) {
    KernelAssignment out(static_cast<std::size_t>(d), rest);
    if (first && d > 0) out[0] = *first;
    return out;
}

/// Finite menu of candidate assignments with prior weights.
struct KernelMenu {
    std::vector<KernelAssignment> options;
    std::vector<double> log_weights;

    std::size_t size() const { return options.size(); }

    static KernelMenu single(KernelAssignment a) {
        KernelMenu m;
        m.options.push_back(std::move(a));
        m.log_weights.push_back(0.0);
        return m;
    }

    void add(KernelAssignment a, double weight) {
        if (!(weight > 0.0)) throw std::invalid_argument("kernel prior weight must be positive");
        options.push_back(std::move(a));
        log_weights.push_back(std::log(weight));
    }

    /// Renormalises the weights to a probability vector in log space.
    void normalise() {
        if (options.empty()) throw std::invalid_argument("kernel menu is empty");
        double top = *std::max_element(log_weights.begin(), log_weights.end());
        double acc = 0.0;
        for (double w : log_weights) acc += std::exp(w - top);
        double lse = top + std::log(acc);
        for (double& w : log_weights) w -= lse;
    }

    int dims() const { return options.empty() ? 0 : static_cast<int>(options.front().size()); }
};

/// Gram matrix Ξ with entries ξ(θ_a[l], θ_b[l']).
inline Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& theta_a,
                            const Eigen::Ref<const Eigen::VectorXd>& theta_b) {
    if (spec.is_fixed_identity()) {
        throw std::invalid_argument("gram: fixed-identity dimension has no covariance kernel");
    }
    Eigen::MatrixXd pa = spec.basis().design(theta_a);
    Eigen::MatrixXd pb = spec.basis().design(theta_b);
    return pa * Eigen::MatrixXd(spec.delta()) * pb.transpose();
}

/// Zellner g-prior scaling n²(ΦᵀΦ + εI)⁻¹ over all n nodes, ε = 1e-8·tr(ΦᵀΦ)/q.
inline Eigen::MatrixXd zellner_delta(const BasisFamily& basis, const Eigen::Ref<const Eigen::VectorXd>& theta_all) {
    const auto n = static_cast<double>(theta_all.size());
    const int q = basis.dim();
    if (theta_all.size() < q) {
        throw std::invalid_argument("zellner_delta: need at least as many nodes as basis functions");
    }
    Eigen::MatrixXd phi = basis.design(theta_all);
    Eigen::MatrixXd ptp = phi.transpose() * phi;
    double jitter = 1e-8 * ptp.trace() / q;
    ptp.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(ptp);
    if (llt.info() != Eigen::Success || !(jitter > 0.0)) {
        throw std::runtime_error("zellner_delta: design matrix is rank deficient (degenerate theta configuration)");
    }
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(q, q));
    Eigen::MatrixXd delta = n * n * inv;
    return 0.5 * (delta + delta.transpose());
}

/// Resolves every Zellner kernel in the menu against the given θ.
inline void resolve_zellner(KernelMenu& menu, const Eigen::Ref<const Eigen::VectorXd>& theta_all) {
    for (auto& option : menu.options) {
        for (auto& spec : option) {
            if (!spec.resolved()) spec.set_delta(zellner_delta(spec.basis(), theta_all));
        }
    }
}

// JSON form: {"variant": ..., "degree": p, "intercept": bool, "knots": [...],
//             "delta": "zellner" | [[...], ...]}

inline const char* to_string(BasisKind k) {
    switch (k) {
    case BasisKind::constant: return "constant";
    case BasisKind::homogeneous_linear: return "homogeneous_linear";
    case BasisKind::affine_linear: return "affine_linear";
    case BasisKind::polynomial: return "polynomial";
    case BasisKind::homogeneous_polynomial: return "homogeneous_polynomial";
    case BasisKind::truncated_power_spline: return "truncated_power_spline";
    }
    return "?";
}

inline nlohmann::json kernel_to_json(const KernelSpec& spec) {
    using nlohmann::json;
    if (spec.is_fixed_identity()) return json{{"variant", "fixed_identity"}};
    const auto& b = spec.basis();
    json j{{"variant", to_string(b.kind())}};
    if (b.kind() == BasisKind::polynomial || b.kind() == BasisKind::homogeneous_polynomial) {
        j["degree"] = b.degree();
        j["intercept"] = b.has_intercept();
    }
    if (b.kind() == BasisKind::truncated_power_spline) j["knots"] = b.knots();
    if (!spec.resolved()) {
        j["delta"] = "zellner";
    } else {
        json rows = json::array();
        for (Eigen::Index r = 0; r < spec.delta().rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < spec.delta().cols(); ++c) row.push_back(spec.delta()(r, c));
            rows.push_back(row);
        }
        j["delta"] = rows;
    }
    return j;
}

/// Parses a kernel spec. Unknown keys are rejected. A spline with
/// "knots": "auto" (or no knots) places three equispaced knots inside
/// knot_range, which the caller takes from the data.
inline KernelSpec kernel_from_json(const nlohmann::json& j, std::optional<std::pair<double, double>> knot_range = std::nullopt) {
    static const std::vector<std::string> allowed{"variant", "degree", "intercept", "knots", "delta"};
    if (!j.is_object()) throw std::invalid_argument("kernel spec must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw std::invalid_argument("unknown kernel key '" + key + "'");
        }
    }
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "fixed_identity") {
        if (j.size() != 1) throw std::invalid_argument("fixed_identity takes no parameters");
        return KernelSpec::fixed_identity();
    }
    BasisFamily basis;
    if (variant == "constant") {
        basis = BasisFamily::constant();
    } else if (variant == "homogeneous_linear") {
        basis = BasisFamily::homogeneous_linear();
    } else if (variant == "affine_linear") {
        basis = BasisFamily::affine_linear();
    } else if (variant == "polynomial" || variant == "homogeneous_polynomial") {
        bool intercept = variant == "polynomial";
        if (j.contains("intercept")) intercept = j.at("intercept").get<bool>();
        basis = BasisFamily::polynomial(j.at("degree").get<int>(), intercept);
    } else if (variant == "truncated_power_spline") {
        const auto& knots = j.contains("knots") ? j.at("knots") : nlohmann::json("auto");
        if (knots.is_string() && knots.get<std::string>() == "auto") {
            if (!knot_range) throw std::invalid_argument("automatic spline knots need a data range");
            basis = BasisFamily::spline_in_range(knot_range->first, knot_range->second);
        } else {
            basis = BasisFamily::spline(knots.get<std::vector<double>>());
        }
    } else {
        throw std::invalid_argument("unknown kernel variant '" + variant + "'");
    }
    if (!j.contains("delta") || (j.at("delta").is_string() && j.at("delta").get<std::string>() == "zellner")) {
        return KernelSpec::zellner(basis);
    }
    const auto& rows = j.at("delta");
    if (!rows.is_array()) throw std::invalid_argument("delta must be \"zellner\" or a matrix");
    const int q = basis.dim();
    if (static_cast<int>(rows.size()) != q) throw std::invalid_argument("delta has wrong number of rows");
    Eigen::MatrixXd delta(q, q);
    for (int r = 0; r < q; ++r) {
        if (static_cast<int>(rows[r].size()) != q) throw std::invalid_argument("delta has wrong number of columns");
        for (int c = 0; c < q; ++c) delta(r, c) = rows[r][c].get<double>();
    }
    return KernelSpec::with_delta(basis, delta);
}

} // namespace lsbm

#endif
