#ifndef LSBM_MODEL_HPP
#define LSBM_MODEL_HPP

#include "lsbm/kernels.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsbm {

struct Hyperparams {
    double a0 = 1.0;
    double b0 = 0.001;
    double mu_theta = 0.0;
    double sigma2_theta = 10.0;
    double nu = 1.0;
    double omega = 0.1;
    double sigma2_star = 0.01;
    double sigma2_eps = 0.01;

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
        };
        positive(a0, "a0");
        positive(b0, "b0");
        positive(sigma2_theta, "sigma2_theta");
        positive(nu, "nu");
        positive(sigma2_star, "sigma2_star");
        positive(sigma2_eps, "sigma2_eps");
        if (!std::isfinite(mu_theta)) throw std::invalid_argument("mu_theta must be finite");
        if (!(omega > 0.0 && omega < 1.0)) throw std::invalid_argument("omega must lie in (0, 1)");
    }
};

/// log of the Student-t density with 2a degrees of freedom, location 0 and
/// squared scale (b/a)*inflate, evaluated at r.
inline double student_t_logpdf(double r, double a, double b, double inflate) {
    const double scale2 = 2.0 * b * inflate; // nu * s^2
    return std::lgamma(a + 0.5) - std::lgamma(a) - 0.5 * std::log(std::numbers::pi * scale2) -
           (a + 0.5) * std::log1p(r * r / scale2);
}

/// Posterior of one latent function in weight space: with design Φ and
/// targets y, P = Δ⁻¹ + ΦᵀΦ, m = P⁻¹Φᵀy, b = b0 + (yᵀy − yᵀΦm)/2.
/// Equivalent to the function-space update through (Ξ + I)⁻¹ by Woodbury.
struct DimPosterior {
    SmallMat gram;  // ΦᵀΦ
    SmallVec proj;  // Φᵀy
    double sumsq = 0.0;

    SmallMat cov;   // P⁻¹
    SmallVec mean;  // m
    double b = 0.0;
    double logdet_p = 0.0;
};

/// Sufficient statistics and cached posterior for one community under a
/// fixed kernel assignment.
class Community {
public:
    Community() = default;
    Community(const KernelAssignment* kernels, double a0, double b0) : kernels_(kernels), a0_(a0), b0_(b0) {
        dims_.resize(kernels_->size());
        for (std::size_t j = 0; j < dims_.size(); ++j) {
            const KernelSpec& spec = (*kernels_)[j];
            if (!spec.resolved()) throw std::logic_error("community kernel has an unresolved Zellner scaling");
            const int q = spec.dim();
            dims_[j].gram = SmallMat::Zero(q, q);
            dims_[j].proj = SmallVec::Zero(q);
        }
        refresh();
    }

    int size() const { return n_; }
    int dims() const { return static_cast<int>(dims_.size()); }
    const KernelAssignment& kernels() const { return *kernels_; }
    const DimPosterior& dim(int j) const { return dims_[static_cast<std::size_t>(j)]; }
    double shape() const { return a0_ + 0.5 * n_; }

    /// Adds (sign = +1) or removes (sign = -1) one observation.
    void accumulate(const double* x, double theta, double sign) {
        for (std::size_t j = 0; j < dims_.size(); ++j) {
            const KernelSpec& spec = (*kernels_)[j];
            auto& st = dims_[j];
            if (spec.is_fixed_identity()) {
                const double y = x[j] - theta;
                st.sumsq += sign * y * y;
            } else {
                const SmallVec phi = spec.basis()(theta);
                st.gram.noalias() += sign * phi * phi.transpose();
                st.proj.noalias() += (sign * x[j]) * phi;
                st.sumsq += sign * x[j] * x[j];
            }
        }
        n_ += sign > 0 ? 1 : -1;
    }

    void add(const double* x, double theta) {
        accumulate(x, theta, 1.0);
        refresh();
    }
    void remove(const double* x, double theta) {
        accumulate(x, theta, -1.0);
        refresh();
    }

    void clear() {
        for (auto& st : dims_) {
            st.gram.setZero();
            st.proj.setZero();
            st.sumsq = 0.0;
        }
        n_ = 0;
        refresh();
    }

    /// Recomputes the cached posterior from the sufficient statistics.
    void refresh() {
        for (std::size_t j = 0; j < dims_.size(); ++j) {
            const KernelSpec& spec = (*kernels_)[j];
            auto& st = dims_[j];
            if (n_ == 0) {
                st.gram.setZero();
                st.proj.setZero();
                st.sumsq = 0.0;
            }
            if (spec.is_fixed_identity()) {
                st.b = b0_ + 0.5 * std::max(st.sumsq, 0.0);
                st.logdet_p = 0.0;
                continue;
            }
            if (n_ == 0) {
                st.cov = spec.delta();
                st.mean = SmallVec::Zero(spec.dim());
                st.b = b0_;
                st.logdet_p = -spec.delta_logdet();
                continue;
            }
            SmallMat p = spec.delta_inverse() + st.gram;
            Eigen::LLT<SmallMat> llt(p);
            if (llt.info() != Eigen::Success) {
                throw std::runtime_error("community posterior precision is not positive definite");
            }
            st.cov = llt.solve(SmallMat::Identity(p.rows(), p.cols()));
            st.mean = st.cov * st.proj;
            st.b = b0_ + 0.5 * std::max(st.sumsq - st.proj.dot(st.mean), 0.0);
            st.logdet_p = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        }
    }

    /// Predictive log density of a new observation (x, theta).
    double predictive(const double* x, double theta) const {
        const double a = shape();
        double acc = 0.0;
        for (std::size_t j = 0; j < dims_.size(); ++j) {
            const KernelSpec& spec = (*kernels_)[j];
            const auto& st = dims_[j];
            if (spec.is_fixed_identity()) {
                acc += student_t_logpdf(x[j] - theta, a, st.b, 1.0);
            } else {
                const SmallVec phi = spec.basis()(theta);
                const double loc = phi.dot(st.mean);
                const double v = phi.dot(st.cov * phi);
                acc += student_t_logpdf(x[j] - loc, a, st.b, 1.0 + v);
            }
        }
        return acc;
    }

    /// Predictive log density at theta_eval of a current member (x, theta_member)
    /// after removing that member's own contribution.
    double predictive_without(const double* x, double theta_member, double theta_eval) const {
        if (n_ <= 1) return prior_predictive(x, theta_eval);
        const double a = shape() - 0.5;
        double acc = 0.0;
        for (std::size_t j = 0; j < dims_.size(); ++j) {
            const KernelSpec& spec = (*kernels_)[j];
            const auto& st = dims_[j];
            if (spec.is_fixed_identity()) {
                const double ym = x[j] - theta_member;
                const double b = std::max(st.b - 0.5 * ym * ym, b0_);
                acc += student_t_logpdf(x[j] - theta_eval, a, b, 1.0);
                continue;
            }
            // Rank-one downdate of P by φφᵀ (Sherman-Morrison).
            const SmallVec phi_m = spec.basis()(theta_member);
            const SmallVec u = st.cov * phi_m;
            const double lev = phi_m.dot(u);
            const double keep = 1.0 - lev;
            const double resid = x[j] - phi_m.dot(st.mean);
            const double b = std::max(st.b - 0.5 * resid * resid / keep, b0_);
            const SmallVec phi_e = theta_eval == theta_member ? phi_m : spec.basis()(theta_eval);
            const double pu = phi_e.dot(u);
            const double loc = phi_e.dot(st.mean) - pu * resid / keep;
            const double v = phi_e.dot(st.cov * phi_e) + pu * pu / keep;
            acc += student_t_logpdf(x[j] - loc, a, b, 1.0 + v);
        }
        return acc;
    }

    double prior_predictive(const double* x, double theta) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < dims_.size(); ++j) {
            const KernelSpec& spec = (*kernels_)[j];
            if (spec.is_fixed_identity()) {
                acc += student_t_logpdf(x[j] - theta, a0_, b0_, 1.0);
            } else {
                const SmallVec phi = spec.basis()(theta);
                acc += student_t_logpdf(x[j], a0_, b0_, 1.0 + phi.dot(spec.delta() * phi));
            }
        }
        return acc;
    }

    /// log p(X_{k,j} | θ) for one dimension; zero for an empty community.
    double log_marginal(int j) const {
        if (n_ == 0) return 0.0;
        const KernelSpec& spec = (*kernels_)[static_cast<std::size_t>(j)];
        const auto& st = dims_[static_cast<std::size_t>(j)];
        const double a = shape();
        double out = std::lgamma(a) - std::lgamma(a0_) + a0_ * std::log(b0_) - a * std::log(st.b) -
                     0.5 * n_ * std::log(2.0 * std::numbers::pi);
        if (!spec.is_fixed_identity()) out -= 0.5 * (spec.delta_logdet() + st.logdet_p);
        return out;
    }

    double log_marginal() const {
        double acc = 0.0;
        for (int j = 0; j < dims(); ++j) acc += log_marginal(j);
        return acc;
    }

private:
    const KernelAssignment* kernels_ = nullptr;
    double a0_ = 1.0;
    double b0_ = 0.001;
    int n_ = 0;
    std::vector<DimPosterior> dims_;
};

/// Updated hyperparameters for one (community, dimension), with the
/// posterior mean and covariance functions of the latent curve.
struct PosteriorParams {
    double a = 0.0;
    double b = 0.0;
    bool fixed_identity = false;
    BasisFamily basis;
    SmallVec mean;
    SmallMat cov;

    double mu_star(double theta) const { return fixed_identity ? theta : basis(theta).dot(mean); }
    double xi_star(double ta, double tb) const {
        return fixed_identity ? 0.0 : basis(ta).dot(cov * basis(tb));
    }
};

/// Collapsed sampler state: allocations z (0-based), latent parameters θ,
/// community count K (empty communities allowed) and a kernel-menu index
/// per community.
class ModelState {
public:
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    ModelState(const Eigen::MatrixXd& x, Hyperparams hyper, std::shared_ptr<const KernelMenu> menu)
        : x_(x), hyper_(hyper), menu_(std::move(menu)) {
        hyper_.validate();
        if (!menu_ || menu_->size() == 0) throw std::invalid_argument("kernel menu is empty");
        for (const auto& option : menu_->options) {
            if (static_cast<Eigen::Index>(option.size()) != x_.cols()) {
                throw std::invalid_argument("kernel assignment length differs from embedding dimension");
            }
        }
    }

    /// Sets z, θ and the per-community kernels; K = kernel_ids.size().
    void initialise(std::vector<int> z, Eigen::VectorXd theta, std::vector<int> kernel_ids) {
        if (static_cast<Eigen::Index>(z.size()) != n() || theta.size() != n()) {
            throw std::invalid_argument("state initialisation: length mismatch");
        }
        if (kernel_ids.empty()) throw std::invalid_argument("state initialisation: K must be at least 1");
        for (int k : z) {
            if (k < 0 || k >= static_cast<int>(kernel_ids.size())) {
                throw std::invalid_argument("state initialisation: label out of range");
            }
        }
        for (int id : kernel_ids) check_kernel_id(id);
        z_ = std::move(z);
        theta_ = std::move(theta);
        kernel_ids_ = std::move(kernel_ids);
        rebuild();
    }

    Eigen::Index n() const { return x_.rows(); }
    Eigen::Index d() const { return x_.cols(); }
    int K() const { return static_cast<int>(communities_.size()); }
    int z(Eigen::Index i) const { return z_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& labels() const { return z_; }
    double theta(Eigen::Index i) const { return theta_(i); }
    const Eigen::VectorXd& thetas() const { return theta_; }
    const double* x(Eigen::Index i) const { return x_.data() + i * x_.cols(); }
    const RowMatrix& data() const { return x_; }
    const Hyperparams& hyper() const { return hyper_; }
    const KernelMenu& menu() const { return *menu_; }
    const std::shared_ptr<const KernelMenu>& menu_ptr() const { return menu_; }
    int kernel_id(int k) const { return kernel_ids_[static_cast<std::size_t>(k)]; }
    const std::vector<int>& kernel_ids() const { return kernel_ids_; }
    const Community& community(int k) const { return communities_[static_cast<std::size_t>(k)]; }
    int count(int k) const { return community(k).size(); }

    int nonempty() const {
        int c = 0;
        for (const auto& com : communities_) c += com.size() > 0;
        return c;
    }

    std::vector<Eigen::Index> members(int k) const {
        std::vector<Eigen::Index> out;
        for (Eigen::Index i = 0; i < n(); ++i) {
            if (z_[static_cast<std::size_t>(i)] == k) out.push_back(i);
        }
        return out;
    }

    Community make_community(int kernel_id) const {
        check_kernel_id(kernel_id);
        return Community(&menu_->options[static_cast<std::size_t>(kernel_id)], hyper_.a0, hyper_.b0);
    }

    void move(Eigen::Index i, int k) {
        const int old = z(i);
        if (old == k) return;
        communities_[static_cast<std::size_t>(old)].remove(x(i), theta_(i));
        communities_[static_cast<std::size_t>(k)].add(x(i), theta_(i));
        z_[static_cast<std::size_t>(i)] = k;
    }

    void set_theta(Eigen::Index i, double t) {
        auto& com = communities_[static_cast<std::size_t>(z(i))];
        com.accumulate(x(i), theta_(i), -1.0);
        theta_(i) = t;
        com.add(x(i), t);
    }

    void set_kernel(int k, int id) {
        check_kernel_id(id);
        kernel_ids_[static_cast<std::size_t>(k)] = id;
        rebuild_community(k);
    }

    /// Appends an empty community; returns its label.
    int add_community(int id) {
        check_kernel_id(id);
        kernel_ids_.push_back(id);
        communities_.push_back(make_community(id));
        return K() - 1;
    }

    /// Drops the last community, which must be empty.
    void pop_community() {
        if (K() <= 1) throw std::logic_error("cannot remove the only community");
        if (communities_.back().size() != 0) throw std::logic_error("only an empty community can be removed");
        communities_.pop_back();
        kernel_ids_.pop_back();
    }

    /// Exchanges labels a and b everywhere.
    void swap_labels(int a, int b) {
        if (a == b) return;
        for (int& k : z_) {
            if (k == a) {
                k = b;
            } else if (k == b) {
                k = a;
            }
        }
        std::swap(communities_[static_cast<std::size_t>(a)], communities_[static_cast<std::size_t>(b)]);
        std::swap(kernel_ids_[static_cast<std::size_t>(a)], kernel_ids_[static_cast<std::size_t>(b)]);
    }

    /// Moves every member of community `from` into `into` (kernels unchanged).
    void absorb(int into, int from, int into_kernel) {
        for (Eigen::Index i = 0; i < n(); ++i) {
            if (z_[static_cast<std::size_t>(i)] == from) z_[static_cast<std::size_t>(i)] = into;
        }
        kernel_ids_[static_cast<std::size_t>(into)] = into_kernel;
        rebuild_community(into);
        rebuild_community(from);
    }

    /// Assigns a batch of nodes to label k and rebuilds every touched community.
    void relabel(const std::vector<Eigen::Index>& nodes, int k) {
        std::vector<char> touched(static_cast<std::size_t>(K()), 0);
        touched[static_cast<std::size_t>(k)] = 1;
        for (Eigen::Index i : nodes) {
            touched[static_cast<std::size_t>(z(i))] = 1;
            z_[static_cast<std::size_t>(i)] = k;
        }
        for (int c = 0; c < K(); ++c) {
            if (touched[static_cast<std::size_t>(c)]) rebuild_community(c);
        }
    }

    /// Recomputes every community's statistics from scratch.
    void rebuild() {
        communities_.clear();
        for (int id : kernel_ids_) communities_.push_back(make_community(id));
        for (Eigen::Index i = 0; i < n(); ++i) {
            communities_[static_cast<std::size_t>(z(i))].accumulate(x(i), theta_(i), 1.0);
        }
        for (auto& com : communities_) com.refresh();
    }

    void rebuild_community(int k) {
        Community com = make_community(kernel_id(k));
        for (Eigen::Index i = 0; i < n(); ++i) {
            if (z(i) == k) com.accumulate(x(i), theta_(i), 1.0);
        }
        com.refresh();
        communities_[static_cast<std::size_t>(k)] = std::move(com);
    }

private:
    void check_kernel_id(int id) const {
        if (id < 0 || id >= static_cast<int>(menu_->size())) throw std::out_of_range("kernel id out of range");
    }

    RowMatrix x_;
    Hyperparams hyper_;
    std::shared_ptr<const KernelMenu> menu_;
    std::vector<int> z_;
    Eigen::VectorXd theta_;
    std::vector<int> kernel_ids_;
    std::vector<Community> communities_;
};

inline PosteriorParams posterior_params(const ModelState& state, int k, int j) {
    const Community& com = state.community(k);
    const KernelSpec& spec = com.kernels()[static_cast<std::size_t>(j)];
    PosteriorParams out;
    out.a = com.shape();
    out.b = com.dim(j).b;
    out.fixed_identity = spec.is_fixed_identity();
    if (!out.fixed_identity) {
        out.basis = spec.basis();
        out.mean = com.dim(j).mean;
        out.cov = com.dim(j).cov;
    }
    return out;
}

/// log p(x_i | z_i = k, rest). With leave_out, node i's own contribution is
/// removed from its current community first.
inline double predictive_logpdf(const ModelState& state, Eigen::Index i, int k, bool leave_out = true) {
    const Community& com = state.community(k);
    if (leave_out && state.z(i) == k) return com.predictive_without(state.x(i), state.theta(i), state.theta(i));
    return com.predictive(state.x(i), state.theta(i));
}

inline double marginal_loglik(const ModelState& state, int k, int j) { return state.community(k).log_marginal(j); }

inline double marginal_loglik(const ModelState& state) {
    double acc = 0.0;
    for (int k = 0; k < state.K(); ++k) acc += state.community(k).log_marginal();
    return acc;
}

/// Dirichlet-multinomial mass Γ(ν)∏Γ(n_k+ν/K) / (Γ(ν/K)^K Γ(n+ν)), from counts.
inline double log_prior_counts(const std::vector<int>& counts, double nu) {
    const auto K = static_cast<double>(counts.size());
    double n = 0.0;
    double acc = std::lgamma(nu);
    for (int c : counts) {
        n += c;
        if (c > 0) acc += std::lgamma(c + nu / K) - std::lgamma(nu / K);
    }
    return acc - std::lgamma(n + nu);
}

inline double log_prior_z(const std::vector<int>& z, int K, double nu) {
    if (K < 1) throw std::invalid_argument("log_prior_z: K must be at least 1");
    std::vector<int> counts(static_cast<std::size_t>(K), 0);
    for (int k : z) {
        if (k < 0 || k >= K) throw std::out_of_range("log_prior_z: label out of range");
        ++counts[static_cast<std::size_t>(k)];
    }
    return log_prior_counts(counts, nu);
}

inline double conditional_prior_z(const ModelState& state, Eigen::Index i, int k) {
    const double nu = state.hyper().nu;
    const int others = state.count(k) - (state.z(i) == k ? 1 : 0);
    return (others + nu / state.K()) / (static_cast<double>(state.n()) - 1.0 + nu);
}

inline double log_prior_theta(double theta, const Hyperparams& h) {
    const double r = theta - h.mu_theta;
    return -0.5 * std::log(2.0 * std::numbers::pi * h.sigma2_theta) - 0.5 * r * r / h.sigma2_theta;
}

inline double log_prior_K(int K, double omega) {
    if (K < 1) throw std::invalid_argument("log_prior_K: K must be at least 1");
    return std::log(omega) + (K - 1) * std::log1p(-omega);
}

/// log p(X|K,z,θ) + log p(z|K) + log p(θ) + log p(K).
inline double joint_log_score(const ModelState& state) {
    std::vector<int> counts(static_cast<std::size_t>(state.K()));
    for (int k = 0; k < state.K(); ++k) counts[static_cast<std::size_t>(k)] = state.count(k);
    double acc = marginal_loglik(state) + log_prior_counts(counts, state.hyper().nu) + log_prior_K(state.K(), state.hyper().omega);
    for (Eigen::Index i = 0; i < state.n(); ++i) acc += log_prior_theta(state.theta(i), state.hyper());
    return acc;
}

} // namespace lsbm

#endif
