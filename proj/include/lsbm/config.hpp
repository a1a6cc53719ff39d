#ifndef LSBM_CONFIG_HPP
#define LSBM_CONFIG_HPP

#include "lsbm/graph.hpp"
#include "lsbm/kernels.hpp"
#include "lsbm/model.hpp"
#include "lsbm/sampler.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsbm {

inline constexpr int kConfigVersion = 1;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Everything a fit needs. Fields left unset fall back to data-driven
/// defaults: mu_theta to the mean of the first embedding coordinate, d to the
/// requested scree elbow.
struct RunConfig {
    std::string graph;
    GraphMode mode = GraphMode::undirected;
    NodeIndexing indexing = NodeIndexing::interned;
    std::string embedding;
    std::optional<int> d;
    int elbow = 1;
    int K = 2;
    bool K_unknown = false;
    Hyperparams hyper;
    bool mu_theta_set = false;
    ThetaInit theta_init = ThetaInit::first_coordinate_noise;
    nlohmann::json kernels = nlohmann::json::array({{{"weight", 1.0}, {"rest", {{"variant", "polynomial"}, {"degree", 2}}}}});
    std::vector<int> community_kernels;
    McmcConfig mcmc;
    int chains = 1;
    std::string output = "lsbm_out";
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

inline NodeIndexing parse_indexing(const std::string& s) {
    if (s == "interned") return NodeIndexing::interned;
    if (s == "zero_based") return NodeIndexing::zero_based;
    if (s == "one_based") return NodeIndexing::one_based;
    throw ConfigError("unknown node indexing '" + s + "'");
}

inline const char* to_string(NodeIndexing i) {
    switch (i) {
    case NodeIndexing::interned: return "interned";
    case NodeIndexing::zero_based: return "zero_based";
    case NodeIndexing::one_based: return "one_based";
    }
    return "?";
}

} // namespace detail

inline nlohmann::json hyper_to_json(const Hyperparams& h, bool mu_set) {
    nlohmann::json j{{"a0", h.a0},       {"b0", h.b0},       {"sigma2_theta", h.sigma2_theta}, {"nu", h.nu},
                     {"omega", h.omega}, {"sigma2_star", h.sigma2_star}, {"sigma2_eps", h.sigma2_eps}};
    j["mu_theta"] = mu_set ? nlohmann::json(h.mu_theta) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
    using nlohmann::json;
    const auto& m = c.mcmc;
    json mcmc{{"n_samples", m.n_samples},   {"burn_in", m.burn_in},       {"thinning", m.thinning},
              {"seed", m.seed},             {"chains", c.chains},         {"p_z_scan", m.p_z_scan},
              {"p_theta_scan", m.p_theta_scan}, {"p_split_merge", m.p_split_merge}, {"p_empty", m.p_empty},
              {"p_kernel", m.p_kernel}};
    return {{"version", kConfigVersion},
            {"graph", c.graph},
            {"mode", to_string(c.mode)},
            {"indexing", detail::to_string(c.indexing)},
            {"embedding", c.embedding},
            {"d", c.d ? json(*c.d) : json(nullptr)},
            {"elbow", c.elbow},
            {"K", c.K},
            {"K_unknown", c.K_unknown},
            {"hyperparameters", hyper_to_json(c.hyper, c.mu_theta_set)},
            {"theta_init", to_string(c.theta_init)},
            {"kernels", c.kernels},
            {"community_kernels", c.community_kernels},
            {"mcmc", mcmc},
            {"output", c.output}};
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    detail::reject_unknown(j, {"version", "graph", "mode", "indexing", "embedding", "d", "elbow", "K", "K_unknown",
                               "hyperparameters", "theta_init", "kernels", "community_kernels", "mcmc", "output"},
                           "config");
    RunConfig c;
    try {
        if (j.contains("version") && j.at("version").get<int>() != kConfigVersion) {
            throw ConfigError("unsupported config version " + j.at("version").dump());
        }
        detail::read_if(j, "graph", c.graph);
        if (j.contains("mode")) c.mode = parse_graph_mode(j.at("mode").get<std::string>());
        if (j.contains("indexing")) c.indexing = detail::parse_indexing(j.at("indexing").get<std::string>());
        detail::read_if(j, "embedding", c.embedding);
        if (j.contains("d") && !j.at("d").is_null()) c.d = j.at("d").get<int>();
        detail::read_if(j, "elbow", c.elbow);
        detail::read_if(j, "K", c.K);
        detail::read_if(j, "K_unknown", c.K_unknown);
        if (j.contains("hyperparameters")) {
            const auto& h = j.at("hyperparameters");
            detail::reject_unknown(h, {"a0", "b0", "mu_theta", "sigma2_theta", "nu", "omega", "sigma2_star", "sigma2_eps"},
                                   "hyperparameters");
            detail::read_if(h, "a0", c.hyper.a0);
            detail::read_if(h, "b0", c.hyper.b0);
            if (h.contains("mu_theta") && !h.at("mu_theta").is_null()) {
                c.hyper.mu_theta = h.at("mu_theta").get<double>();
                c.mu_theta_set = true;
            }
            detail::read_if(h, "sigma2_theta", c.hyper.sigma2_theta);
            detail::read_if(h, "nu", c.hyper.nu);
            detail::read_if(h, "omega", c.hyper.omega);
            detail::read_if(h, "sigma2_star", c.hyper.sigma2_star);
            detail::read_if(h, "sigma2_eps", c.hyper.sigma2_eps);
        }
        if (j.contains("theta_init")) c.theta_init = parse_theta_init(j.at("theta_init").get<std::string>());
        if (j.contains("kernels")) c.kernels = j.at("kernels");
        detail::read_if(j, "community_kernels", c.community_kernels);
        if (j.contains("mcmc")) {
            const auto& m = j.at("mcmc");
            detail::reject_unknown(m, {"n_samples", "burn_in", "thinning", "seed", "chains", "p_z_scan", "p_theta_scan",
                                       "p_split_merge", "p_empty", "p_kernel"},
                                   "mcmc");
            detail::read_if(m, "n_samples", c.mcmc.n_samples);
            detail::read_if(m, "burn_in", c.mcmc.burn_in);
            detail::read_if(m, "thinning", c.mcmc.thinning);
            detail::read_if(m, "seed", c.mcmc.seed);
            detail::read_if(m, "chains", c.chains);
            detail::read_if(m, "p_z_scan", c.mcmc.p_z_scan);
            detail::read_if(m, "p_theta_scan", c.mcmc.p_theta_scan);
            detail::read_if(m, "p_split_merge", c.mcmc.p_split_merge);
            detail::read_if(m, "p_empty", c.mcmc.p_empty);
            detail::read_if(m, "p_kernel", c.mcmc.p_kernel);
        }
        detail::read_if(j, "output", c.output);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!c.kernels.is_array() || c.kernels.empty()) throw ConfigError("kernels must be a non-empty array");
    for (const auto& option : c.kernels) {
        detail::reject_unknown(option, {"weight", "first", "rest", "dims"}, "kernel option");
    }
    if (c.K < 1) throw ConfigError("K must be at least 1");
    if (c.elbow < 1) throw ConfigError("elbow must be at least 1");
    if (c.d && *c.d < 1) throw ConfigError("d must be at least 1");
    if (c.chains < 1) throw ConfigError("chains must be at least 1");
    c.hyper.validate();
    c.mcmc.K_known = c.K_unknown ? std::nullopt : std::optional<int>(c.K);
    c.mcmc.validate();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

/// Expands the kernel options into a menu for embedding dimension d. Each
/// option is either {"dims": [spec per dimension]} or {"first": spec,
/// "rest": spec} (first defaults to rest). Automatic spline knots use
/// knot_range.
inline KernelMenu build_menu(const nlohmann::json& options, int d, std::pair<double, double> knot_range) {
    KernelMenu menu;
    for (const auto& opt : options) {
        KernelAssignment a;
        if (opt.contains("dims")) {
            for (const auto& spec : opt.at("dims")) a.push_back(kernel_from_json(spec, knot_range));
            if (static_cast<int>(a.size()) != d) {
                throw ConfigError("kernel option lists " + std::to_string(a.size()) + " dimensions, embedding has " + std::to_string(d));
            }
        } else {
            if (!opt.contains("rest")) throw ConfigError("kernel option needs 'dims' or 'rest'");
            const KernelSpec rest = kernel_from_json(opt.at("rest"), knot_range);
            std::optional<KernelSpec> first;
            if (opt.contains("first")) first = kernel_from_json(opt.at("first"), knot_range);
            a = make_assignment(d, rest, first);
        }
        menu.add(std::move(a), opt.value("weight", 1.0));
    }
    menu.normalise();
    return menu;
}

} // namespace lsbm

#endif
