#include "lsbm/lsbm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lsbm;

namespace {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    return out;
}

std::string fmt(double x) { return detail::format_double(x); }

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    std::ostringstream o;
    o << std::hex << std::setw(16) << std::setfill('0') << v;
    return o.str();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        out.push_back(cell);
    }
    return out;
}

/// Reads one column of a CSV file with a header row. A single-column file is
/// read whatever its header says.
std::vector<std::string> read_column(const std::string& path, const std::string& column) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    while (std::getline(in, line) && (line.empty() || line[0] == '#')) {}
    const auto header = split_csv(line);
    std::size_t idx = 0;
    if (header.size() > 1) {
        auto it = std::find(header.begin(), header.end(), column);
        if (it == header.end()) throw std::runtime_error("'" + path + "' has no column '" + column + "'");
        idx = static_cast<std::size_t>(it - header.begin());
    }
    std::vector<std::string> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split_csv(line);
        if (idx >= cells.size()) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": missing column");
        values.push_back(cells[idx]);
    }
    return values;
}

std::vector<int> to_ints(const std::vector<std::string>& v, const std::string& what) {
    std::vector<int> out;
    for (const auto& s : v) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(s, &used));
            if (used != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw std::runtime_error(what + ": '" + s + "' is not an integer");
        }
    }
    return out;
}

Eigen::VectorXd to_doubles(const std::vector<std::string>& v, const std::string& what) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        try {
            out(static_cast<Eigen::Index>(i)) = std::stod(v[i]);
        } catch (const std::exception&) {
            throw std::runtime_error(what + ": '" + v[i] + "' is not a number");
        }
    }
    return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string preset_name;
    std::string spec_file;
    std::uint64_t seed = 1;
    long n = 0;
    std::string out;
    bool adjacency = false;
};

int cmd_simulate(const SimulateArgs& a) {
    LsbmSpec spec;
    if (!a.spec_file.empty()) {
        std::ifstream in(a.spec_file);
        if (!in) throw std::runtime_error("cannot open spec '" + a.spec_file + "'");
        spec = spec_from_json(json::parse(in));
    } else {
        spec = preset(a.preset_name);
    }
    if (a.n > 0) spec.n = a.n;
    Philox rng(a.seed);
    const LatentSample lat = sample_latent(spec, spec.n, rng);
    const AdjacencyMatrix adj = sample_rdpg(lat.x, rng);
    const Graph g = from_adjacency(adj, GraphMode::undirected);

    const fs::path dir(a.out);
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "edges.txt");
        out << "# " << spec.name << " n=" << spec.n << " seed=" << a.seed << "\n";
        write_edge_list(out, g);
    }
    {
        auto out = open_out(dir / "truth.csv");
        out << "node,z,theta";
        for (int j = 0; j < spec.dims(); ++j) out << ",x" << j + 1;
        out << "\n";
        for (Eigen::Index i = 0; i < spec.n; ++i) {
            out << i << ',' << lat.z[static_cast<std::size_t>(i)] << ',' << fmt(lat.theta(i));
            for (int j = 0; j < spec.dims(); ++j) out << ',' << fmt(lat.x(i, j));
            out << "\n";
        }
    }
    {
        auto out = open_out(dir / "spec.json");
        out << spec_to_json(spec).dump(2) << "\n";
    }
    if (a.adjacency) {
        auto out = open_out(dir / "adjacency.csv");
        write_adjacency_csv(out, adj);
    }
    std::cerr << "simulate: " << spec.name << ", " << spec.n << " nodes, " << g.edge_count() << " edges -> " << dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- embed

struct EmbedArgs {
    std::string graph;
    std::string mode = "undirected";
    std::string indexing = "interned";
    int d = 0;
    int elbow = 0;
    int scree = 50;
    std::string side = "left";
    std::string out;
};

Embedding embed_graph(const AdjacencyMatrix& a, std::optional<int> d, int elbow, int scree, const std::string& side) {
    Eigen::Index dim = 0;
    if (d) {
        dim = *d;
    } else {
        const Eigen::VectorXd values = scree_values(a, scree);
        dim = static_cast<Eigen::Index>(select_dim(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())),
                                                   static_cast<std::size_t>(elbow)));
        std::cerr << "embed: elbow " << elbow << " of the scree plot gives d = " << dim << "\n";
    }
    if (a.symmetric) return ase(a, dim);
    auto [left, right] = dase(a, dim);
    if (side == "left") return left;
    if (side == "right") return right;
    throw UsageError("--side must be left or right");
}

int cmd_embed(const EmbedArgs& a) {
    if ((a.d > 0) == (a.elbow > 0)) throw UsageError("embed needs exactly one of --d and --elbow");
    const Graph g = load_edge_list(a.graph, parse_graph_mode(a.mode), detail::parse_indexing(a.indexing));
    const AdjacencyMatrix adj = to_adjacency(g);
    const Embedding e = embed_graph(adj, a.d > 0 ? std::optional<int>(a.d) : std::nullopt, a.elbow, a.scree, a.side);
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    save_embedding(a.out, e);
    std::cerr << "embed: " << e.n() << " x " << e.d() << " (" << to_string(e.side) << ") -> " << a.out << "\n";
    return 0;
}

int cmd_adjacency(const std::string& graph, const std::string& mode, const std::string& indexing, const std::string& out) {
    const Graph g = load_edge_list(graph, parse_graph_mode(mode), detail::parse_indexing(indexing));
    auto os = open_out(out);
    write_adjacency_csv(os, to_adjacency(g));
    return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string config;
    std::string embedding;
    std::string out;
    std::string truth;
    std::string init_labels;
    std::string init_theta;
    int chains = 0;
    long seed = -1;
    bool similarity = false;
};

void write_samples(const fs::path& dir, const PosteriorSamples& s) {
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "z.csv");
        for (std::size_t t = 0; t < s.size(); ++t) {
            const auto z = s.labels(t);
            for (std::size_t i = 0; i < z.size(); ++i) out << (i ? "," : "") << z[i];
            out << "\n";
        }
    }
    {
        auto out = open_out(dir / "theta.csv");
        for (std::size_t t = 0; t < s.size(); ++t) {
            const auto th = s.thetas(t);
            for (std::size_t i = 0; i < th.size(); ++i) out << (i ? "," : "") << fmt(th[i]);
            out << "\n";
        }
    }
    {
        auto out = open_out(dir / "K.csv");
        out << "draw,K_nonempty,K_total,log_score\n";
        for (std::size_t t = 0; t < s.size(); ++t) {
            out << t << ',' << s.K_nonempty[t] << ',' << s.K_total[t] << ',' << fmt(s.log_score[t]) << "\n";
        }
    }
    {
        auto out = open_out(dir / "kernels.csv");
        for (std::size_t t = 0; t < s.size(); ++t) {
            const auto& ids = s.kernel_ids[t];
            for (std::size_t k = 0; k < ids.size(); ++k) out << (k ? "," : "") << ids[k];
            out << "\n";
        }
    }
    {
        auto out = open_out(dir / "acceptance.csv");
        out << "move,attempts,accepts,rate\n";
        const auto& a = s.acceptance;
        const std::pair<const char*, const MoveCounter*> rows[] = {
            {"z_change", &a.z_change}, {"theta", &a.theta},           {"split", &a.split},
            {"merge", &a.merge},       {"empty_add", &a.empty_add}, {"empty_remove", &a.empty_remove},
            {"kernel_change", &a.kernel_change}};
        for (const auto& [name, c] : rows) out << name << ',' << c->attempts << ',' << c->accepts << ',' << fmt(c->rate()) << "\n";
    }
}

json acceptance_json(const AcceptanceStats& a) {
    return {{"z_change", a.z_change.rate()}, {"theta", a.theta.rate()},         {"split", a.split.rate()},
            {"merge", a.merge.rate()},       {"empty_add", a.empty_add.rate()}, {"empty_remove", a.empty_remove.rate()},
            {"kernel_change", a.kernel_change.rate()}};
}

int cmd_fit(const FitArgs& args) {
    const auto started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = args.config.empty() ? RunConfig{} : load_config(args.config);
    if (!args.embedding.empty()) cfg.embedding = args.embedding;
    if (!args.out.empty()) cfg.output = args.out;
    if (args.chains > 0) cfg.chains = args.chains;
    if (args.seed >= 0) cfg.mcmc.seed = static_cast<std::uint64_t>(args.seed);

    Embedding emb;
    if (!cfg.embedding.empty()) {
        emb = load_embedding(cfg.embedding);
    } else if (!cfg.graph.empty()) {
        const AdjacencyMatrix adj = to_adjacency(load_edge_list(cfg.graph, cfg.mode, cfg.indexing));
        emb = embed_graph(adj, cfg.d, cfg.elbow, 50, "left");
    } else {
        throw ConfigError("fit needs an embedding or a graph");
    }
    if (cfg.d && *cfg.d != emb.d()) {
        if (*cfg.d > emb.d()) throw ConfigError("config asks for d = " + std::to_string(*cfg.d) + " but the embedding has " + std::to_string(emb.d()));
        emb.positions = emb.positions.leftCols(*cfg.d).eval();
        emb.spectrum = emb.spectrum.head(*cfg.d).eval();
    }
    const Eigen::Index n = emb.n();
    const int d = static_cast<int>(emb.d());

    Hyperparams hyper = cfg.hyper;
    if (!cfg.mu_theta_set) hyper.mu_theta = emb.positions.col(0).mean();
    const std::pair<double, double> knot_range{emb.positions.col(0).minCoeff(), emb.positions.col(0).maxCoeff()};
    const KernelMenu menu = build_menu(cfg.kernels, d, knot_range);

    InitOptions init;
    init.theta_mode = cfg.theta_init;
    init.seed = cfg.mcmc.seed;
    init.kernel_ids = cfg.community_kernels;
    if (!args.init_labels.empty()) init.labels = to_ints(read_column(args.init_labels, "label"), "initial labels");
    if (!args.init_theta.empty()) init.theta = to_doubles(read_column(args.init_theta, "theta"), "initial theta");
    if (cfg.theta_init == ThetaInit::user && !init.theta) throw ConfigError("theta_init 'user' needs --init-theta");

    int K0 = cfg.K;
    if (init.labels) K0 = *std::max_element(init.labels->begin(), init.labels->end()) + 1;
    ModelState state = init_state(emb.positions, K0, hyper, menu, init);
    const ModelState reference = state;

    const PosteriorSamples samples = cfg.chains > 1 ? run_chains(state, cfg.mcmc, cfg.chains) : run(state, cfg.mcmc);

    const Eigen::MatrixXd sim = posterior_similarity(samples);
    ClusterResult clusters = consensus_clusters(sim, samples);
    const Eigen::VectorXd theta_mean = samples.theta_mean();
    const auto curves = curve_fits(reference, clusters.labels, theta_mean);

    std::optional<std::vector<int>> truth;
    if (!args.truth.empty()) {
        truth = to_ints(read_column(args.truth, "z"), "truth labels");
        if (static_cast<Eigen::Index>(truth->size()) != n) throw std::runtime_error("truth labels: wrong length");
        clusters.ari = ari(clusters.labels, *truth);
    }

    const fs::path dir(cfg.output);
    fs::create_directories(dir);
    save_embedding((dir / "embedding.csv").string(), emb);
    write_samples(dir / "samples", samples);
    {
        auto out = open_out(dir / "labels.csv");
        out << "node,label,theta_mean\n";
        for (Eigen::Index i = 0; i < n; ++i) out << i << ',' << clusters.labels[static_cast<std::size_t>(i)] << ',' << fmt(theta_mean(i)) << "\n";
    }
    const auto kp = k_posterior(samples);
    {
        auto out = open_out(dir / "k_posterior.csv");
        out << "K,probability\n";
        for (std::size_t k = 0; k < kp.size(); ++k) {
            if (kp[k] > 0.0) out << k << ',' << fmt(kp[k]) << "\n";
        }
    }
    {
        auto out = open_out(dir / "curves.csv");
        out << "community,dimension,kernel,theta,value\n";
        for (const auto& c : curves) {
            for (std::size_t g = 0; g < c.grid.size(); ++g) {
                out << c.community << ',' << c.dimension + 1 << ',' << c.kernel_id << ',' << fmt(c.grid[g]) << ',' << fmt(c.values[g]) << "\n";
            }
        }
    }
    if (args.similarity) {
        auto out = open_out(dir / "similarity.csv");
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) out << (j ? "," : "") << fmt(sim(i, j));
            out << "\n";
        }
    }

    json report{{"n", n},
                {"d", d},
                {"draws", samples.size()},
                {"K_hat", clusters.K_hat},
                {"k_posterior", kp},
                {"acceptance", acceptance_json(samples.acceptance)},
                {"ari", clusters.ari ? json(*clusters.ari) : json(nullptr)}};
    {
        auto out = open_out(dir / "report.json");
        out << report.dump(2) << "\n";
    }

    const json config_json = config_to_json(cfg);
    const std::time_t stamp = std::chrono::system_clock::to_time_t(started);
    std::ostringstream when;
    when << std::put_time(std::gmtime(&stamp), "%Y-%m-%dT%H:%M:%SZ");
    json manifest{{"seed", cfg.mcmc.seed},
                  {"chains", cfg.chains},
                  {"config", config_json},
                  {"config_hash", hex(fnv1a(config_json.dump()))},
                  {"started_utc", when.str()},
                  {"wall_clock_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    {
        auto out = open_out(dir / "manifest.json");
        out << manifest.dump(2) << "\n";
    }
    std::cerr << "fit: " << samples.size() << " draws, K_hat = " << clusters.K_hat;
    if (clusters.ari) std::cerr << ", ARI = " << *clusters.ari;
    std::cerr << " -> " << dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const std::string& labels_path, const std::string& labels_col, const std::string& truth_path,
                 const std::string& truth_col, const std::string& out_path) {
    const auto a = read_column(labels_path, labels_col);
    const auto b = read_column(truth_path, truth_col);
    if (a.size() != b.size()) {
        throw std::runtime_error("label files differ in length (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
    std::map<std::string, std::map<std::string, int>> table;
    std::vector<std::string> cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++table[a[i]][b[i]];
        if (std::find(cols.begin(), cols.end(), b[i]) == cols.end()) cols.push_back(b[i]);
    }
    std::sort(cols.begin(), cols.end());
    const double score = ari(a, b);
    json j{{"ari", score}, {"n", a.size()}};
    json rows = json::object();
    for (const auto& [la, row] : table) rows[la] = row;
    j["contingency"] = rows;

    std::ostringstream text;
    text << "ARI " << fmt(score) << "\n";
    text << "label\\truth";
    for (const auto& c : cols) text << ',' << c;
    text << "\n";
    for (const auto& [la, row] : table) {
        text << la;
        for (const auto& c : cols) {
            auto it = row.find(c);
            text << ',' << (it == row.end() ? 0 : it->second);
        }
        text << "\n";
    }
    if (out_path.empty()) {
        std::cout << text.str();
    } else {
        auto out = open_out(out_path);
        out << j.dump(2) << "\n";
        std::cerr << text.str();
    }
    return 0;
}

// ---------------------------------------------------------------- reproductions

struct ReproArgs {
    int seeds = 5;
    std::uint64_t first_seed = 1;
    long samples = 10000;
    long burn_in = 1000;
    std::string out;
};

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        auto out = open_out(out_path);
        out << text;
    }
}

int cmd_table1(const ReproArgs& a) {
    const std::pair<const char*, const char*> rows[] = {{"sbm_fig3a", "1.0"}, {"dcsbm_fig3b", "0.853"}, {"quadratic_fig3c", "0.838"}};
    std::ostringstream md;
    md << "| preset | mean ARI | min ARI | max ARI | seeds | reference |\n|---|---|---|---|---|---|\n";
    for (const auto& [name, reference] : rows) {
        double sum = 0.0, lo = 1.0, hi = -1.0;
        for (int s = 0; s < a.seeds; ++s) {
            ExperimentOptions o = table1_options(name, a.first_seed + static_cast<std::uint64_t>(s));
            o.n_samples = a.samples;
            o.burn_in = a.burn_in;
            const ExperimentResult r = run_experiment(o);
            std::cerr << name << " seed " << o.data_seed << ": ARI " << r.ari << " (" << r.seconds << " s)\n";
            sum += r.ari;
            lo = std::min(lo, r.ari);
            hi = std::max(hi, r.ari);
        }
        md << "| " << name << " | " << std::fixed << std::setprecision(3) << sum / a.seeds << " | " << lo << " | " << hi << " | "
           << a.seeds << " | " << reference << " |\n";
    }
    emit(md.str(), a.out);
    return 0;
}

int cmd_hw(const ReproArgs& a) {
    const std::tuple<const char*, HwKernels, const char*> rows[] = {{"quadratic, theta = |x1|^(1/2)", HwKernels::quadratic, "0.7918"},
                                                                    {"cubic + identity", HwKernels::cubic_identity, "0.6687"}};
    std::ostringstream md;
    md << "| kernels | ARI (K = 2) | posterior-mode K (K unknown) | ARI (K unknown) | reference ARI |\n|---|---|---|---|---|\n";
    for (const auto& [label, kernels, reference] : rows) {
        ExperimentOptions fixed = hardy_weinberg_options(kernels, a.first_seed, false);
        ExperimentOptions free = hardy_weinberg_options(kernels, a.first_seed, true);
        for (auto* o : {&fixed, &free}) {
            o->n_samples = a.samples;
            o->burn_in = a.burn_in;
        }
        const ExperimentResult rf = run_experiment(fixed);
        const ExperimentResult ru = run_experiment(free);
        std::cerr << label << ": ARI " << rf.ari << ", K mode " << ru.K_mode << "\n";
        md << "| " << label << " | " << std::fixed << std::setprecision(3) << rf.ari << " | " << ru.K_mode << " | " << ru.ari << " | "
           << reference << " |\n";
    }
    emit(md.str(), a.out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent structure blockmodel: simulate, embed, fit and evaluate"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Simulate a graph from a preset or a spec file");
    auto* o_preset = c_sim->add_option("--preset", sim.preset_name, "Preset name")->check(CLI::IsMember(preset_names()));
    auto* o_spec = c_sim->add_option("--spec", sim.spec_file, "JSON spec file")->check(CLI::ExistingFile);
    o_preset->excludes(o_spec);
    c_sim->add_option("--seed", sim.seed, "Random seed");
    c_sim->add_option("--n", sim.n, "Override the number of nodes");
    c_sim->add_option("--out", sim.out, "Output directory")->required();
    c_sim->add_flag("--adjacency", sim.adjacency, "Also write adjacency.csv");

    EmbedArgs emb;
    auto* c_emb = app.add_subcommand("embed", "Spectral embedding of an edge list");
    c_emb->add_option("--graph", emb.graph, "Edge list")->required()->check(CLI::ExistingFile);
    c_emb->add_option("--mode", emb.mode, "undirected | directed | bipartite");
    c_emb->add_option("--indexing", emb.indexing, "interned | zero_based | one_based");
    c_emb->add_option("--d", emb.d, "Embedding dimension");
    c_emb->add_option("--elbow", emb.elbow, "Pick d at this scree-plot elbow");
    c_emb->add_option("--scree", emb.scree, "Number of spectrum values used for the elbow");
    c_emb->add_option("--side", emb.side, "left | right (directed and bipartite graphs)");
    c_emb->add_option("--out", emb.out, "Output file (.csv or .bin)")->required();

    std::string adj_graph, adj_mode = "undirected", adj_indexing = "interned", adj_out;
    auto* c_adj = app.add_subcommand("adjacency", "Export the adjacency matrix as row,col,value CSV");
    c_adj->add_option("--graph", adj_graph, "Edge list")->required()->check(CLI::ExistingFile);
    c_adj->add_option("--mode", adj_mode, "undirected | directed | bipartite");
    c_adj->add_option("--indexing", adj_indexing, "interned | zero_based | one_based");
    c_adj->add_option("--out", adj_out, "Output CSV")->required();

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "Run the sampler and summarise the posterior");
    c_fit->add_option("--config", fit.config, "JSON run config")->check(CLI::ExistingFile);
    c_fit->add_option("--embedding", fit.embedding, "Embedding file (overrides the config)")->check(CLI::ExistingFile);
    c_fit->add_option("--out", fit.out, "Output directory (overrides the config)");
    c_fit->add_option("--truth", fit.truth, "CSV with a 'z' column of true labels")->check(CLI::ExistingFile);
    c_fit->add_option("--init-labels", fit.init_labels, "CSV with a 'label' column of starting labels")->check(CLI::ExistingFile);
    c_fit->add_option("--init-theta", fit.init_theta, "CSV with a 'theta' column of starting values")->check(CLI::ExistingFile);
    c_fit->add_option("--chains", fit.chains, "Independent chains run concurrently");
    c_fit->add_option("--seed", fit.seed, "Seed (overrides the config)");
    c_fit->add_flag("--similarity", fit.similarity, "Also write the n x n similarity matrix");

    std::string ev_labels, ev_truth, ev_lcol = "label", ev_tcol = "z", ev_out;
    auto* c_ev = app.add_subcommand("evaluate", "ARI and contingency table of two labelings");
    c_ev->add_option("--labels", ev_labels, "Estimated labels CSV")->required()->check(CLI::ExistingFile);
    c_ev->add_option("--truth", ev_truth, "True labels CSV")->required()->check(CLI::ExistingFile);
    c_ev->add_option("--labels-column", ev_lcol, "Column name in the labels file");
    c_ev->add_option("--truth-column", ev_tcol, "Column name in the truth file");
    c_ev->add_option("--out", ev_out, "Write a JSON report instead of printing");

    auto* c_def = app.add_subcommand("defaults", "Print the default run config");

    ReproArgs t1;
    auto* c_t1 = app.add_subcommand("reproduce-table1", "Synthetic SBM, DCSBM and quadratic table");
    c_t1->add_option("--seeds", t1.seeds, "Number of seeds");
    c_t1->add_option("--first-seed", t1.first_seed, "First seed");
    c_t1->add_option("--samples", t1.samples, "Sweeps per run, burn-in included");
    c_t1->add_option("--burn-in", t1.burn_in, "Burn-in sweeps");
    c_t1->add_option("--out", t1.out, "Markdown output file");

    ReproArgs hw;
    hw.seeds = 1;
    auto* c_hw = app.add_subcommand("reproduce-hw", "Hardy-Weinberg experiment table");
    c_hw->add_option("--seed", hw.first_seed, "Seed");
    c_hw->add_option("--samples", hw.samples, "Sweeps per run, burn-in included");
    c_hw->add_option("--burn-in", hw.burn_in, "Burn-in sweeps");
    c_hw->add_option("--out", hw.out, "Markdown output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (c_sim->parsed()) {
            if (sim.preset_name.empty() && sim.spec_file.empty()) throw UsageError("simulate needs --preset or --spec");
            return cmd_simulate(sim);
        }
        if (c_emb->parsed()) return cmd_embed(emb);
        if (c_adj->parsed()) return cmd_adjacency(adj_graph, adj_mode, adj_indexing, adj_out);
        if (c_fit->parsed()) return cmd_fit(fit);
        if (c_ev->parsed()) return cmd_evaluate(ev_labels, ev_lcol, ev_truth, ev_tcol, ev_out);
        if (c_def->parsed()) {
            std::cout << config_to_json(RunConfig{}).dump(2) << "\n";
            return 0;
        }
        if (c_t1->parsed()) return cmd_table1(t1);
        if (c_hw->parsed()) return cmd_hw(hw);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const EdgeListError& e) {
        std::cerr << "edge list error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
