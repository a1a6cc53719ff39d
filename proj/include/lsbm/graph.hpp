#ifndef LSBM_GRAPH_HPP
#define LSBM_GRAPH_HPP

#include <Eigen/Sparse>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lsbm {

enum class GraphMode { undirected, directed, bipartite };

/// How node identifiers in an edge list map to matrix indices.
///   interned   - any token, contiguous indices in first-seen order
///   zero_based - non-negative integers used directly as indices
///   one_based  - positive integers, index = id - 1
enum class NodeIndexing { interned, zero_based, one_based };

inline const char* to_string(GraphMode m) {
    switch (m) {
    case GraphMode::undirected: return "undirected";
    case GraphMode::directed: return "directed";
    case GraphMode::bipartite: return "bipartite";
    }
    return "?";
}

inline GraphMode parse_graph_mode(const std::string& s) {
    if (s == "undirected") return GraphMode::undirected;
    if (s == "directed") return GraphMode::directed;
    if (s == "bipartite") return GraphMode::bipartite;
    throw std::invalid_argument("unknown graph mode '" + s + "'");
}

class EdgeListError : public std::runtime_error {
public:
    EdgeListError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Node sets plus a deduplicated edge set. Undirected graphs store each
/// unordered pair once as (min, max).
struct Graph {
    std::size_t n_sources = 0;
    std::size_t n_destinations = 0;
    GraphMode mode = GraphMode::undirected;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<std::string> source_names;
    std::vector<std::string> destination_names;

    std::size_t edge_count() const { return edges.size(); }

    /// Sorts, canonicalises and deduplicates the edge list, and checks bounds.
    void normalise() {
        for (auto& [i, j] : edges) {
            if (i >= n_sources || j >= n_destinations) {
                throw std::out_of_range("edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of bounds");
            }
            if (mode == GraphMode::undirected) {
                if (i == j) {
                    throw std::invalid_argument("self-loop on node " + std::to_string(i) + " in undirected graph");
                }
                if (i > j) std::swap(i, j);
            }
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
};

/// Binary adjacency matrix, rows are sources and columns destinations.
struct AdjacencyMatrix {
    Eigen::SparseMatrix<double> entries;
    bool symmetric = false;

    Eigen::Index rows() const { return entries.rows(); }
    Eigen::Index cols() const { return entries.cols(); }
    Eigen::Index nonzeros() const { return entries.nonZeros(); }
};

namespace detail {

inline bool parse_index(const std::string& tok, std::size_t& out) {
    if (tok.empty() || tok[0] == '-' || tok[0] == '+') return false;
    std::size_t pos = 0;
    try {
        unsigned long long v = std::stoull(tok, &pos);
        if (pos != tok.size()) return false;
        out = static_cast<std::size_t>(v);
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

class Interner {
public:
    std::size_t operator()(const std::string& tok) {
        auto [it, fresh] = lookup_.try_emplace(tok, names_.size());
        if (fresh) names_.push_back(tok);
        return it->second;
    }
    std::size_t size() const { return names_.size(); }
    std::vector<std::string> take_names() { return std::move(names_); }

private:
    std::unordered_map<std::string, std::size_t> lookup_;
    std::vector<std::string> names_;
};

} // namespace detail

/// Parses an edge list: one "source destination" pair per line, '#' comments
/// and blank lines skipped. A "# nodes: n [m]" comment fixes the node counts
/// for positional indexing, so trailing isolated nodes survive a round trip.
inline Graph read_edge_list(std::istream& in, GraphMode mode, NodeIndexing indexing = NodeIndexing::interned) {
    Graph g;
    g.mode = mode;
    detail::Interner src_ids, dst_ids;
    const bool shared_ids = mode != GraphMode::bipartite;
    std::size_t declared_src = 0, declared_dst = 0;
    std::size_t max_src = 0, max_dst = 0;
    bool any = false;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#') {
            std::istringstream hdr(line.substr(first + 1));
            std::string tag;
            if (hdr >> tag && tag == "nodes:") {
                hdr >> declared_src;
                if (!(hdr >> declared_dst)) declared_dst = declared_src;
            }
            continue;
        }
        std::istringstream ls(line);
        std::string a, b, extra;
        if (!(ls >> a >> b)) {
            throw EdgeListError("expected two node identifiers", lineno);
        }
        if (ls >> extra) {
            throw EdgeListError("unexpected third field '" + extra + "'", lineno);
        }
        std::size_t i = 0, j = 0;
        if (indexing == NodeIndexing::interned) {
            i = src_ids(a);
            j = shared_ids ? src_ids(b) : dst_ids(b);
        } else {
            if (!detail::parse_index(a, i) || !detail::parse_index(b, j)) {
                throw EdgeListError("non-integer node identifier", lineno);
            }
            if (indexing == NodeIndexing::one_based) {
                if (i == 0 || j == 0) throw EdgeListError("zero identifier in one-based edge list", lineno);
                --i;
                --j;
            }
        }
        if (mode == GraphMode::undirected && i == j) {
            throw EdgeListError("self-loop in undirected graph", lineno);
        }
        max_src = std::max(max_src, shared_ids ? std::max(i, j) : i);
        max_dst = std::max(max_dst, shared_ids ? std::max(i, j) : j);
        g.edges.emplace_back(i, j);
        any = true;
    }
    if (!any) {
        throw EdgeListError("edge list contains no edges", 0);
    }

    if (indexing == NodeIndexing::interned) {
        g.source_names = src_ids.take_names();
        g.n_sources = g.source_names.size();
        if (shared_ids) {
            g.n_destinations = g.n_sources;
        } else {
            g.destination_names = dst_ids.take_names();
            g.n_destinations = g.destination_names.size();
        }
    } else {
        g.n_sources = std::max(declared_src, max_src + 1);
        g.n_destinations = shared_ids ? g.n_sources : std::max(declared_dst, max_dst + 1);
    }
    g.normalise();
    return g;
}

inline Graph load_edge_list(const std::string& path, GraphMode mode, NodeIndexing indexing = NodeIndexing::interned) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open edge list '" + path + "'");
    }
    return read_edge_list(in, mode, indexing);
}

/// Writes zero-based positional ids with a node-count header.
inline void write_edge_list(std::ostream& out, const Graph& g) {
    out << "# nodes: " << g.n_sources;
    if (g.mode == GraphMode::bipartite) out << ' ' << g.n_destinations;
    out << "\n# mode: " << to_string(g.mode) << '\n';
    for (const auto& [i, j] : g.edges) {
        out << i << ' ' << j << '\n';
    }
}

inline AdjacencyMatrix to_adjacency(const Graph& g) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(g.mode == GraphMode::undirected ? 2 * g.edges.size() : g.edges.size());
    for (const auto& [i, j] : g.edges) {
        trips.emplace_back(static_cast<int>(i), static_cast<int>(j), 1.0);
        if (g.mode == GraphMode::undirected) {
            trips.emplace_back(static_cast<int>(j), static_cast<int>(i), 1.0);
        }
    }
    AdjacencyMatrix a;
    a.entries.resize(static_cast<Eigen::Index>(g.n_sources), static_cast<Eigen::Index>(g.n_destinations));
    // Duplicates cannot occur after normalise(), but max() keeps entries binary regardless.
    a.entries.setFromTriplets(trips.begin(), trips.end(), [](double x, double y) { return std::max(x, y); });
    a.entries.makeCompressed();
    a.symmetric = g.mode == GraphMode::undirected;
    return a;
}

/// Inverse of to_adjacency for matrices produced by the simulator.
inline Graph from_adjacency(const AdjacencyMatrix& a, GraphMode mode) {
    Graph g;
    g.mode = mode;
    g.n_sources = static_cast<std::size_t>(a.rows());
    g.n_destinations = static_cast<std::size_t>(a.cols());
    for (int col = 0; col < a.entries.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(a.entries, col); it; ++it) {
            if (it.value() == 0.0) continue;
            auto i = static_cast<std::size_t>(it.row());
            auto j = static_cast<std::size_t>(it.col());
            if (mode == GraphMode::undirected && i >= j) continue;
            g.edges.emplace_back(i, j);
        }
    }
    g.normalise();
    return g;
}

/// Coordinate-list CSV export, one "row,col,value" line per stored entry.
inline void write_adjacency_csv(std::ostream& out, const AdjacencyMatrix& a) {
    out << "row,col,value\n";
    std::vector<std::pair<Eigen::Index, Eigen::Index>> coords;
    coords.reserve(static_cast<std::size_t>(a.nonzeros()));
    for (int col = 0; col < a.entries.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(a.entries, col); it; ++it) {
            coords.emplace_back(it.row(), it.col());
        }
    }
    std::sort(coords.begin(), coords.end());
    for (const auto& [r, c] : coords) {
        out << r << ',' << c << ",1\n";
    }
}

} // namespace lsbm

#endif
