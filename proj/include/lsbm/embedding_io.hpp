#ifndef LSBM_EMBEDDING_IO_HPP
#define LSBM_EMBEDDING_IO_HPP

#include "lsbm/spectral.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cctype>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsbm {

inline EmbeddingSide parse_embedding_side(const std::string& s) {
    if (s == "symmetric") return EmbeddingSide::symmetric;
    if (s == "left") return EmbeddingSide::left;
    if (s == "right") return EmbeddingSide::right;
    throw std::invalid_argument("unknown embedding side '" + s + "'");
}

namespace detail {

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace detail

/// CSV with "# side=" and "# spectrum=" comment headers, then a column
/// header and one row per node.
inline void write_embedding_csv(std::ostream& out, const Embedding& e) {
    out << "# side=" << to_string(e.side) << '\n';
    out << "# spectrum=";
    for (Eigen::Index j = 0; j < e.spectrum.size(); ++j) {
        if (j) out << ',';
        out << detail::format_double(e.spectrum(j));
    }
    out << '\n';
    for (Eigen::Index j = 0; j < e.d(); ++j) {
        if (j) out << ',';
        out << 'x' << (j + 1);
    }
    out << '\n';
    for (Eigen::Index i = 0; i < e.n(); ++i) {
        for (Eigen::Index j = 0; j < e.d(); ++j) {
            if (j) out << ',';
            out << detail::format_double(e.positions(i, j));
        }
        out << '\n';
    }
}

inline Embedding read_embedding_csv(std::istream& in) {
    Embedding e;
    e.side = EmbeddingSide::symmetric;
    std::vector<double> spectrum;
    std::vector<std::vector<double>> rows;
    bool header_seen = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# side=", 0) == 0) {
                e.side = parse_embedding_side(line.substr(7));
            } else if (line.rfind("# spectrum=", 0) == 0) {
                std::stringstream ss(line.substr(11));
                std::string tok;
                while (std::getline(ss, tok, ',')) spectrum.push_back(std::stod(tok));
            }
            continue;
        }
        if (!header_seen && !line.empty() && (std::isalpha(static_cast<unsigned char>(line[0])))) {
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                row.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw std::runtime_error("embedding csv line " + std::to_string(lineno) + ": bad number '" + tok + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::runtime_error("embedding csv line " + std::to_string(lineno) + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("embedding csv has no rows");
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(rows.front().size());
    e.positions.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) e.positions(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    if (spectrum.empty()) {
        e.spectrum = e.positions.colwise().squaredNorm().transpose();
    } else {
        if (static_cast<Eigen::Index>(spectrum.size()) != d) throw std::runtime_error("embedding csv spectrum length mismatch");
        e.spectrum = Eigen::Map<Eigen::VectorXd>(spectrum.data(), d);
    }
    return e;
}

inline constexpr std::array<char, 8> kEmbeddingMagic{'L', 'S', 'B', 'M', 'E', 'M', 'B', '1'};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
    out.write(b, 8);
}

inline std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("embedding binary: truncated");
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | b[k];
    return v;
}

inline void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

} // namespace detail

/// Binary layout, all little-endian: 8-byte magic "LSBMEMB1", uint64 n,
/// uint64 d, d float64 spectrum values, n*d float64 positions row-major.
inline void write_embedding_binary(std::ostream& out, const Embedding& e) {
    out.write(kEmbeddingMagic.data(), kEmbeddingMagic.size());
    detail::put_u64(out, static_cast<std::uint64_t>(e.n()));
    detail::put_u64(out, static_cast<std::uint64_t>(e.d()));
    for (Eigen::Index j = 0; j < e.d(); ++j) detail::put_f64(out, e.spectrum(j));
    for (Eigen::Index i = 0; i < e.n(); ++i) {
        for (Eigen::Index j = 0; j < e.d(); ++j) detail::put_f64(out, e.positions(i, j));
    }
}

inline Embedding read_embedding_binary(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kEmbeddingMagic) {
        throw std::runtime_error("embedding binary: bad magic");
    }
    const auto n = static_cast<Eigen::Index>(detail::get_u64(in));
    const auto d = static_cast<Eigen::Index>(detail::get_u64(in));
    Embedding e;
    e.side = EmbeddingSide::symmetric;
    e.spectrum.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) e.spectrum(j) = detail::get_f64(in);
    e.positions.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) e.positions(i, j) = detail::get_f64(in);
    }
    return e;
}

inline void save_embedding(const std::string& path, const Embedding& e) {
    const bool binary = path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot write embedding '" + path + "'");
    if (binary) {
        write_embedding_binary(out, e);
    } else {
        write_embedding_csv(out, e);
    }
}

inline Embedding load_embedding(const std::string& path) {
    const bool binary = path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw std::runtime_error("cannot open embedding '" + path + "'");
    return binary ? read_embedding_binary(in) : read_embedding_csv(in);
}

} // namespace lsbm

#endif
