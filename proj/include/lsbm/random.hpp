#ifndef LSBM_RANDOM_HPP
#define LSBM_RANDOM_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace lsbm {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 128-bit counter is advanced once per block of four 32-bit words; the
/// 64-bit key is the seed. Two outputs of 64 bits are produced per block.
/// Satisfies UniformRandomBitGenerator so it plugs into <random> distributions.
class Philox {
public:
    using result_type = std::uint64_t;

    explicit Philox(std::uint64_t seed = 0, std::uint64_t stream = 0) {
        key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
        counter_ = {0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (used_ == 2) {
            refill();
        }
        auto lo = static_cast<std::uint64_t>(block_[2 * used_]);
        auto hi = static_cast<std::uint64_t>(block_[2 * used_ + 1]);
        ++used_;
        return lo | (hi << 32);
    }

    /// Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal(double mean = 0.0, double sd = 1.0) {
        std::normal_distribution<double> dist(mean, sd);
        return dist(*this);
    }

    std::size_t index(std::size_t n) {
        std::uniform_int_distribution<std::size_t> dist(0, n - 1);
        return dist(*this);
    }

    double gamma(double shape) {
        std::gamma_distribution<double> dist(shape, 1.0);
        return dist(*this);
    }

    double beta(double a, double b) {
        double x = gamma(a);
        double y = gamma(b);
        return x / (x + y);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    void refill() {
        std::array<std::uint32_t, 4> ctr = counter_;
        std::array<std::uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * ctr[0];
            std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * ctr[2];
            auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
            auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        block_ = ctr;
        used_ = 0;
        if (++counter_[0] == 0) {
            ++counter_[1];
        }
    }

    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> block_{};
    int used_ = 2;
};

/// log(sum(exp(v))) without overflow.
inline double log_sum_exp(std::span<const double> v) {
    double top = -std::numeric_limits<double>::infinity();
    for (double x : v) {
        top = std::max(top, x);
    }
    if (!std::isfinite(top)) {
        return top;
    }
    double acc = 0.0;
    for (double x : v) {
        acc += std::exp(x - top);
    }
    return top + std::log(acc);
}

/// Normalises log-weights in place into probabilities.
inline void normalise_log_weights(std::vector<double>& w) {
    double lse = log_sum_exp(w);
    if (!std::isfinite(lse)) {
        throw std::runtime_error("normalise_log_weights: no finite weight");
    }
    for (double& x : w) {
        x = std::exp(x - lse);
    }
}

/// Draws an index from normalised probabilities.
inline std::size_t sample_discrete(std::span<const double> probs, Philox& rng) {
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc) {
            return k;
        }
    }
    // Rounding left u beyond the cumulative sum: return the last positive entry.
    for (std::size_t k = probs.size(); k-- > 0;) {
        if (probs[k] > 0.0) {
            return k;
        }
    }
    return probs.size() - 1;
}

} // namespace lsbm

#endif
