#pragma once

// Deterministic random sampling.
//
// The engine is std::mt19937_64, whose bit stream is pinned by the C++
// standard.  The distribution transforms in <random> are not pinned, so every
// distribution used here is implemented explicitly on top of the raw engine.
// Given the same seed, any sequence of draws is reproducible across builds.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace coda {

// Integer hash used to derive independent substream seeds from a master seed
// plus role/index tags.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]: never returns 0, safe under log().
    double uniform01_open0() { return 1.0 - uniform01(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Box-Muller, cosine branch only; two uniforms per normal draw.
    double normal() {
        double u1 = uniform01_open0();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    // Marsaglia-Tsang; shapes below 1 boosted through G(a) = G(a+1) * U^(1/a).
    double gamma(double shape) {
        if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
        if (shape < 1.0) {
            double u = uniform01_open0();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform01_open0();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

    double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

    // Exact Bernoulli-count binomial; cost O(n) per draw.
    long binomial(long n, double p) {
        if (n < 0) throw std::invalid_argument("binomial: n must be nonnegative");
        if (p <= 0.0) return 0;
        if (p >= 1.0) return n;
        long c = 0;
        for (long t = 0; t < n; ++t) c += bernoulli(p) ? 1 : 0;
        return c;
    }

    // Normalized independent gamma draws.
    std::vector<double> dirichlet(const std::vector<double>& alpha) {
        std::vector<double> g(alpha.size());
        double total = 0.0;
        for (std::size_t j = 0; j < alpha.size(); ++j) {
            g[j] = gamma(alpha[j]);
            total += g[j];
        }
        if (total <= 0.0) throw std::runtime_error("dirichlet: degenerate draw");
        for (double& v : g) v /= total;
        return g;
    }

    // Sequential binomial decomposition: marginal of part j given the
    // remainder is Binomial(n_left, p_j / p_left).  Row total is exact.
    std::vector<long> multinomial(long n, const std::vector<double>& p) {
        std::vector<long> counts(p.size(), 0);
        long n_left = n;
        double p_left = 0.0;
        for (double v : p) p_left += v;
        for (std::size_t j = 0; j + 1 < p.size() && n_left > 0; ++j) {
            double q = p_left > 0.0 ? p[j] / p_left : 0.0;
            long c = binomial(n_left, std::min(1.0, std::max(0.0, q)));
            counts[j] = c;
            n_left -= c;
            p_left -= p[j];
        }
        if (!p.empty()) counts.back() = n_left;
        return counts;
    }

  private:
    std::mt19937_64 eng_;
};

// Substream seed for one replicate cell; xor keeps distinct replicates on
// distinct streams without consuming draws from the parent.
inline std::uint64_t replicate_seed(std::uint64_t base_seed, std::uint64_t replicate_index) {
    return base_seed ^ replicate_index;
}

// Role-tagged child seed so independent consumers (column sampling, each
// method's draws) never share a stream even inside one replicate.
inline std::uint64_t child_seed(std::uint64_t parent, std::string_view role,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(parent ^ hash_tag(role));
    h = splitmix64(h ^ (0x9e3779b97f4a7c15ULL * (a + 1)));
    h = splitmix64(h ^ (0xc2b2ae3d27d4eb4fULL * (b + 1)));
    return h;
}

}  // namespace coda
