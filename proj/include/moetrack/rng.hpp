#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "moetrack/error.hpp"

namespace moetrack {

/// Deterministic PRNG used everywhere seeded behaviour matters.
///
/// Core generator is splitmix64 (Steele/Lea/Flood); distribution mappings are
/// hand-written (53-bit uniform, Box-Muller normal, rejection-free bounded
/// int) so output streams are byte-identical across platforms and standard
/// libraries. Streams derive from (seed, stream id) so parallel consumers
/// never share state.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    static Rng stream(uint64_t seed, uint64_t stream_id) {
        // fold the stream id through one splitmix step so nearby ids diverge
        Rng r(seed ^ mix(stream_id + 0x9e3779b97f4a7c15ULL));
        r.next_u64();
        return r;
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// uniform in [0, 1) with 53 random bits
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// uniform integer in [0, n)
    uint64_t uniform_int(uint64_t n) {
        MTK_REQUIRE(n > 0, "uniform_int: n must be positive");
        // rejection sampling keeps the distribution exactly uniform
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    /// standard normal via Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 1e-300) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct indices from [0, n), ascending order
    std::vector<int> sample_indices(int n, int k) {
        MTK_REQUIRE(k >= 0 && k <= n, "sample_indices: k out of range");
        std::vector<int> all(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
        shuffle(all);
        std::vector<int> out(all.begin(), all.begin() + k);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace moetrack
