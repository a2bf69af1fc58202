#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <cstdint>
#include <vector>

namespace fedia {

// Purpose tags for deriving independent streams from one master seed.
// Every source of randomness in a run is keyed by (master, stream, a, b),
// so state never needs to be carried across rounds or serialized: the
// stream for e.g. (client 2, round 17) can always be re-derived.
enum class Stream : std::uint64_t {
    DataGen = 1,    // per-volume geometry and image noise
    Corrupt = 2,    // per-volume choice of kept lesions
    Partition = 3,  // train/test split and client assignment
    Init = 4,       // model parameter initialization
    Shuffle = 5,    // per-client per-round minibatch order
    Aux = 6,        // test-local generators
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

// Derives a child seed from (master, stream, a, b). Pure function; the
// same key always yields the same seed regardless of platform.
inline std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
    std::uint64_t s = master;
    std::uint64_t h = detail::splitmix64(s);
    s = h ^ (static_cast<std::uint64_t>(stream) * 0xd1342543de82ef95ULL);
    h = detail::splitmix64(s);
    s = h ^ (a * 0xaf251af3b0f025b5ULL);
    h = detail::splitmix64(s);
    s = h ^ (b * 0x9e6c63d0876a9fc5ULL);
    return detail::splitmix64(s);
}

// Small deterministic PRNG (splitmix64 core) with hand-rolled
// distributions so results are identical across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return detail::splitmix64(state_); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi] inclusive, unbiased via rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw std::logic_error("uniform_int: empty range");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span + 1) % span;
        std::uint64_t v = next_u64();
        while (v > limit) v = next_u64();
        return lo + static_cast<std::int64_t>(v % span);
    }

    // Standard normal via Box-Muller; caches the spare value.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(items[i - 1], items[j]);
        }
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
    return Rng(derive_seed(master, stream, a, b));
}

}  // namespace fedia
