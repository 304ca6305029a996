#pragma once

#include <cstdint>
#include <vector>

namespace alner {

// Splitmix64-based generator. Self-contained so that seeded runs reproduce
// bit-for-bit across compilers and standard libraries (std::shuffle and the
// std distributions are implementation defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound), rejection-sampled to avoid modulo bias.
    std::uint64_t bounded(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Derives an independent stream from (seed, salt); used to decouple the
// consumers of one master seed (split, training, dropout, random scores).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    Rng r(seed ^ (0xd1b54a32d192ed03ULL * (salt + 1)));
    return r.next_u64();
}

}  // namespace alner
