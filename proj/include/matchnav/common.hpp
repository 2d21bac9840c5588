#ifndef MATCHNAV_COMMON_HPP
#define MATCHNAV_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace matchnav {

/// Error with a stable machine-readable code ("pose-out-of-bounds",
/// "no-keypoints", ...) next to the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stateless mix of up to four 64-bit keys into one hash. Used for
/// procedural textures and decal placement so that identical seeds
/// give identical worlds.
inline uint64_t hash_mix(uint64_t a, uint64_t b = 0x9ae16a3b2f90404fULL,
                         uint64_t c = 0xc3a5c85c97cb3127ULL, uint64_t d = 0) {
    uint64_t s = a;
    uint64_t h = splitmix64(s);
    s ^= b + 0x165667b19e3779f9ULL + (h << 6) + (h >> 2);
    h ^= splitmix64(s);
    s ^= c + 0x27d4eb2f165667c5ULL + (h << 6) + (h >> 2);
    h ^= splitmix64(s);
    s ^= d + 0x85ebca6b9e3779b9ULL + (h << 6) + (h >> 2);
    return h ^ splitmix64(s);
}

/// FNV-1a over raw bytes.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Deterministic generator. All stochastic choices in the project draw from
/// this so runs are reproducible bit-for-bit across platforms; the standard
/// <random> distributions are implementation-defined and not used.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {
        // decorrelate trivially related seeds
        next_u64();
        next_u64();
    }

    uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in the open interval (0, 1).
    double u01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    /// Uniform integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller (no cached spare; two uniforms per draw).
    double normal() {
        double u1 = u01();
        double u2 = u01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    /// Child generator with an independent stream.
    Rng fork(uint64_t stream) { return Rng(next_u64() ^ hash_mix(stream)); }

private:
    uint64_t state_;
};

} // namespace matchnav

#endif
