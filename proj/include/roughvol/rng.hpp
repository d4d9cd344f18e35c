#pragma once
#include <cstdint>
#include <cmath>

namespace roughvol {

// splitmix64: used both as a stream generator and as a seed/stream mixer so
// per-replicate seeds are independent of scheduling order.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (0x9E3779B97F4A7C15ULL + (b << 6) + (b >> 2));
    std::uint64_t z = splitmix64_next(s);
    return z;
}

// Deterministic Gaussian stream: splitmix64 bits -> uniforms -> Box-Muller.
// Avoids std::normal_distribution, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // uniform on [0,1)
    double uniform() {
        return static_cast<double>(splitmix64_next(state_) >> 11) * 0x1.0p-53;
    }

    // uniform on (0,1]
    double uniform_pos() {
        return (static_cast<double>(splitmix64_next(state_) >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace roughvol
