#pragma once

#include <cmath>
#include <cstdint>

namespace erc {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    return mix64(state);
}

/// Hash a base seed and a stream index into an unstructured starting state.
/// Starting states must be full hashes: anything arithmetic in the stream
/// index makes distinct paths walk overlapping splitmix sequences.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed + 0x9e3779b97f4a7c15ULL) ^ (stream + 0x2545f4914f6cdd1dULL));
}

/// Small deterministic generator used for Monte-Carlo path streams.
/// Identical seeds give bit-identical draws on any build of this code;
/// nothing here depends on implementation-defined library distributions.
class PathRng {
public:
    explicit PathRng(std::uint64_t state) : state_(state) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    /// Uniform on (0, 1].
    double uniform() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    /// Standard normal via Box-Muller, one spare cached per pair.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace erc
