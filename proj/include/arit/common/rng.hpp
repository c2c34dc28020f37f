#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace arit {

// SplitMix64 step. Fast, well-mixed, and fully pinned so that seeded outputs
// are identical across platforms and standard-library versions.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Order-sensitive combiner for deriving per-item seeds, e.g.
// hash64({policy_seed, frame_id, kind_index}).
inline uint64_t hash64(std::initializer_list<uint64_t> parts) {
    uint64_t h = 0x6a09e667f3bcc908ULL;
    for (uint64_t p : parts) {
        h ^= p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        uint64_t s = h;
        h = splitmix64(s);
    }
    return h;
}

// Minimal deterministic generator. Not a std:: distribution on purpose:
// the exact output sequence is part of the reproducibility contract.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = uint64_t(hi - lo) + 1;
        return lo + int64_t(next_u64() % span);
    }

    // Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Raw counter state for checkpointing. Restoring drops a cached
    // Box-Muller spare, which only matters mid-pair.
    uint64_t state() const { return state_; }
    void set_state(uint64_t s) {
        state_ = s;
        have_spare_ = false;
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// FNV-1a over bytes; used for config content hashes embedded in reports.
inline uint64_t fnv1a(const void* data, size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace arit
