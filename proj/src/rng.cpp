#include "selfnorm/rng.hpp"

#include "selfnorm/gaussian.hpp"

namespace selfnorm {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Stream::Stream(const StreamKey& key) {
    // Fold the key fields through splitmix64 so that any single-bit change in
    // any field decorrelates the whole state.
    std::uint64_t h = 0x6A09E667F3BCC908ull;
    h ^= splitmix64(h) ^ key.master_seed;
    h ^= splitmix64(h) ^ key.experiment_id;
    h ^= splitmix64(h) ^ key.replication_index;
    h ^= splitmix64(h) ^ static_cast<std::uint64_t>(key.role);
    for (auto& w : s_) w = splitmix64(h);
    // xoshiro forbids the all-zero state; unreachable in practice but cheap to rule out.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t Stream::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Stream::uniform53() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal() { return normal_quantile(uniform53()); }

}  // namespace selfnorm
