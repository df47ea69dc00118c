#pragma once

#include <cstdint>

namespace selfnorm {

enum class StreamRole : std::uint64_t { path = 1, coupling = 2, auxiliary = 3 };

/// Identifies one deterministic random stream. Equal keys always yield
/// identical draw sequences; distinct keys yield statistically independent
/// streams regardless of scheduling or thread count.
struct StreamKey {
    std::uint64_t master_seed = 0;
    std::uint64_t experiment_id = 0;
    std::uint64_t replication_index = 0;
    StreamRole role = StreamRole::path;

    StreamKey with_role(StreamRole r) const {
        StreamKey k = *this;
        k.role = r;
        return k;
    }
    StreamKey with_replication(std::uint64_t r) const {
        StreamKey k = *this;
        k.replication_index = r;
        return k;
    }
};

/// xoshiro256++ stream whose state is derived by hashing the StreamKey
/// fields (counter-based derivation, no sequential splitting).
class Stream {
  public:
    explicit Stream(const StreamKey& key);

    std::uint64_t next_u64();

    /// Uniform on (0,1) with 53 significand bits, never 0 or 1.
    double uniform53();

    /// Standard normal via inverse CDF of a 53-bit uniform (monotone coupling).
    double normal();

  private:
    std::uint64_t s_[4];
};

inline Stream derive_stream(const StreamKey& key) { return Stream(key); }

}  // namespace selfnorm
