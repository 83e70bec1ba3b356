#pragma once

#include <cstdint>

namespace prevci {

// Immutable descriptor of a random stream. Draws depend only on
// (master_seed, stream_id, position), so results are identical across
// runs, platforms and thread counts, and distinct stream ids give
// statistically independent streams.
struct RngStream {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;
};

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer (Stafford mix 13).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace detail

// Stable derivation of child stream ids / child seeds from a base value and
// up to three labels. Used everywhere a logical task needs its own stream,
// e.g. (replicate, component) or (bound, component).
inline constexpr std::uint64_t derive_stream(std::uint64_t base, std::uint64_t a,
                                             std::uint64_t b = 0, std::uint64_t c = 0) {
    using detail::mix64;
    std::uint64_t h = mix64(base + detail::kGolden);
    h = mix64(h ^ (a * 0xC2B2AE3D27D4EB4Full + 0x9E3779B97F4A7C15ull));
    h = mix64(h ^ (b * 0x165667B19E3779F9ull + 0xD6E8FEB86659FD93ull));
    h = mix64(h ^ (c * 0xFF51AFD7ED558CCDull + 0xC4CEB9FE1A85EC53ull));
    return h;
}

// Counter-based generator over one stream: output i is a pure function of
// (key, i). Splittable and trivially reproducible under parallelism.
class CounterRng {
public:
    explicit constexpr CounterRng(RngStream s)
        : key_(detail::mix64(detail::mix64(s.master_seed ^ 0x5851F42D4C957F2Dull) +
                             detail::mix64(s.stream_id ^ 0x14057B7EF767814Full))) {}

    constexpr std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * detail::kGolden); }

    // Uniform draw in the open interval (0, 1); never returns an endpoint,
    // so it can feed quantile transforms directly.
    constexpr double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace prevci
