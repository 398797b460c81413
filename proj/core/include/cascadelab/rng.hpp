#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace cascadelab {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
// A pure function of (counter, key); no state is carried between calls.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Stable 64-bit FNV-1a; used to turn role strings into stream identifiers.
std::uint64_t fnv1a64(std::string_view text) noexcept;

// Sub-seed for (master, role, index). Adding new roles never perturbs the
// streams of existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::string_view role, std::uint64_t index) noexcept;

// 128-bit word hash, built incrementally symbol by symbol so a child's key
// is derived from its parent's in O(1).
struct WordHash {
    std::uint64_t lo = 0x243F6A8885A308D3ULL;
    std::uint64_t hi = 0x13198A2E03707344ULL;

    [[nodiscard]] WordHash extend(std::uint32_t symbol) const noexcept;
    friend bool operator==(const WordHash&, const WordHash&) = default;
};

// Sequential view over a Philox stream keyed by a 64-bit seed and a 128-bit
// stream id. Identical (seed, id) pairs always produce identical sequences.
class KeyedStream {
public:
    KeyedStream(std::uint64_t seed, WordHash id) noexcept;
    KeyedStream(std::uint64_t seed, std::uint64_t stream) noexcept;

    std::uint32_t next_u32() noexcept;
    std::uint64_t next_u64() noexcept;
    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    // Uniform on (0, 1]; safe for log().
    double uniform_open_left() noexcept;
    double normal() noexcept;
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept;

private:
    void refill() noexcept;

    Philox4x32::Key key_{};
    Philox4x32::Counter base_{};
    std::uint64_t block_ = 0;
    Philox4x32::Counter buffer_{};
    int used_ = 4;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

}  // namespace cascadelab
