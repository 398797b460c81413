#include "cascadelab/rng.hpp"

#include <cmath>
#include <numbers>

namespace cascadelab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

inline std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view role, std::uint64_t index) noexcept {
    std::uint64_t h = splitmix64(master ^ 0x5851F42D4C957F2DULL);
    h = splitmix64(h ^ fnv1a64(role));
    return splitmix64(h ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

WordHash WordHash::extend(std::uint32_t symbol) const noexcept {
    const std::uint64_t s = static_cast<std::uint64_t>(symbol) + 1;
    WordHash next;
    next.lo = splitmix64(lo ^ (s * 0xD6E8FEB86659FD93ULL) ^ rotl(hi, 17));
    next.hi = splitmix64(hi + s * 0xA0761D6478BD642FULL + rotl(next.lo, 29));
    return next;
}

KeyedStream::KeyedStream(std::uint64_t seed, WordHash id) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      base_{static_cast<std::uint32_t>(id.lo), static_cast<std::uint32_t>(id.lo >> 32),
            static_cast<std::uint32_t>(id.hi), static_cast<std::uint32_t>(id.hi >> 32)} {}

KeyedStream::KeyedStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : KeyedStream(seed, WordHash{splitmix64(stream), splitmix64(~stream)}) {}

void KeyedStream::refill() noexcept {
    // Block index is added to the low 64 bits of the counter.
    const std::uint64_t low = (static_cast<std::uint64_t>(base_[1]) << 32 | base_[0]) + block_;
    Philox4x32::Counter ctr{static_cast<std::uint32_t>(low), static_cast<std::uint32_t>(low >> 32), base_[2],
                            base_[3]};
    buffer_ = Philox4x32::generate(ctr, key_);
    ++block_;
    used_ = 0;
}

std::uint32_t KeyedStream::next_u32() noexcept {
    if (used_ >= 4) refill();
    return buffer_[used_++];
}

std::uint64_t KeyedStream::next_u64() noexcept {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
}

double KeyedStream::uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double KeyedStream::uniform_open_left() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double KeyedStream::normal() noexcept {
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return spare_normal_;
    }
    // Box-Muller; written out so output does not depend on the standard library.
    const double u1 = uniform_open_left();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_normal_ = true;
    return radius * std::cos(angle);
}

std::uint64_t KeyedStream::below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    // Reject the top partial bucket so the modulo is unbiased.
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

}  // namespace cascadelab
