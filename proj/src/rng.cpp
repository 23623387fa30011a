#include "lhsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace lhsim {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

// lanes of the third counter word
constexpr std::uint32_t kLaneBits = 0;
constexpr std::uint32_t kLaneNormal = 1;
constexpr std::uint32_t kLaneSequential = 2;

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::uint64_t join(std::uint32_t hi, std::uint32_t lo) {
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

} // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
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

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view id) {
    return mix64(mix64(seed) ^ fnv1a64(id));
}

Rng::Rng(std::uint64_t seed) : key_(mix64(seed)) {}

Rng Rng::substream(std::uint64_t id) const {
    Rng child(0);
    child.key_ = mix64(key_ ^ mix64(id + 0x632BE59BD9B4E019ull));
    return child;
}

std::array<std::uint32_t, 4> Rng::block(std::uint64_t counter, std::uint32_t lane) const {
    return philox4x32_10({static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32), lane, 0u},
                         {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
}

std::uint64_t Rng::bits_at(std::uint64_t counter) const {
    const auto b = block(counter, kLaneBits);
    return join(b[0], b[1]);
}

double Rng::uniform_at(std::uint64_t counter) const {
    return static_cast<double>(bits_at(counter) >> 11) * kTwoPow53Inv;
}

double Rng::normal_at(std::uint64_t counter) const {
    const auto b = block(counter, kLaneNormal);
    // u1 in (0, 1] keeps log finite
    const double u1 = static_cast<double>((join(b[0], b[1]) >> 11) + 1) * kTwoPow53Inv;
    const double u2 = static_cast<double>(join(b[2], b[3]) >> 11) * kTwoPow53Inv;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::next_bits() {
    const auto b = block(counter_++, kLaneSequential);
    return join(b[0], b[1]);
}

double Rng::uniform() {
    return static_cast<double>(next_bits() >> 11) * kTwoPow53Inv;
}

double Rng::uniform(double lo, double hi) {
    // lo + u*(hi-lo) can round up to hi when u is close to 1
    const double v = lo + uniform() * (hi - lo);
    return v < hi ? v : lo;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    for (;;) {
        const std::uint64_t r = next_bits();
        if (r < limit) {
            return r % bound;
        }
    }
}

} // namespace lhsim
