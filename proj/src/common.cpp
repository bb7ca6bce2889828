#include "nuteval/error.hpp"
#include "nuteval/hash.hpp"
#include "nuteval/random.hpp"

namespace nuteval {

std::string to_string(const Diagnostic& d) {
    std::string out;
    switch (d.severity) {
        case Severity::Info: out = "info"; break;
        case Severity::Warning: out = "warning"; break;
        case Severity::Error: out = "error"; break;
    }
    if (d.line) out += " (line " + std::to_string(*d.line) + ")";
    out += ": ";
    out += d.message;
    return out;
}

std::string to_hex(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

namespace {

constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
}

double Rng::uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    // Reject the top partial block so every residue is equally likely.
    const std::uint64_t limit = max() - (max() % bound + 1) % bound;
    std::uint64_t x = next();
    while (x > limit) x = next();
    return x % bound;
}

Rng Rng::split(std::string_view tag) const noexcept {
    return Rng(mix(state_ ^ fnv1a64(tag)));
}

}  // namespace nuteval
