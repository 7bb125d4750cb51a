#include "oct/seed.hpp"

namespace oct {

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a(std::string_view text) {
    return fnv1a(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view id, std::uint64_t epoch, std::uint64_t stream) {
    std::uint64_t h = splitmix64(global_seed);
    h = splitmix64(h ^ fnv1a(id));
    h = splitmix64(h ^ epoch);
    return splitmix64(h ^ (stream * 0xd1b54a32d192ed03ULL));
}

}  // namespace oct
