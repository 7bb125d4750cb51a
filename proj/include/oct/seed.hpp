#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace oct {

// FNV-1a over raw bytes; used for id hashing and parameter fingerprints.
std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text);

std::uint64_t splitmix64(std::uint64_t x);

// Per-image stream seed; independent of the order images are visited in.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view id, std::uint64_t epoch,
                          std::uint64_t stream = 0);

}  // namespace oct
