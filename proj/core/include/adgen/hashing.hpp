#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adgen {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

/// 64-bit FNV-1a. Used for seeding mocks; not a content address.
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// splitmix64 finalizer over (seed, stream). All per-generation randomness is
/// derived through this so that generation i of a batch never depends on i-1.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace adgen
