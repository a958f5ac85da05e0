#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace rxndp {

/// FNV-1a over bytes. Used for content hashes (replay keys, style/config
/// hashes, prompt template pins); not collision-resistant, not for security.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string to_hex(std::uint64_t value);

/// Convenience: fnv1a64 rendered as a fixed-width hex string.
std::string content_hash(std::string_view bytes);

}  // namespace rxndp
