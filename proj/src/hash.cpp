#include "rxndp/hash.hpp"

#include <array>

namespace rxndp {

std::string to_hex(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string content_hash(std::string_view bytes) { return to_hex(fnv1a64(bytes)); }

}  // namespace rxndp
