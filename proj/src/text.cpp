#include "rxndp/text.hpp"

#include <algorithm>
#include <cctype>

namespace rxndp {

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<char32_t> utf8_decode(std::string_view text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    char32_t cp = c;
    if (c >= 0xf0) {
      extra = 3;
      cp = c & 0x07u;
    } else if (c >= 0xe0) {
      extra = 2;
      cp = c & 0x0fu;
    } else if (c >= 0xc0) {
      extra = 1;
      cp = c & 0x1fu;
    }
    if (extra > 0) {
      if (i + extra >= text.size()) {
        out.push_back(c);  // truncated sequence: keep the raw byte
        ++i;
        continue;
      }
      bool ok = true;
      char32_t acc = cp;
      for (std::size_t k = 1; k <= extra; ++k) {
        const unsigned char cc = static_cast<unsigned char>(text[i + k]);
        if ((cc & 0xc0u) != 0x80u) {
          ok = false;
          break;
        }
        acc = (acc << 6) | (cc & 0x3fu);
      }
      if (!ok) {
        out.push_back(c);
        ++i;
        continue;
      }
      out.push_back(acc);
      i += extra + 1;
      continue;
    }
    out.push_back(cp);
    ++i;
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const std::vector<char32_t> ua = utf8_decode(a);
  const std::vector<char32_t> ub = utf8_decode(b);
  const std::size_t n = ua.size();
  const std::size_t m = ub.size();
  if (n == 0) return m;
  if (m == 0) return n;

  std::vector<std::size_t> prev(m + 1);
  std::vector<std::size_t> cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (ua[i - 1] == ub[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double edit_ratio(std::string_view a, std::string_view b) {
  const std::size_t len_a = utf8_decode(a).size();
  const std::size_t len_b = utf8_decode(b).size();
  const std::size_t denom = std::max<std::size_t>({len_a, len_b, 1});
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(denom);
}

}  // namespace rxndp
