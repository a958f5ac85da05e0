#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rxndp {

/// Canonical text form used before any comparison or duplicate check:
/// trim, collapse internal whitespace runs to a single space, preserve case.
std::string normalize_text(std::string_view text);

/// Lenient UTF-8 decode; invalid bytes are kept as single units so arbitrary
/// model output never crashes the pipeline.
std::vector<char32_t> utf8_decode(std::string_view text);

/// Levenshtein distance over Unicode codepoints.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// distance / max(len(a), len(b), 1), lengths in codepoints.
double edit_ratio(std::string_view a, std::string_view b);

}  // namespace rxndp
