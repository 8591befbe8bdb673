#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace bdlab {

/// Whitespace normalization shared by payload-containment checks and trigger
/// matching. Line endings become LF, interior runs of spaces/tabs collapse to
/// one space, and trailing whitespace is stripped per line. Leading
/// indentation is kept verbatim because it is significant in the target
/// language.
std::string normalize_code(std::string_view text);

/// True iff normalize_code(needle) occurs contiguously in
/// normalize_code(haystack). Empty needles never match.
bool contains_normalized(std::string_view haystack, std::string_view needle);

/// FNV-1a, used wherever a stable cross-platform string hash is needed
/// (std::hash is not reproducible across standard libraries).
std::uint64_t fnv1a64(std::string_view data);

/// Trim ASCII whitespace from both ends.
std::string_view trim(std::string_view s);

}  // namespace bdlab
