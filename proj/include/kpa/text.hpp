#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kpa::text {

/// Whitespace split; every token loses its leading and trailing ASCII
/// punctuation and tokens that end up empty are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Same as tokenize() with every token lowercased.
std::vector<std::string> tokenize_lower(std::string_view text);

std::size_t token_count(std::string_view text);

/// First sentence of `text`. A boundary is a run of `.`, `!` or `?` followed
/// by whitespace or the end of the text, unless the word ending in `.` is a
/// known abbreviation. Leading whitespace is dropped. Throws DataError
/// "empty comment" on blank input.
std::string first_sentence(std::string_view text);

bool is_ascii(std::string_view text);

/// Number of UTF-8 code points.
std::size_t char_count(std::string_view text);

std::string_view trim(std::string_view text);
std::string_view rtrim(std::string_view text);
std::string to_lower(std::string_view text);

}  // namespace kpa::text
