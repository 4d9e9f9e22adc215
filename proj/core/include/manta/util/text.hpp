#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace manta {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Split on any non-alphanumeric byte, lowercase the pieces. Used by the
/// feature-hash embedder and by keyword matching.
std::vector<std::string> tokenize_words(std::string_view s);

/// Whitespace-delimited token count (the tuning word-count metric).
std::size_t word_count(std::string_view s);

/// Split into sentences on '.', '!', '?', ';' and newlines; empty pieces dropped.
std::vector<std::string> split_sentences(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool contains_word(std::string_view haystack, std::string_view word);

}  // namespace manta
