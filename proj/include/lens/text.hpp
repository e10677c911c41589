#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the vocabulary, prompting, reasoning and
// metric layers. All functions operate on UTF-8 bytes; case folding is ASCII
// only so non-ASCII class names pass through untouched.
namespace lens::text {

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

// lowercase + trim + collapse inner whitespace runs to one space
std::string canonicalize(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

void replace_all(std::string& s, std::string_view from, std::string_view to);

// FNV-1a, 64 bit. Used to derive seeds and content fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t v);

// Levenshtein distance over bytes.
std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace lens::text
