#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mssum {

// Stable 64-bit content hash (FNV-1a); used for seeding and config digests.
std::uint64_t fnv1a64(const std::string& s);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

// Sentence spans as (start, end) byte offsets. A sentence ends at a run of
// [.!?] or at a newline; leading/trailing whitespace is excluded from spans.
std::vector<std::pair<std::size_t, std::size_t>> split_sentences(const std::string& text);

// Lowercase, punctuation stripped, whitespace collapsed to single spaces.
std::string normalize_loose(const std::string& s);

std::vector<std::string> whitespace_tokens(const std::string& s);

// Token-level Jaccard overlap of the two strings' normalized word sets.
double token_jaccard(const std::string& a, const std::string& b);

// Keep at most n whitespace tokens, preserving original spacing up to the cut.
std::string truncate_tokens(const std::string& s, std::size_t n);

}  // namespace mssum
