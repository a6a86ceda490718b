#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace knowtrans {

// Lowercases ASCII, collapses whitespace runs to one space and trims.
std::string normalize_text(std::string_view text);

// Lowercased runs of [A-Za-z0-9]; bytes >= 0x80 count as word characters.
std::vector<std::string> tokenize(std::string_view text);

// Character trigram counts over normalize_text(text). A non-empty text
// shorter than three characters contributes itself as a single gram.
std::map<std::string, std::size_t> char_trigram_counts(std::string_view text);

/// Precomputed lexical view of one text, shared by the feature extractors.
struct TextProfile {
    std::string normalized;
    std::vector<std::string> tokens;
    std::map<std::string, std::size_t> token_counts;
    std::vector<std::string> distinct_tokens;  // sorted
    std::vector<std::string> trigrams;         // sorted, distinct

    static TextProfile from(std::string_view text);
};

std::size_t sorted_intersection_size(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b);

// |A ∩ B| / |A ∪ B| over sorted distinct sets; 0 when both are empty.
double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

// |A ∩ B| / sqrt(|A| |B|) over sorted distinct sets; 0 when either is empty.
double normalized_overlap(const std::vector<std::string>& a,
                          const std::vector<std::string>& b);

// True when `needle` occurs as a contiguous, non-empty run inside `haystack`.
bool contains_token_run(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& needle);

// Cosine similarity of character-trigram count vectors, in [0, 1].
// Two texts without any grams (both empty) are defined as identical.
double trigram_cosine(std::string_view a, std::string_view b);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace knowtrans
