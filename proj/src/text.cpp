#include "knowtrans/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace knowtrans {

namespace {

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

}  // namespace

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c) != 0) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (is_word_byte(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::map<std::string, std::size_t> char_trigram_counts(std::string_view text) {
    std::map<std::string, std::size_t> counts;
    const std::string norm = normalize_text(text);
    if (norm.empty()) return counts;
    if (norm.size() < 3) {
        counts[norm] = 1;
        return counts;
    }
    for (std::size_t i = 0; i + 3 <= norm.size(); ++i) ++counts[norm.substr(i, 3)];
    return counts;
}

TextProfile TextProfile::from(std::string_view text) {
    TextProfile p;
    p.normalized = normalize_text(text);
    p.tokens = tokenize(text);
    for (const auto& t : p.tokens) ++p.token_counts[t];
    p.distinct_tokens.reserve(p.token_counts.size());
    for (const auto& [t, _] : p.token_counts) p.distinct_tokens.push_back(t);
    for (const auto& [g, _] : char_trigram_counts(text)) p.trigrams.push_back(g);
    return p;
}

std::size_t sorted_intersection_size(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b) {
    std::size_t n = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::size_t inter = sorted_intersection_size(a, b);
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double normalized_overlap(const std::vector<std::string>& a,
                          const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0.0;
    const auto inter = static_cast<double>(sorted_intersection_size(a, b));
    return inter / std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

bool contains_token_run(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
           haystack.end();
}

double trigram_cosine(std::string_view a, std::string_view b) {
    const auto ca = char_trigram_counts(a);
    const auto cb = char_trigram_counts(b);
    if (ca.empty() && cb.empty()) return 1.0;
    if (ca.empty() || cb.empty()) return 0.0;
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [g, n] : ca) {
        na += static_cast<double>(n * n);
        if (auto it = cb.find(g); it != cb.end()) dot += static_cast<double>(n * it->second);
    }
    for (const auto& [g, n] : cb) nb += static_cast<double>(n * n);
    const double sim = dot / std::sqrt(na * nb);
    return std::clamp(sim, 0.0, 1.0);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

}  // namespace knowtrans
