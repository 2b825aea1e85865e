#include "mssum/textutil.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace mssum {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

std::vector<std::pair<std::size_t, std::size_t>> split_sentences(const std::string& text) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n) break;
        std::size_t start = i;
        std::size_t end = n;
        for (std::size_t j = i; j < n; ++j) {
            char c = text[j];
            if (c == '\n') {
                end = j;
                break;
            }
            if (c == '.' || c == '!' || c == '?') {
                std::size_t k = j;
                while (k + 1 < n &&
                       (text[k + 1] == '.' || text[k + 1] == '!' || text[k + 1] == '?')) {
                    ++k;
                }
                end = k + 1;
                break;
            }
        }
        std::size_t e = end;
        while (e > start && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
        if (e > start) out.emplace_back(start, e);
        i = std::max(end, start + 1);
    }
    return out;
}

std::string normalize_loose(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            if (pending_space && !out.empty()) out += ' ';
            pending_space = false;
            out += static_cast<char>(std::tolower(c));
        } else {
            pending_space = true;
        }
    }
    return out;
}

std::vector<std::string> whitespace_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

double token_jaccard(const std::string& a, const std::string& b) {
    auto words_of = [](const std::string& s) {
        std::set<std::string> w;
        for (auto& t : whitespace_tokens(normalize_loose(s))) w.insert(t);
        return w;
    };
    std::set<std::string> wa = words_of(a), wb = words_of(b);
    if (wa.empty() && wb.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : wa) inter += wb.count(t);
    std::size_t uni = wa.size() + wb.size() - inter;
    return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

std::string truncate_tokens(const std::string& s, std::size_t n) {
    if (n == 0) return "";
    std::size_t i = 0, seen = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i >= s.size()) break;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (++seen == n) return s.substr(0, i);
    }
    return s;
}

}  // namespace mssum
