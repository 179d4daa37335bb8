#include "kpa/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "kpa/error.hpp"

namespace kpa::text {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_punct(char c) {
    auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u) != 0;
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

constexpr std::array<std::string_view, 18> kAbbreviations = {
    "e.g.", "i.e.", "etc.", "vs.", "dr.", "mr.", "mrs.", "ms.", "prof.",
    "st.", "jr.", "sr.", "inc.", "ltd.", "co.", "no.", "approx.", "a.m."};

bool ends_with_abbreviation(std::string_view head) {
    // The word that ends at the period under inspection.
    std::size_t start = head.find_last_of(" \t\r\n\f\v");
    std::string_view word = start == std::string_view::npos ? head : head.substr(start + 1);
    while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) {
        word.remove_prefix(1);
    }
    std::string lowered = to_lower(word);
    return std::find(kAbbreviations.begin(), kAbbreviations.end(), lowered) != kAbbreviations.end();
}

}  // namespace

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string_view rtrim(std::string_view s) {
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        std::string_view tok = text.substr(i, j - i);
        while (!tok.empty() && is_punct(tok.front())) tok.remove_prefix(1);
        while (!tok.empty() && is_punct(tok.back())) tok.remove_suffix(1);
        if (!tok.empty()) tokens.emplace_back(tok);
        i = j;
    }
    return tokens;
}

std::vector<std::string> tokenize_lower(std::string_view text) {
    auto tokens = tokenize(text);
    for (auto& t : tokens) t = to_lower(t);
    return tokens;
}

std::size_t token_count(std::string_view text) { return tokenize(text).size(); }

std::string first_sentence(std::string_view raw) {
    std::string_view text = trim(raw);
    if (text.empty()) throw DataError("empty comment");
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_terminal(text[i])) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < text.size() && is_terminal(text[end])) ++end;
        bool abbreviation = end - i == 1 && text[i] == '.' && ends_with_abbreviation(text.substr(0, end));
        // Closing quotes or brackets stay with the sentence they end.
        while (end < text.size() && (text[end] == '"' || text[end] == '\'' || text[end] == ')')) ++end;
        bool at_boundary = end == text.size() || is_space(text[end]);
        if (at_boundary && !abbreviation) return std::string(text.substr(0, end));
        i = end;
    }
    return std::string(text);
}

bool is_ascii(std::string_view text) {
    return std::all_of(text.begin(), text.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

std::size_t char_count(std::string_view text) {
    return static_cast<std::size_t>(std::count_if(
        text.begin(), text.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

}  // namespace kpa::text
