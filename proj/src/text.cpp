#include "pledgetracker/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "pledgetracker/errors.hpp"

namespace pledgetracker::text {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

// Decodes one UTF-8 code point starting at i; advances i. Invalid bytes decode
// as U+FFFD and consume one byte.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || i + len > s.size()) {
        ++i;
        return 0xFFFD;
    }
    char32_t cp = b0 & (0xFF >> (len + 1));
    for (int k = 1; k < len; ++k) {
        auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    i += len;
    return cp;
}

bool is_word_code_point(char32_t cp) {
    if (cp < 0x80) return std::isalnum(static_cast<int>(cp)) != 0;
    if (cp < 0xC0) return false;                     // Latin-1 symbols, NBSP, £, ...
    if (cp == 0xD7 || cp == 0xF7) return false;       // × ÷
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;   // punctuation, currency, arrows, ...
    if (cp >= 0x3000 && cp <= 0x303F) return false;   // CJK punctuation
    if (cp == 0xFFFD || cp == 0xFEFF) return false;
    return true;
}

// NLTK English list plus a few contractions fragments.
const std::unordered_set<std::string_view>& stopwords() {
    static const std::unordered_set<std::string_view> words = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
        "aren", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
        "but", "by", "can", "couldn", "d", "did", "didn", "do", "does", "doesn", "doing", "don",
        "down", "during", "each", "few", "for", "from", "further", "had", "hadn", "has", "hasn",
        "have", "haven", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
        "how", "i", "if", "in", "into", "is", "isn", "it", "its", "itself", "just", "ll", "m", "ma",
        "me", "mightn", "more", "most", "mustn", "my", "myself", "needn", "no", "nor", "not", "now",
        "o", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out",
        "over", "own", "re", "s", "same", "shan", "she", "should", "shouldn", "so", "some", "such",
        "t", "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there",
        "these", "they", "this", "those", "through", "to", "too", "under", "until", "up", "ve",
        "very", "was", "wasn", "we", "were", "weren", "what", "when", "where", "which", "while",
        "who", "whom", "why", "will", "with", "won", "would", "wouldn", "y", "you", "your", "yours",
        "yourself", "yourselves", "could", "might", "must", "shall", "may", "also", "us"};
    return words;
}

const std::unordered_set<std::string_view>& abbreviations() {
    static const std::unordered_set<std::string_view> words = {
        "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "rt", "hon", "gen", "gov", "sen", "rep",
        "rev", "col", "lt", "capt", "sgt", "vs", "etc", "inc", "ltd", "co", "corp", "no", "nos",
        "approx", "dept", "est", "fig", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep",
        "sept", "oct", "nov", "dec", "e.g", "i.e", "u.k", "u.s", "u.n", "a.m", "p.m", "cf", "al"};
    return words;
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string{s.substr(b, e - b)};
}

std::string to_lower(std::string_view s) {
    std::string out{s};
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return lower(x) == lower(y); });
}

bool is_stopword(std::string_view lowered) {
    return stopwords().contains(lowered);
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string current;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t start = i;
        char32_t cp = next_code_point(s, i);
        if (is_word_code_point(cp)) {
            if (cp < 0x80)
                current.push_back(lower(static_cast<char>(cp)));
            else
                current.append(s.substr(start, i - start));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::vector<std::string> index_terms(std::string_view s) {
    auto tokens = word_tokens(s);
    std::erase_if(tokens, [](const std::string& t) { return is_stopword(t); });
    return tokens;
}

std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> out;
    auto flush = [&](std::size_t from, std::size_t to) {
        auto sentence = collapse_whitespace(s.substr(from, to - from));
        if (!sentence.empty()) out.push_back(std::move(sentence));
    };

    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '\n') {
            // Blank line = paragraph break.
            std::size_t j = i + 1;
            while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\r')) ++j;
            if (j < s.size() && s[j] == '\n') {
                flush(start, i);
                start = j + 1;
                i = j;
            }
            continue;
        }
        if (c != '.' && c != '!' && c != '?') continue;

        // Absorb runs of terminal punctuation and closing quotes/brackets.
        std::size_t end = i + 1;
        while (end < s.size() && (s[end] == '.' || s[end] == '!' || s[end] == '?' || s[end] == '"' ||
                                  s[end] == '\'' || s[end] == ')'))
            ++end;
        // UTF-8 closing quotes ’ ” (E2 80 99 / E2 80 9D).
        while (end + 2 < s.size() && static_cast<unsigned char>(s[end]) == 0xE2 &&
               static_cast<unsigned char>(s[end + 1]) == 0x80 &&
               (static_cast<unsigned char>(s[end + 2]) == 0x99 || static_cast<unsigned char>(s[end + 2]) == 0x9D))
            end += 3;

        if (end < s.size() && !is_space(s[end])) continue;  // "8.3", "gov.uk"

        std::size_t next = end;
        while (next < s.size() && is_space(s[next])) ++next;
        if (next < s.size()) {
            unsigned char n = static_cast<unsigned char>(s[next]);
            bool opener = std::isupper(n) || std::isdigit(n) || n == '"' || n == '\'' || n == '(' || n >= 0x80;
            if (!opener) continue;
        }

        if (c == '.') {
            std::size_t w = i;
            while (w > start && !is_space(s[w - 1])) --w;
            std::string word = to_lower(s.substr(w, i - w));
            while (!word.empty() && (word.front() == '(' || word.front() == '"')) word.erase(word.begin());
            if (abbreviations().contains(word)) continue;
            // Single capital initial, e.g. "J. Smith".
            if (word.size() == 1 && std::isalpha(static_cast<unsigned char>(word[0]))) continue;
        }
        flush(start, end);
        start = end;
        i = end - 1;
    }
    if (start < s.size()) flush(start, s.size());
    return out;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed: " + path);
}

}  // namespace pledgetracker::text
