#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pledgetracker::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string collapse_whitespace(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
bool iequals(std::string_view a, std::string_view b);

bool is_stopword(std::string_view lowered);

/// Lowercased word tokens. ASCII letters/digits and non-symbol UTF-8 letters
/// form tokens; everything else separates.
std::vector<std::string> word_tokens(std::string_view s);

/// word_tokens with stopwords removed; the term stream used by BM25, TF-IDF
/// and the hashing embedder.
std::vector<std::string> index_terms(std::string_view s);

/// Rule-based sentence splitter. Splits on . ! ? followed by whitespace and an
/// uppercase letter, digit or quote, and on blank lines. Known abbreviations
/// and decimals do not end a sentence.
std::vector<std::string> split_sentences(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace pledgetracker::text
