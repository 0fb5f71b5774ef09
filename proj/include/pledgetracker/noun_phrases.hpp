#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pledgetracker::np {

enum class Tag { det, pron, adp, conj, aux, part, adv, adj, num, noun, verb, punct };

const char* to_string(Tag tag);

struct TaggedToken {
    std::string text;  // original casing
    Tag tag;
};

/// Lexicon and suffix based coarse tagger. Good enough for short claims; not
/// a general-purpose tagger.
std::vector<TaggedToken> tag(std::string_view sentence);

/// Chunks matching DET? NUM* ADJ* NOUN+, lowercased, leading determiner
/// dropped, stopword-only chunks removed, first-appearance order, no repeats.
std::vector<std::string> extract_noun_phrases(std::string_view text);

}  // namespace pledgetracker::np
