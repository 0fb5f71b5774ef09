#include "pledgetracker/noun_phrases.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "pledgetracker/text.hpp"

namespace pledgetracker::np {

namespace {

using Lexicon = std::unordered_set<std::string_view>;

const Lexicon kDeterminers = {"a",    "an",    "the",   "this",  "that",    "these",   "those", "every",
                              "each", "all",   "some",  "any",   "no",      "its",     "their", "our",
                              "his",  "her",   "my",    "your",  "another", "both",    "either", "neither"};
const Lexicon kPronouns = {"i",      "we",      "you",    "he",     "she",        "it",         "they",
                           "me",     "us",      "him",    "them",   "who",        "whom",       "whose",
                           "which",  "what",    "mine",   "ours",   "yours",      "theirs",     "itself",
                           "itself", "themselves", "ourselves", "everyone", "everything", "anyone", "nothing",
                           "someone", "something"};
const Lexicon kAdpositions = {"of",     "in",      "on",      "at",      "by",     "for",    "with",   "from",
                              "into",   "onto",    "over",    "under",   "about",  "against", "between", "through",
                              "during", "before",  "after",   "above",   "below",  "across", "along",  "around",
                              "among",  "within",  "without", "towards", "toward", "upon",   "via",    "per",
                              "than",   "as",      "like",    "beyond",  "despite", "until", "since",  "throughout"};
const Lexicon kConjunctions = {"and", "or", "but", "nor", "yet", "so", "because", "although", "though",
                               "while", "whereas", "if", "unless", "whether", "&"};
const Lexicon kAuxiliaries = {"will", "would", "shall", "should", "can",  "could", "may",   "might",
                              "must", "do",    "does",  "did",    "be",   "is",    "are",   "was",
                              "were", "been",  "being", "am",     "have", "has",   "had",   "won't",
                              "can't", "cannot"};
const Lexicon kModals = {"will", "would", "shall", "should", "can", "could", "may", "might", "must", "won't", "can't",
                         "cannot"};
const Lexicon kAdverbs = {"very",  "also",   "just",   "only",   "still",  "already", "again", "now",
                          "then",  "soon",   "never",  "always", "often",  "quickly", "fully", "well",
                          "up",    "out",    "back",   "down",   "off",    "not",     "immediately", "finally",
                          "too",   "here",   "there",  "forward", "away",  "together", "urgently", "properly"};
const Lexicon kAdjectives = {"new",     "old",      "great",   "high",    "low",      "free",      "fair",
                             "full",    "good",     "bad",     "big",     "small",    "large",     "long",
                             "short",   "first",    "last",    "next",    "more",     "less",      "fewer",
                             "extra",   "own",      "green",   "clean",   "safe",     "secure",    "british",
                             "english", "scottish", "welsh",   "irish",   "national", "local",     "public",
                             "private", "social",   "young",   "major",   "key",      "further",   "better",
                             "best",    "higher",   "lower",   "greater", "strong",   "stronger",  "real",
                             "net",     "independent", "global", "affordable", "modern", "fast", "faster",
                             "every",   "same",     "other",   "many",    "most",     "several",   "few",
                             "additional", "specialist", "vital", "fairer", "cheaper", "safer", "cleaner"};
const Lexicon kNumberWords = {"one",   "two",     "three",  "four",    "five",     "six",     "seven",
                              "eight", "nine",    "ten",    "eleven",  "twelve",   "twenty",  "thirty",
                              "forty", "fifty",   "hundred", "thousand", "million", "billion", "trillion",
                              "dozen", "hundreds", "thousands", "millions", "billions"};
const Lexicon kVerbs = {
    "ban",       "introduce", "build",     "deliver",  "create",    "cut",        "raise",     "recruit",
    "set",       "establish", "make",      "end",      "give",      "take",       "protect",   "reform",
    "reduce",    "increase",  "invest",    "fund",     "abolish",   "scrap",      "support",   "ensure",
    "provide",   "launch",    "capitalise", "capitalize", "tackle", "stop",       "freeze",    "cap",
    "lower",     "extend",    "expand",    "strengthen", "improve", "bring",      "put",       "keep",
    "legislate", "implement", "halve",     "double",   "hire",      "train",      "open",      "close",
    "restore",   "secure",    "tax",       "charge",   "apply",     "remove",     "add",       "require",
    "allow",     "help",      "plan",      "work",     "get",       "let",        "back",      "hold",
    "publish",   "review",    "replace",   "renationalise", "nationalise", "pass", "start",    "lead",
    "achieve",   "maintain",  "offer",     "commit",   "pledge",    "promise",    "crack",     "clamp",
    "deploy",    "tighten",   "transform", "guarantee", "modernise", "reverse",   "repeal",    "enshrine",
    "outlaw",    "prevent",   "bring",     "fix",      "lift",      "slash",      "scrap",     "end",
    "announce",  "said",      "says",      "say",      "announced", "lost",       "won",       "became"};
// Words with an adjective-looking suffix that are usually nouns.
const Lexicon kNounExceptions = {
    "council",   "hospital",  "animal",   "proposal",  "approval",   "capital",    "arrival",    "renewal",
    "rival",     "signal",    "material", "potential", "official",   "individual", "professional", "criminal",
    "objective", "initiative", "executive", "representative", "relative", "detective", "incentive", "alternative",
    "motive",    "drive",     "archive",  "olive",     "music",      "clinic",     "traffic",    "topic",
    "logic",     "republic",  "public",   "arsenal",   "festival",   "journal",    "manual",     "portal",
    "rental",    "survival",  "tribunal", "terminal",  "principal",  "trial",      "general",    "local",
    "mechanism", "referendum", "legislative", "collective", "tariff", "pupil", "apprentice", "ethic"};

const std::vector<std::string_view> kAdjectiveSuffixes = {"ous", "ful", "ive", "able", "ible", "ic", "ical",
                                                          "ish", "less", "al"};

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() > suffix.size() + 2 && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_numeric(std::string_view s) {
    bool digit = false;
    for (char c : s) {
        if (std::isdigit(static_cast<unsigned char>(c))) digit = true;
        else if (c != '.' && c != ',') return false;
    }
    return digit;
}

struct RawToken {
    std::string text;
    bool is_punct;
};

bool word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

// Words are alphanumerics with internal hyphens, apostrophes and (between
// digits) dots and commas. A trailing "'s" is split off as its own token.
std::vector<RawToken> split_tokens(std::string_view s) {
    std::vector<RawToken> out;
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        // Currency and other multi-byte symbols count as punctuation.
        if (s.compare(i, 2, "\xC2\xA3") == 0 || s.compare(i, 3, "\xE2\x82\xAC") == 0) {
            std::size_t len = s[i] == '\xC2' ? 2 : 3;
            out.push_back({std::string(s.substr(i, len)), true});
            i += len;
            continue;
        }
        if (!word_byte(c)) {
            out.push_back({std::string(1, s[i]), true});
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size()) {
            unsigned char d = static_cast<unsigned char>(s[j]);
            if (word_byte(d)) {
                if (s.compare(j, 3, "\xE2\x80\x99") == 0) break;  // curly apostrophe
                ++j;
                continue;
            }
            bool inner = j + 1 < s.size() && word_byte(static_cast<unsigned char>(s[j + 1]));
            if (inner && d == '-') {
                ++j;
                continue;
            }
            if (inner && (d == '.' || d == ',') && j > i && std::isdigit(static_cast<unsigned char>(s[j - 1])) &&
                std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
                ++j;
                continue;
            }
            break;
        }
        std::string word(s.substr(i, j - i));
        out.push_back({word, false});
        i = j;
        // possessive / contraction
        std::size_t apos = 0;
        if (i < s.size() && s[i] == '\'') apos = 1;
        else if (s.compare(i, 3, "\xE2\x80\x99") == 0) apos = 3;
        if (apos && i + apos < s.size() && std::isalpha(static_cast<unsigned char>(s[i + apos]))) {
            std::size_t k = i + apos;
            while (k < s.size() && std::isalpha(static_cast<unsigned char>(s[k]))) ++k;
            out.push_back({"'" + std::string(s.substr(i + apos, k - i - apos)), false});
            i = k;
        }
    }
    return out;
}

bool has_upper_initial(std::string_view w) { return !w.empty() && std::isupper(static_cast<unsigned char>(w[0])); }

}  // namespace

const char* to_string(Tag tag) {
    switch (tag) {
        case Tag::det: return "DET";
        case Tag::pron: return "PRON";
        case Tag::adp: return "ADP";
        case Tag::conj: return "CONJ";
        case Tag::aux: return "AUX";
        case Tag::part: return "PART";
        case Tag::adv: return "ADV";
        case Tag::adj: return "ADJ";
        case Tag::num: return "NUM";
        case Tag::noun: return "NOUN";
        case Tag::verb: return "VERB";
        case Tag::punct: return "PUNCT";
    }
    return "?";
}

std::vector<TaggedToken> tag(std::string_view sentence) {
    auto raw = split_tokens(sentence);
    std::vector<TaggedToken> out;
    out.reserve(raw.size());
    bool sentence_start = true;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto& tok = raw[i];
        if (tok.is_punct) {
            out.push_back({tok.text, Tag::punct});
            if (tok.text == "." || tok.text == "!" || tok.text == "?" || tok.text == ":" || tok.text == ";")
                sentence_start = true;
            continue;
        }
        std::string lw = text::to_lower(tok.text);
        Tag prev = out.empty() ? Tag::punct : out.back().tag;
        std::string prev_word = out.empty() ? std::string() : text::to_lower(out.back().text);
        Tag t;

        if (lw[0] == '\'') {
            t = Tag::part;
        } else if (is_numeric(lw) || kNumberWords.count(lw)) {
            t = Tag::num;
        } else if (kDeterminers.count(lw)) {
            t = Tag::det;
        } else if (kPronouns.count(lw)) {
            t = Tag::pron;
        } else if (lw == "to") {
            t = Tag::part;
        } else if (kModals.count(lw) || (kAuxiliaries.count(lw) && prev != Tag::det && prev != Tag::adj)) {
            t = Tag::aux;
        } else if (kConjunctions.count(lw)) {
            t = Tag::conj;
        } else if (kAdpositions.count(lw)) {
            t = Tag::adp;
        } else if (!sentence_start && has_upper_initial(tok.text)) {
            t = Tag::noun;  // proper noun
        } else if (kVerbs.count(lw)) {
            bool verb_context = sentence_start || prev == Tag::pron || prev == Tag::aux || prev == Tag::adv ||
                                (prev == Tag::part && prev_word == "to") || prev == Tag::conj;
            t = verb_context ? Tag::verb : Tag::noun;
        } else if (kAdverbs.count(lw)) {
            t = Tag::adv;
        } else if (kAdjectives.count(lw)) {
            t = Tag::adj;
        } else if (ends_with(lw, "ing")) {
            t = (prev == Tag::det || prev == Tag::adj || prev == Tag::noun || prev == Tag::num) ? Tag::noun
                                                                                              : Tag::verb;
        } else if (ends_with(lw, "ed")) {
            t = (prev == Tag::det || prev == Tag::adj || prev == Tag::num || prev == Tag::adv) ? Tag::adj : Tag::verb;
        } else if (ends_with(lw, "ly")) {
            t = Tag::adv;
        } else if (kNounExceptions.count(lw)) {
            t = Tag::noun;
        } else if (std::any_of(kAdjectiveSuffixes.begin(), kAdjectiveSuffixes.end(),
                               [&](std::string_view suf) { return ends_with(lw, suf); })) {
            t = Tag::adj;
        } else {
            t = Tag::noun;
        }
        // "to" followed by a verb-lexicon word reads as an infinitive marker;
        // otherwise it is a preposition.
        if (t == Tag::part && lw == "to") {
            bool next_is_verb = i + 1 < raw.size() && kVerbs.count(text::to_lower(raw[i + 1].text));
            if (!next_is_verb) t = Tag::adp;
        }
        out.push_back({tok.text, t});
        sentence_start = false;
    }
    return out;
}

std::vector<std::string> extract_noun_phrases(std::string_view input) {
    auto tokens = tag(input);
    std::vector<std::string> phrases;
    std::set<std::string> seen;
    std::size_t i = 0;
    while (i < tokens.size()) {
        std::size_t j = i;
        if (tokens[j].tag == Tag::det) ++j;
        std::size_t content_start = j;
        while (j < tokens.size() && tokens[j].tag == Tag::num) ++j;
        while (j < tokens.size() && tokens[j].tag == Tag::adj) ++j;
        std::size_t nouns_start = j;
        while (j < tokens.size() && tokens[j].tag == Tag::noun) ++j;
        if (j == nouns_start) {
            ++i;
            continue;
        }
        std::string phrase;
        bool content = false;
        for (std::size_t k = content_start; k < j; ++k) {
            auto lw = text::to_lower(tokens[k].text);
            if (!text::is_stopword(lw)) content = true;
            if (!phrase.empty()) phrase += ' ';
            phrase += lw;
        }
        if (content && seen.insert(phrase).second) phrases.push_back(phrase);
        i = j;
    }
    return phrases;
}

}  // namespace pledgetracker::np
