#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pledgetracker/domain.hpp"

namespace pledgetracker::matcher {

using SparseVector = std::vector<std::pair<std::size_t, double>>;  // sorted by term index

/// TF-IDF index over pledge claims.
///   weight(t, d) = tf(t, d) * (ln((1 + N) / (1 + df(t))) + 1), then L2-normalised.
struct PledgeIndex {
    struct Entry {
        std::string pledge_id;
        std::string claim;
        SparseVector weights;
    };
    std::vector<Entry> entries;
    std::map<std::string, std::size_t> vocabulary;
    std::vector<double> idf;  // by term index
    std::size_t doc_count = 0;
};

struct Suggestion {
    std::string pledge_id;
    double score = 0.0;

    bool operator==(const Suggestion&) const = default;
};

PledgeIndex build_index(const std::vector<Pledge>& pledges);

/// Weights for `text` under the index's frozen vocabulary and IDF; unknown
/// terms are ignored.
SparseVector vectorize(const PledgeIndex& index, std::string_view text);

double dot(const SparseVector& a, const SparseVector& b);

/// Descending cosine score, ties by pledge id; at most top_k results.
std::vector<Suggestion> suggest_similar(const PledgeIndex& index, std::string_view query_claim, std::size_t top_k);

/// Top suggestion when its score reaches `threshold`.
std::optional<Suggestion> best_match(const PledgeIndex& index, std::string_view query_claim, double threshold = 0.8);

void to_json(nlohmann::json& j, const PledgeIndex& index);
void from_json(const nlohmann::json& j, PledgeIndex& index);
void save_index(const PledgeIndex& index, const std::string& path);
PledgeIndex load_index(const std::string& path);

}  // namespace pledgetracker::matcher
