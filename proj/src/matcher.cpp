#include "pledgetracker/matcher.hpp"

#include <algorithm>
#include <cmath>

#include "pledgetracker/errors.hpp"
#include "pledgetracker/text.hpp"

namespace pledgetracker::matcher {

using nlohmann::json;

namespace {

SparseVector weigh(const std::map<std::size_t, int>& counts, const std::vector<double>& idf) {
    SparseVector v;
    double norm = 0.0;
    for (const auto& [term, tf] : counts) {
        double w = tf * idf[term];
        v.emplace_back(term, w);
        norm += w * w;
    }
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (auto& [_, w] : v) w /= norm;
    }
    return v;
}

}  // namespace

PledgeIndex build_index(const std::vector<Pledge>& pledges) {
    PledgeIndex index;
    index.doc_count = pledges.size();
    std::vector<std::map<std::size_t, int>> counts;
    std::vector<int> df;
    for (const auto& p : pledges) {
        std::map<std::size_t, int> c;
        for (const auto& t : text::index_terms(p.claim)) {
            auto [it, inserted] = index.vocabulary.emplace(t, index.vocabulary.size());
            if (inserted) df.push_back(0);
            ++c[it->second];
        }
        for (const auto& [term, _] : c) ++df[term];
        counts.push_back(std::move(c));
    }
    double n = static_cast<double>(index.doc_count);
    index.idf.resize(df.size());
    for (std::size_t t = 0; t < df.size(); ++t) index.idf[t] = std::log((1.0 + n) / (1.0 + df[t])) + 1.0;
    for (std::size_t i = 0; i < pledges.size(); ++i)
        index.entries.push_back({pledges[i].id, pledges[i].claim, weigh(counts[i], index.idf)});
    return index;
}

SparseVector vectorize(const PledgeIndex& index, std::string_view text) {
    std::map<std::size_t, int> counts;
    for (const auto& t : text::index_terms(text)) {
        auto it = index.vocabulary.find(t);
        if (it != index.vocabulary.end()) ++counts[it->second];
    }
    return weigh(counts, index.idf);
}

double dot(const SparseVector& a, const SparseVector& b) {
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first == b[j].first) s += a[i++].second * b[j++].second;
        else if (a[i].first < b[j].first) ++i;
        else ++j;
    }
    return s;
}

std::vector<Suggestion> suggest_similar(const PledgeIndex& index, std::string_view query_claim, std::size_t top_k) {
    if (top_k == 0) throw InputError("k must be >= 1");
    auto q = vectorize(index, query_claim);
    std::vector<Suggestion> out;
    out.reserve(index.entries.size());
    for (const auto& e : index.entries) out.push_back({e.pledge_id, std::clamp(dot(q, e.weights), 0.0, 1.0)});
    std::sort(out.begin(), out.end(), [](const Suggestion& a, const Suggestion& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.pledge_id < b.pledge_id;
    });
    if (out.size() > top_k) out.resize(top_k);
    return out;
}

std::optional<Suggestion> best_match(const PledgeIndex& index, std::string_view query_claim, double threshold) {
    if (index.entries.empty()) return std::nullopt;
    auto top = suggest_similar(index, query_claim, 1);
    if (top.empty() || top.front().score < threshold) return std::nullopt;
    return top.front();
}

void to_json(json& j, const PledgeIndex& index) {
    json entries = json::array();
    for (const auto& e : index.entries) {
        json w = json::array();
        for (const auto& [t, v] : e.weights) w.push_back({t, v});
        entries.push_back({{"pledge_id", e.pledge_id}, {"claim", e.claim}, {"weights", w}});
    }
    std::vector<std::string> terms(index.vocabulary.size());
    for (const auto& [t, i] : index.vocabulary) terms[i] = t;
    j = json{{"doc_count", index.doc_count}, {"terms", terms}, {"idf", index.idf}, {"entries", entries}};
}

void from_json(const json& j, PledgeIndex& index) {
    index = {};
    index.doc_count = j.at("doc_count").get<std::size_t>();
    auto terms = j.at("terms").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < terms.size(); ++i) index.vocabulary[terms[i]] = i;
    index.idf = j.at("idf").get<std::vector<double>>();
    if (index.idf.size() != terms.size()) throw InputError("pledge index: idf and vocabulary sizes differ");
    for (const auto& e : j.at("entries")) {
        PledgeIndex::Entry entry{e.at("pledge_id").get<std::string>(), e.value("claim", ""), {}};
        for (const auto& w : e.at("weights")) entry.weights.emplace_back(w.at(0).get<std::size_t>(), w.at(1).get<double>());
        index.entries.push_back(std::move(entry));
    }
}

void save_index(const PledgeIndex& index, const std::string& path) { text::write_file(path, json(index).dump()); }

PledgeIndex load_index(const std::string& path) {
    try {
        return json::parse(text::read_file(path)).get<PledgeIndex>();
    } catch (const json::exception& e) {
        throw InputError("pledge index " + path + ": " + e.what());
    }
}

}  // namespace pledgetracker::matcher
