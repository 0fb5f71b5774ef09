#include "pledgetracker/bm25.hpp"

#include <algorithm>
#include <cmath>

namespace pledgetracker::bm25 {

Index::Index(std::vector<std::vector<std::string>> documents, Params params) : params_(params) {
    docs_.reserve(documents.size());
    std::size_t total = 0;
    for (const auto& doc : documents) {
        std::unordered_map<std::string, int> tf;
        for (const auto& t : doc) ++tf[t];
        for (const auto& [t, _] : tf) ++df_[t];
        lengths_.push_back(doc.size());
        total += doc.size();
        docs_.push_back(std::move(tf));
    }
    if (!docs_.empty()) avgdl_ = static_cast<double>(total) / static_cast<double>(docs_.size());
}

double Index::idf(const std::string& term) const {
    auto it = df_.find(term);
    double df = it == df_.end() ? 0.0 : it->second;
    double n = static_cast<double>(docs_.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Index::score(const std::vector<std::string>& query, std::size_t doc) const {
    if (avgdl_ <= 0.0) return 0.0;
    const auto& tf = docs_.at(doc);
    double norm = params_.k1 * (1.0 - params_.b + params_.b * static_cast<double>(lengths_[doc]) / avgdl_);
    double s = 0.0;
    for (const auto& term : query) {
        auto it = tf.find(term);
        if (it == tf.end()) continue;
        double f = it->second;
        s += idf(term) * f * (params_.k1 + 1.0) / (f + norm);
    }
    return s;
}

std::vector<double> Index::score_all(const std::vector<std::string>& query) const {
    std::vector<double> out(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) out[i] = score(query, i);
    return out;
}

std::vector<Ranked> top_k(const std::vector<double>& scores, std::size_t k) {
    std::vector<Ranked> ranked(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) ranked[i] = {i, scores[i]};
    std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) { return a.score > b.score; });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

}  // namespace pledgetracker::bm25
