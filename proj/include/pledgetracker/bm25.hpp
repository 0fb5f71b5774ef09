#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace pledgetracker::bm25 {

struct Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Okapi BM25 over pre-tokenised documents.
///
///   idf(t)      = ln(1 + (N - df(t) + 0.5) / (df(t) + 0.5))
///   score(q, d) = sum over query tokens t (repeats included) of
///                 idf(t) * tf(t,d) * (k1 + 1) / (tf(t,d) + k1 * (1 - b + b * |d| / avgdl))
class Index {
public:
    explicit Index(std::vector<std::vector<std::string>> documents, Params params = {});

    [[nodiscard]] std::size_t size() const { return docs_.size(); }
    [[nodiscard]] double average_length() const { return avgdl_; }
    [[nodiscard]] double idf(const std::string& term) const;
    [[nodiscard]] double score(const std::vector<std::string>& query, std::size_t doc) const;
    [[nodiscard]] std::vector<double> score_all(const std::vector<std::string>& query) const;

private:
    Params params_;
    std::vector<std::unordered_map<std::string, int>> docs_;
    std::vector<std::size_t> lengths_;
    std::unordered_map<std::string, int> df_;
    double avgdl_ = 0.0;
};

struct Ranked {
    std::size_t index;
    double score;
};

/// Highest scores first; equal scores keep ascending index order.
std::vector<Ranked> top_k(const std::vector<double>& scores, std::size_t k);

}  // namespace pledgetracker::bm25
