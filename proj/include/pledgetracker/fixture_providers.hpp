#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pledgetracker/providers.hpp"

namespace pledgetracker::providers {

/// Offline providers backed by a directory of JSON files:
///
///   search.json      {"queries": {"<query>": [{"url","title","snippet"}, ...]},
///                     "failures": {"<query>": "transport" | "rate_limited"}}
///   pages.json       {"pages": {"<url>": {"status", "title", "date", "body"} |
///                                        {"html": "..."} | {"status": 404}}}
///   llm.json         {"by_hash": {"<request hash>": response},
///                     "rules": [{"name", "contains": [..], ...response}]}
///                    response = {"text", "first_token_logprob" | "first_token_prob"}
///   embeddings.json  {"dimension": N, "vectors": {"<text>": [...]}}   (optional)
///
/// Every fixture provider is a pure function of its inputs.

class FixtureSearch final : public SearchProvider {
public:
    explicit FixtureSearch(const nlohmann::json& doc);
    std::vector<SearchHit> search(const std::string& query, const std::string& geo_scope,
                                  const MonitoringRange& window, std::size_t top_k) override;

    /// Lookup key: whitespace-collapsed, lowercased query.
    static std::string key(std::string_view query);

private:
    std::map<std::string, std::vector<SearchHit>> hits_;
    std::map<std::string, std::string> failures_;
};

class FixtureScraper final : public Scraper {
public:
    explicit FixtureScraper(const nlohmann::json& doc);
    ScrapedDocument scrape(const std::string& url) override;

private:
    std::map<std::string, nlohmann::json> pages_;  // keyed by normalized URL
};

class FixtureLlm final : public LlmProvider {
public:
    explicit FixtureLlm(const nlohmann::json& doc);
    LlmResponse complete(const LlmRequest& request) override;

    /// Hex FNV-1a 64 of system instruction, unit separator, prompt.
    static std::string request_hash(const LlmRequest& request);

    /// Hashes of requests that matched nothing, for fixture authoring.
    std::vector<std::string> misses() const;

private:
    struct Rule {
        std::string name;
        std::vector<std::string> contains;
        nlohmann::json response;
    };
    std::map<std::string, nlohmann::json> by_hash_;
    std::vector<Rule> rules_;
    mutable std::mutex misses_mutex_;
    std::vector<std::string> misses_;
};

/// Deterministic feature-hashing embedder: each index term adds ±1 to one of
/// `dimension` buckets (bucket and sign from FNV-1a), then the vector is
/// L2-normalised. Registered texts return their stored vector instead.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dimension = 256, std::map<std::string, std::vector<double>> registered = {});
    explicit HashingEmbedder(const nlohmann::json& doc);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

    [[nodiscard]] std::size_t dimension() const { return dimension_; }

private:
    std::size_t dimension_;
    std::map<std::string, std::vector<double>> registered_;
};

/// Loads search/pages/llm/embeddings fixtures from `dir`. Missing files give
/// empty providers (closed world).
ProviderSet load_fixture_world(const std::filesystem::path& dir);

}  // namespace pledgetracker::providers
