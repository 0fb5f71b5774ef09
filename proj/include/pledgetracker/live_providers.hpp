#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "pledgetracker/providers.hpp"

namespace pledgetracker::providers {

struct HttpSettings {
    std::chrono::seconds connect_timeout{10};
    std::chrono::seconds read_timeout{60};
    std::string user_agent = "pledgetracker/0.1";
};

struct LiveSearchConfig {
    std::string endpoint = "https://www.googleapis.com/customsearch/v1";
    std::string api_key;
    std::string engine_id;
    HttpSettings http;
};

struct LiveLlmConfig {
    std::string endpoint = "https://api.openai.com/v1";  // POST {endpoint}/chat/completions
    std::string api_key;
    std::string model = "gpt-4o";
    HttpSettings http;
};

struct LiveEmbedConfig {
    std::string endpoint = "https://api.openai.com/v1";  // POST {endpoint}/embeddings
    std::string api_key;
    std::string model = "text-embedding-3-small";
    HttpSettings http;
};

// Request/response shaping, separated from transport so it can be tested
// without a network.

/// Two-letter country code for the search API's geolocation parameter.
std::string geo_to_country_code(std::string_view geo_scope);

/// Path and query string (no origin) for one search call.
std::string build_search_target(const LiveSearchConfig& config, const std::string& query,
                                const std::string& geo_scope, const MonitoringRange& window, std::size_t top_k);
std::vector<SearchHit> parse_search_response(const std::string& body, std::size_t top_k);

nlohmann::json build_chat_body(const std::string& model, const LlmRequest& request);
LlmResponse parse_chat_response(const std::string& body, bool want_logprob);

nlohmann::json build_embedding_body(const std::string& model, const std::vector<std::string>& texts);
std::vector<EmbeddingVector> parse_embedding_response(const std::string& body, std::size_t expected);

/// Maps a non-2xx HTTP status to the matching ProviderError and throws it.
[[noreturn]] void throw_for_status(int status, const std::string& retry_after_header, const std::string& context);

/// Counting gate limiting in-flight requests per host.
class HostLimiter {
public:
    explicit HostLimiter(int per_host = 2) : per_host_(per_host) {}

    class Permit {
    public:
        Permit(HostLimiter& owner, std::string host);
        ~Permit();
        Permit(const Permit&) = delete;
        Permit& operator=(const Permit&) = delete;

    private:
        HostLimiter& owner_;
        std::string host_;
    };

    Permit acquire(const std::string& host) { return Permit(*this, host); }
    int in_flight(const std::string& host) const;
    int peak(const std::string& host) const;

private:
    int per_host_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::map<std::string, int> active_;
    std::map<std::string, int> peak_;
};

class LiveSearch final : public SearchProvider {
public:
    explicit LiveSearch(LiveSearchConfig config);
    std::vector<SearchHit> search(const std::string& query, const std::string& geo_scope,
                                  const MonitoringRange& window, std::size_t top_k) override;

private:
    LiveSearchConfig config_;
};

class LiveLlm final : public LlmProvider {
public:
    explicit LiveLlm(LiveLlmConfig config);
    LlmResponse complete(const LlmRequest& request) override;

private:
    LiveLlmConfig config_;
};

class LiveEmbedder final : public Embedder {
public:
    explicit LiveEmbedder(LiveEmbedConfig config);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    LiveEmbedConfig config_;
};

class LiveScraper final : public Scraper {
public:
    explicit LiveScraper(HttpSettings http = {}, int per_host = 2, std::size_t max_bytes = 5 * 1024 * 1024);
    ScrapedDocument scrape(const std::string& url) override;
    HostLimiter& limiter() { return limiter_; }

private:
    HttpSettings http_;
    HostLimiter limiter_;
    std::size_t max_bytes_;
};

}  // namespace pledgetracker::providers
