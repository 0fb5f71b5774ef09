#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pledgetracker/domain.hpp"
#include "pledgetracker/errors.hpp"

namespace pledgetracker::providers {

struct LlmRequest {
    std::string system_instruction;
    std::string prompt;
    double temperature = 0.0;
    double nucleus_mass = 1.0;  // top-p, in (0, 1]
    int max_output = 512;
    bool want_first_token_logprob = false;

    /// Throws ProviderError(invalid_request) when an invariant is broken.
    void validate() const;
};

struct LlmResponse {
    std::string text;
    std::optional<double> first_token_logprob;  // <= 0, only when requested and supported
};

struct SearchHit {
    std::string url;
    std::string title;
    std::string snippet;
    int rank = 1;  // 1-based, unique within one page

    bool operator==(const SearchHit&) const = default;
};

struct EmbeddingVector {
    std::vector<double> values;
    [[nodiscard]] std::size_t dimension() const { return values.size(); }
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual LlmResponse complete(const LlmRequest& request) = 0;
};

class SearchProvider {
public:
    virtual ~SearchProvider() = default;
    /// At most `top_k` hits ranked by provider prominence, restricted to
    /// `geo_scope` and `window` where the provider supports it.
    virtual std::vector<SearchHit> search(const std::string& query, const std::string& geo_scope,
                                          const MonitoringRange& window, std::size_t top_k) = 0;
};

class Scraper {
public:
    virtual ~Scraper() = default;
    /// Throws ProviderError(not_found | scrape_failed | transport).
    virtual ScrapedDocument scrape(const std::string& url) = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    /// One vector per input, order preserved, constant dimension.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

struct ProviderSet {
    std::shared_ptr<SearchProvider> search;
    std::shared_ptr<Scraper> scraper;
    std::shared_ptr<LlmProvider> llm;
    std::shared_ptr<Embedder> embedder;
};

// ---------------------------------------------------------------------------
// Retries

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

/// Runs `fn`, retrying transport and rate-limit failures with exponential
/// backoff. A rate-limit retry waits at least the provider's retry-after hint.
template <typename F>
auto with_retries(const RetryPolicy& policy, const Sleeper& sleep, F&& fn) -> decltype(fn()) {
    auto backoff = policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const ProviderError& e) {
            if (!e.retryable() || attempt >= policy.max_attempts) throw;
            auto wait = backoff;
            if (e.retry_after() && *e.retry_after() > wait) wait = *e.retry_after();
            if (sleep) sleep(wait);
            backoff = std::chrono::milliseconds{
                static_cast<std::chrono::milliseconds::rep>(static_cast<double>(backoff.count()) * policy.multiplier)};
        }
    }
}

/// Wraps every provider of `inner` with `with_retries`.
ProviderSet with_retry_policy(ProviderSet inner, RetryPolicy policy, Sleeper sleep = real_sleep);

}  // namespace pledgetracker::providers
