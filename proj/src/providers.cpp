#include "pledgetracker/providers.hpp"
#include "pledgetracker/errors.hpp"

#include <cmath>

#include "pledgetracker/text.hpp"

namespace pledgetracker::providers {

void LlmRequest::validate() const {
    if (text::trim(prompt).empty()) throw ProviderError(ProviderErrorKind::invalid_request, "prompt is empty");
    if (!(temperature >= 0.0)) throw ProviderError(ProviderErrorKind::invalid_request, "temperature must be >= 0");
    if (!(nucleus_mass > 0.0 && nucleus_mass <= 1.0))
        throw ProviderError(ProviderErrorKind::invalid_request, "nucleus mass must be in (0, 1]");
    if (max_output <= 0) throw ProviderError(ProviderErrorKind::invalid_request, "max_output must be positive");
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension() || a.dimension() == 0) return 0.0;
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

class RetryingLlm final : public LlmProvider {
public:
    RetryingLlm(std::shared_ptr<LlmProvider> inner, RetryPolicy policy, Sleeper sleep)
        : inner_(std::move(inner)), policy_(policy), sleep_(std::move(sleep)) {}
    LlmResponse complete(const LlmRequest& request) override {
        return with_retries(policy_, sleep_, [&] { return inner_->complete(request); });
    }

private:
    std::shared_ptr<LlmProvider> inner_;
    RetryPolicy policy_;
    Sleeper sleep_;
};

class RetryingSearch final : public SearchProvider {
public:
    RetryingSearch(std::shared_ptr<SearchProvider> inner, RetryPolicy policy, Sleeper sleep)
        : inner_(std::move(inner)), policy_(policy), sleep_(std::move(sleep)) {}
    std::vector<SearchHit> search(const std::string& query, const std::string& geo_scope,
                                  const MonitoringRange& window, std::size_t top_k) override {
        return with_retries(policy_, sleep_, [&] { return inner_->search(query, geo_scope, window, top_k); });
    }

private:
    std::shared_ptr<SearchProvider> inner_;
    RetryPolicy policy_;
    Sleeper sleep_;
};

class RetryingScraper final : public Scraper {
public:
    RetryingScraper(std::shared_ptr<Scraper> inner, RetryPolicy policy, Sleeper sleep)
        : inner_(std::move(inner)), policy_(policy), sleep_(std::move(sleep)) {}
    ScrapedDocument scrape(const std::string& url) override {
        return with_retries(policy_, sleep_, [&] { return inner_->scrape(url); });
    }

private:
    std::shared_ptr<Scraper> inner_;
    RetryPolicy policy_;
    Sleeper sleep_;
};

class RetryingEmbedder final : public Embedder {
public:
    RetryingEmbedder(std::shared_ptr<Embedder> inner, RetryPolicy policy, Sleeper sleep)
        : inner_(std::move(inner)), policy_(policy), sleep_(std::move(sleep)) {}
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        return with_retries(policy_, sleep_, [&] { return inner_->embed(texts); });
    }

private:
    std::shared_ptr<Embedder> inner_;
    RetryPolicy policy_;
    Sleeper sleep_;
};

}  // namespace

ProviderSet with_retry_policy(ProviderSet inner, RetryPolicy policy, Sleeper sleep) {
    ProviderSet out;
    if (inner.search) out.search = std::make_shared<RetryingSearch>(std::move(inner.search), policy, sleep);
    if (inner.scraper) out.scraper = std::make_shared<RetryingScraper>(std::move(inner.scraper), policy, sleep);
    if (inner.llm) out.llm = std::make_shared<RetryingLlm>(std::move(inner.llm), policy, sleep);
    if (inner.embedder) out.embedder = std::make_shared<RetryingEmbedder>(std::move(inner.embedder), policy, sleep);
    return out;
}

}  // namespace pledgetracker::providers
