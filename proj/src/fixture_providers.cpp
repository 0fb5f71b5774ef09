#include "pledgetracker/fixture_providers.hpp"
#include "pledgetracker/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <spdlog/spdlog.h>

#include "pledgetracker/html_extract.hpp"
#include "pledgetracker/text.hpp"
#include "pledgetracker/url.hpp"

namespace pledgetracker::providers {

using nlohmann::json;

namespace {

json load_json_or_empty(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return json::object();
    try {
        return json::parse(text::read_file(path.string()));
    } catch (const json::exception& e) {
        throw InputError("bad fixture file " + path.string() + ": " + e.what());
    }
}

ProviderErrorKind kind_from(const std::string& name) {
    if (name == "rate_limited") return ProviderErrorKind::rate_limited;
    if (name == "empty_response") return ProviderErrorKind::empty_response;
    if (name == "not_found") return ProviderErrorKind::not_found;
    return ProviderErrorKind::transport;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string FixtureSearch::key(std::string_view query) {
    return text::to_lower(text::collapse_whitespace(query));
}

FixtureSearch::FixtureSearch(const json& doc) {
    if (doc.contains("queries")) {
        for (const auto& [query, list] : doc["queries"].items()) {
            std::vector<SearchHit> hits;
            int rank = 1;
            for (const auto& h : list) {
                hits.push_back(SearchHit{h.at("url").get<std::string>(), h.value("title", ""), h.value("snippet", ""),
                                         rank++});
            }
            hits_[key(query)] = std::move(hits);
        }
    }
    if (doc.contains("failures"))
        for (const auto& [query, kind] : doc["failures"].items()) failures_[key(query)] = kind.get<std::string>();
}

std::vector<SearchHit> FixtureSearch::search(const std::string& query, const std::string& /*geo_scope*/,
                                             const MonitoringRange& /*window*/, std::size_t top_k) {
    if (top_k == 0) throw ProviderError(ProviderErrorKind::invalid_request, "top_k must be >= 1");
    auto k = key(query);
    if (auto f = failures_.find(k); f != failures_.end()) {
        auto kind = kind_from(f->second);
        throw ProviderError(kind, "fixture search failure for '" + query + "'",
                            kind == ProviderErrorKind::rate_limited
                                ? std::optional<std::chrono::milliseconds>{std::chrono::milliseconds{1000}}
                                : std::nullopt);
    }
    auto it = hits_.find(k);
    if (it == hits_.end()) return {};
    std::vector<SearchHit> out = it->second;
    if (out.size() > top_k) out.resize(top_k);
    return out;
}

// ---------------------------------------------------------------------------

FixtureScraper::FixtureScraper(const json& doc) {
    if (!doc.contains("pages")) return;
    for (const auto& [url, page] : doc["pages"].items()) pages_[normalize_url(url)] = page;
}

ScrapedDocument FixtureScraper::scrape(const std::string& url) {
    auto it = pages_.find(normalize_url(url));
    if (it == pages_.end()) throw ProviderError(ProviderErrorKind::not_found, "not found: " + url);
    const json& page = it->second;
    int status = page.value("status", 200);
    if (status == 404 || status == 410) throw ProviderError(ProviderErrorKind::not_found, "not found: " + url);
    if (status >= 500) throw ProviderError(ProviderErrorKind::transport, "server error " + std::to_string(status));
    if (status >= 400) throw ProviderError(ProviderErrorKind::scrape_failed, "HTTP " + std::to_string(status));
    auto content_type = page.value("content_type", "text/html");
    if (content_type.find("html") == std::string::npos)
        throw ProviderError(ProviderErrorKind::scrape_failed, "not HTML (" + content_type + "): " + url);

    ScrapedDocument doc;
    doc.url = url;
    if (page.contains("html")) {
        auto extracted = html::extract_main_text(page["html"].get<std::string>());
        doc.title = extracted.title;
        doc.publication_date = extracted.publication_date;
        doc.body = extracted.body;
    } else {
        doc.title = page.value("title", "");
        if (page.contains("date") && page["date"].is_string()) doc.publication_date = parse_iso_date(page["date"].get<std::string>());
        doc.body = page.value("body", "");
    }
    if (text::trim(doc.body).empty()) throw ProviderError(ProviderErrorKind::scrape_failed, "empty extraction: " + url);
    return doc;
}

// ---------------------------------------------------------------------------

FixtureLlm::FixtureLlm(const json& doc) {
    if (doc.contains("by_hash"))
        for (const auto& [hash, response] : doc["by_hash"].items()) by_hash_[hash] = response;
    if (doc.contains("rules")) {
        for (const auto& r : doc["rules"]) {
            Rule rule;
            rule.name = r.value("name", "");
            for (const auto& c : r.at("contains")) rule.contains.push_back(c.get<std::string>());
            rule.response = r;
            rules_.push_back(std::move(rule));
        }
    }
}

std::string FixtureLlm::request_hash(const LlmRequest& request) {
    return text::hex64(text::fnv1a64(request.system_instruction + '\x1f' + request.prompt));
}

LlmResponse FixtureLlm::complete(const LlmRequest& request) {
    request.validate();
    const json* match = nullptr;
    auto hash = request_hash(request);
    if (auto it = by_hash_.find(hash); it != by_hash_.end()) {
        match = &it->second;
    } else {
        for (const auto& rule : rules_) {
            bool all = std::all_of(rule.contains.begin(), rule.contains.end(), [&](const std::string& needle) {
                return request.prompt.find(needle) != std::string::npos ||
                       request.system_instruction.find(needle) != std::string::npos;
            });
            if (all) {
                match = &rule.response;
                break;
            }
        }
    }
    if (!match) {
        {
            std::lock_guard lock(misses_mutex_);
            misses_.push_back(hash);
        }
        spdlog::debug("fixture llm miss {} for prompt: {}", hash, request.prompt.substr(0, 400));
        throw ProviderError(ProviderErrorKind::empty_response, "no fixture completion for request " + hash);
    }
    if (match->contains("error"))
        throw ProviderError(kind_from((*match)["error"].get<std::string>()), "fixture llm error");

    LlmResponse response;
    response.text = match->value("text", "");
    if (text::trim(response.text).empty())
        throw ProviderError(ProviderErrorKind::empty_response, "empty completion for request " + hash);
    if (request.want_first_token_logprob) {
        if (match->contains("first_token_logprob"))
            response.first_token_logprob = (*match)["first_token_logprob"].get<double>();
        else if (match->contains("first_token_prob"))
            response.first_token_logprob = std::log((*match)["first_token_prob"].get<double>());
    }
    return response;
}

std::vector<std::string> FixtureLlm::misses() const {
    std::lock_guard lock(misses_mutex_);
    return misses_;
}

// ---------------------------------------------------------------------------

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::map<std::string, std::vector<double>> registered)
    : dimension_(dimension), registered_(std::move(registered)) {
    if (dimension_ == 0) throw InputError("embedding dimension must be positive");
    for (const auto& [text, v] : registered_)
        if (v.size() != dimension_) throw InputError("registered vector for '" + text + "' has wrong dimension");
}

HashingEmbedder::HashingEmbedder(const json& doc)
    : HashingEmbedder(doc.value("dimension", std::size_t{256}),
                      doc.contains("vectors") ? doc["vectors"].get<std::map<std::string, std::vector<double>>>()
                                               : std::map<std::string, std::vector<double>>{}) {}

std::vector<EmbeddingVector> HashingEmbedder::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw ProviderError(ProviderErrorKind::invalid_request, "nothing to embed");
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        if (auto it = registered_.find(t); it != registered_.end()) {
            out.push_back({it->second});
            continue;
        }
        EmbeddingVector v{std::vector<double>(dimension_, 0.0)};
        for (const auto& term : text::index_terms(t)) {
            auto h = text::fnv1a64(term);
            double sign = ((h >> 63) & 1U) ? -1.0 : 1.0;
            v.values[h % dimension_] += sign;
        }
        double norm = 0;
        for (double x : v.values) norm += x * x;
        if (norm > 0) {
            norm = std::sqrt(norm);
            for (double& x : v.values) x /= norm;
        }
        out.push_back(std::move(v));
    }
    return out;
}

ProviderSet load_fixture_world(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw InputError("fixture directory not found: " + dir.string());
    ProviderSet set;
    set.search = std::make_shared<FixtureSearch>(load_json_or_empty(dir / "search.json"));
    set.scraper = std::make_shared<FixtureScraper>(load_json_or_empty(dir / "pages.json"));
    set.llm = std::make_shared<FixtureLlm>(load_json_or_empty(dir / "llm.json"));
    set.embedder = std::make_shared<HashingEmbedder>(load_json_or_empty(dir / "embeddings.json"));
    return set;
}

}  // namespace pledgetracker::providers
