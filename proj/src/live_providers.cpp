#include "pledgetracker/live_providers.hpp"
#include "pledgetracker/errors.hpp"

#include <algorithm>
#include <cctype>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "pledgetracker/html_extract.hpp"
#include "pledgetracker/text.hpp"
#include "pledgetracker/url.hpp"

namespace pledgetracker::providers {

using nlohmann::json;

namespace {

struct Split {
    std::string origin;
    std::string base_path;  // without trailing slash
};

Split split_endpoint(const std::string& endpoint) {
    auto parsed = parse_url(endpoint);
    if (!parsed) throw ProviderError(ProviderErrorKind::invalid_request, "bad endpoint: " + endpoint);
    std::string path = parsed->path;
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {parsed->origin(), path};
}

httplib::Client make_client(const std::string& origin, const HttpSettings& http) {
    httplib::Client client(origin);
    client.set_connection_timeout(http.connect_timeout);
    client.set_read_timeout(http.read_timeout);
    client.set_write_timeout(http.read_timeout);
    client.set_follow_location(true);
    client.set_default_headers({{"User-Agent", http.user_agent}});
    return client;
}

std::string yyyymmdd(const Date& d) {
    auto iso = to_iso(d);
    iso.erase(std::remove(iso.begin(), iso.end(), '-'), iso.end());
    return iso;
}

[[noreturn]] void throw_transport(const httplib::Error& err, const std::string& context) {
    throw ProviderError(ProviderErrorKind::transport, context + ": " + httplib::to_string(err));
}

json parse_body(const std::string& body, const std::string& context) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw ProviderError(ProviderErrorKind::empty_response, context + ": malformed JSON (" + e.what() + ")");
    }
}

}  // namespace

std::string geo_to_country_code(std::string_view geo_scope) {
    auto g = text::to_lower(text::trim(geo_scope));
    if (g == "uk" || g == "gb" || g == "united kingdom" || g == "great britain" || g == "england" ||
        g == "scotland" || g == "wales" || g == "northern ireland")
        return "uk";
    if (g == "us" || g == "usa" || g == "united states") return "us";
    if (g.size() == 2) return g;
    return {};
}

std::string build_search_target(const LiveSearchConfig& config, const std::string& query,
                                const std::string& geo_scope, const MonitoringRange& window, std::size_t top_k) {
    auto [origin, path] = split_endpoint(config.endpoint);
    std::string target = (path.empty() ? std::string("/") : path) + "?key=" + url_encode(config.api_key) +
                         "&cx=" + url_encode(config.engine_id) + "&q=" + url_encode(query) +
                         "&num=" + std::to_string(std::min<std::size_t>(top_k, 10));
    if (auto cc = geo_to_country_code(geo_scope); !cc.empty()) {
        std::string upper = cc;
        std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
        target += "&gl=" + cc + "&cr=country" + upper;
    }
    target += "&sort=" + url_encode("date:r:" + yyyymmdd(window.start) + ":" + yyyymmdd(window.end));
    return target;
}

std::vector<SearchHit> parse_search_response(const std::string& body, std::size_t top_k) {
    json doc = parse_body(body, "search");
    std::vector<SearchHit> hits;
    if (!doc.contains("items")) return hits;
    int rank = 1;
    for (const auto& item : doc["items"]) {
        if (hits.size() >= top_k) break;
        if (!item.contains("link") || !item["link"].is_string()) continue;
        hits.push_back({item["link"].get<std::string>(), item.value("title", ""), item.value("snippet", ""), rank++});
    }
    return hits;
}

json build_chat_body(const std::string& model, const LlmRequest& request) {
    json messages = json::array();
    if (!request.system_instruction.empty())
        messages.push_back({{"role", "system"}, {"content", request.system_instruction}});
    messages.push_back({{"role", "user"}, {"content", request.prompt}});
    json body = {{"model", model},
                 {"messages", messages},
                 {"temperature", request.temperature},
                 {"top_p", request.nucleus_mass},
                 {"max_tokens", request.max_output}};
    if (request.want_first_token_logprob) {
        body["logprobs"] = true;
        body["top_logprobs"] = 1;
    }
    return body;
}

LlmResponse parse_chat_response(const std::string& body, bool want_logprob) {
    json doc = parse_body(body, "llm");
    if (!doc.contains("choices") || doc["choices"].empty())
        throw ProviderError(ProviderErrorKind::empty_response, "llm: no choices");
    const auto& choice = doc["choices"][0];
    LlmResponse out;
    if (choice.contains("message") && choice["message"].contains("content") && choice["message"]["content"].is_string())
        out.text = choice["message"]["content"].get<std::string>();
    if (text::trim(out.text).empty()) throw ProviderError(ProviderErrorKind::empty_response, "llm: empty completion");
    if (want_logprob && choice.contains("logprobs") && choice["logprobs"].is_object() &&
        choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array() &&
        !choice["logprobs"]["content"].empty()) {
        const auto& first = choice["logprobs"]["content"][0];
        if (first.contains("logprob") && first["logprob"].is_number())
            out.first_token_logprob = std::min(0.0, first["logprob"].get<double>());
    }
    return out;
}

json build_embedding_body(const std::string& model, const std::vector<std::string>& texts) {
    return {{"model", model}, {"input", texts}};
}

std::vector<EmbeddingVector> parse_embedding_response(const std::string& body, std::size_t expected) {
    json doc = parse_body(body, "embed");
    if (!doc.contains("data") || !doc["data"].is_array())
        throw ProviderError(ProviderErrorKind::empty_response, "embed: no data");
    std::vector<EmbeddingVector> out(expected);
    std::size_t seen = 0;
    std::size_t position = 0;
    for (const auto& row : doc["data"]) {
        std::size_t idx = row.value("index", position);
        ++position;
        if (idx >= expected) throw ProviderError(ProviderErrorKind::empty_response, "embed: index out of range");
        out[idx].values = row.at("embedding").get<std::vector<double>>();
        ++seen;
    }
    if (seen != expected) throw ProviderError(ProviderErrorKind::empty_response, "embed: wrong vector count");
    for (const auto& v : out)
        if (v.dimension() == 0 || v.dimension() != out.front().dimension())
            throw ProviderError(ProviderErrorKind::empty_response, "embed: inconsistent dimensions");
    return out;
}

void throw_for_status(int status, const std::string& retry_after_header, const std::string& context) {
    auto msg = context + ": HTTP " + std::to_string(status);
    if (status == 429) {
        std::optional<std::chrono::milliseconds> hint;
        try {
            if (!retry_after_header.empty()) hint = std::chrono::milliseconds{std::stol(retry_after_header) * 1000};
        } catch (const std::exception&) {
        }
        throw ProviderError(ProviderErrorKind::rate_limited, msg, hint);
    }
    if (status == 404 || status == 410) throw ProviderError(ProviderErrorKind::not_found, msg);
    if (status >= 500) throw ProviderError(ProviderErrorKind::transport, msg);
    throw ProviderError(ProviderErrorKind::invalid_request, msg);
}

// ---------------------------------------------------------------------------

HostLimiter::Permit::Permit(HostLimiter& owner, std::string host) : owner_(owner), host_(std::move(host)) {
    std::unique_lock lock(owner_.mutex_);
    owner_.cv_.wait(lock, [&] { return owner_.active_[host_] < owner_.per_host_; });
    int now = ++owner_.active_[host_];
    owner_.peak_[host_] = std::max(owner_.peak_[host_], now);
}

HostLimiter::Permit::~Permit() {
    {
        std::lock_guard lock(owner_.mutex_);
        --owner_.active_[host_];
    }
    owner_.cv_.notify_all();
}

int HostLimiter::in_flight(const std::string& host) const {
    std::lock_guard lock(mutex_);
    auto it = active_.find(host);
    return it == active_.end() ? 0 : it->second;
}

int HostLimiter::peak(const std::string& host) const {
    std::lock_guard lock(mutex_);
    auto it = peak_.find(host);
    return it == peak_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------

LiveSearch::LiveSearch(LiveSearchConfig config) : config_(std::move(config)) {
    if (config_.api_key.empty()) throw InputError("search API key is not configured (SEARCH_API_KEY)");
}

std::vector<SearchHit> LiveSearch::search(const std::string& query, const std::string& geo_scope,
                                          const MonitoringRange& window, std::size_t top_k) {
    if (top_k == 0) throw ProviderError(ProviderErrorKind::invalid_request, "top_k must be >= 1");
    auto [origin, path] = split_endpoint(config_.endpoint);
    auto client = make_client(origin, config_.http);
    auto res = client.Get(build_search_target(config_, query, geo_scope, window, top_k));
    if (!res) throw_transport(res.error(), "search");
    if (res->status != 200) throw_for_status(res->status, res->get_header_value("Retry-After"), "search");
    return parse_search_response(res->body, top_k);
}

LiveLlm::LiveLlm(LiveLlmConfig config) : config_(std::move(config)) {
    if (config_.api_key.empty()) throw InputError("LLM API key is not configured (LLM_API_KEY)");
}

LlmResponse LiveLlm::complete(const LlmRequest& request) {
    request.validate();
    auto [origin, path] = split_endpoint(config_.endpoint);
    auto client = make_client(origin, config_.http);
    client.set_bearer_token_auth(config_.api_key);
    auto res = client.Post(path + "/chat/completions", build_chat_body(config_.model, request).dump(),
                           "application/json");
    if (!res) throw_transport(res.error(), "llm");
    if (res->status != 200) throw_for_status(res->status, res->get_header_value("Retry-After"), "llm");
    return parse_chat_response(res->body, request.want_first_token_logprob);
}

LiveEmbedder::LiveEmbedder(LiveEmbedConfig config) : config_(std::move(config)) {
    if (config_.api_key.empty()) throw InputError("embedding API key is not configured (LLM_API_KEY)");
}

std::vector<EmbeddingVector> LiveEmbedder::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw ProviderError(ProviderErrorKind::invalid_request, "nothing to embed");
    auto [origin, path] = split_endpoint(config_.endpoint);
    auto client = make_client(origin, config_.http);
    client.set_bearer_token_auth(config_.api_key);
    auto res = client.Post(path + "/embeddings", build_embedding_body(config_.model, texts).dump(), "application/json");
    if (!res) throw_transport(res.error(), "embed");
    if (res->status != 200) throw_for_status(res->status, res->get_header_value("Retry-After"), "embed");
    return parse_embedding_response(res->body, texts.size());
}

LiveScraper::LiveScraper(HttpSettings http, int per_host, std::size_t max_bytes)
    : http_(std::move(http)), limiter_(per_host), max_bytes_(max_bytes) {}

ScrapedDocument LiveScraper::scrape(const std::string& url) {
    auto parsed = parse_url(url);
    if (!parsed) throw ProviderError(ProviderErrorKind::invalid_request, "malformed URL: " + url);
    auto permit = limiter_.acquire(parsed->host);

    auto client = make_client(parsed->origin(), http_);
    std::string body;
    bool too_large = false;
    auto res = client.Get(parsed->path_and_query(), [&](const char* data, size_t len) {
        if (body.size() + len > max_bytes_) {
            too_large = true;
            return false;
        }
        body.append(data, len);
        return true;
    });
    if (too_large) throw ProviderError(ProviderErrorKind::scrape_failed, "page too large: " + url);
    if (!res) throw_transport(res.error(), "scrape " + url);
    if (res->status == 404 || res->status == 410)
        throw ProviderError(ProviderErrorKind::not_found, "not found: " + url);
    if (res->status >= 500) throw ProviderError(ProviderErrorKind::transport, "HTTP " + std::to_string(res->status));
    if (res->status != 200) throw ProviderError(ProviderErrorKind::scrape_failed, "HTTP " + std::to_string(res->status) + ": " + url);
    auto content_type = text::to_lower(res->get_header_value("Content-Type"));
    if (!content_type.empty() && content_type.find("html") == std::string::npos)
        throw ProviderError(ProviderErrorKind::scrape_failed, "not HTML (" + content_type + "): " + url);

    auto page = html::extract_main_text(body);
    if (text::trim(page.body).empty()) throw ProviderError(ProviderErrorKind::scrape_failed, "empty extraction: " + url);
    ScrapedDocument doc;
    doc.url = url;
    doc.title = page.title;
    doc.publication_date = page.publication_date;
    doc.body = page.body;
    return doc;
}

}  // namespace pledgetracker::providers
