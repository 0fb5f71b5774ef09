#include "pledgetracker/settings.hpp"
#include "pledgetracker/errors.hpp"

#include <cstdlib>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pledgetracker/fixture_providers.hpp"

namespace pledgetracker {

namespace pt = boost::property_tree;

std::optional<std::string> process_env(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

namespace {

template <typename T>
void read(const pt::ptree& tree, const char* key, T& out) {
    auto node = tree.get_child_optional(key);
    if (!node) return;
    auto v = node->get_value_optional<T>();
    if (!v) throw InputError(std::string("config: bad value for ") + key);
    out = *v;
}

void overlay(const EnvLookup& env, const char* name, std::string& out) {
    if (auto v = env(name)) out = *v;
}

}  // namespace

Settings load_settings(const std::optional<std::string>& config_path, const EnvLookup& env) {
    Settings s;
    if (config_path) {
        pt::ptree tree;
        try {
            pt::read_ini(*config_path, tree);
        } catch (const pt::ini_parser_error& e) {
            throw InputError("config: " + std::string(e.what()));
        }
        read(tree, "providers.mode", s.providers_mode);
        read(tree, "providers.fixtures", s.fixtures_dir);
        read(tree, "search.endpoint", s.search.endpoint);
        read(tree, "search.api_key", s.search.api_key);
        read(tree, "search.engine_id", s.search.engine_id);
        read(tree, "llm.endpoint", s.llm.endpoint);
        read(tree, "llm.api_key", s.llm.api_key);
        read(tree, "llm.model", s.llm.model);
        read(tree, "embed.endpoint", s.embed.endpoint);
        read(tree, "embed.api_key", s.embed.api_key);
        read(tree, "embed.model", s.embed.model);
        read(tree, "service.data_dir", s.data_dir);
        read(tree, "service.host", s.host);
        read(tree, "service.port", s.port);
        read(tree, "service.workers", s.workers);
        read(tree, "service.match_threshold", s.match_threshold);
        read(tree, "service.corpus", s.corpus_path);
        std::string order;
        read(tree, "service.default_order", order);
        if (!order.empty()) {
            auto o = order_from_string(order);
            if (!o) throw InputError("config: unknown default_order '" + order + "'");
            s.default_order = *o;
        }
    }

    overlay(env, "PROVIDERS_MODE", s.providers_mode);
    overlay(env, "PROVIDERS_FIXTURES", s.fixtures_dir);
    overlay(env, "SEARCH_API_KEY", s.search.api_key);
    overlay(env, "SEARCH_ENGINE_ID", s.search.engine_id);
    overlay(env, "SEARCH_ENDPOINT", s.search.endpoint);
    overlay(env, "LLM_API_KEY", s.llm.api_key);
    overlay(env, "LLM_MODEL", s.llm.model);
    overlay(env, "LLM_ENDPOINT", s.llm.endpoint);
    overlay(env, "EMBED_MODEL", s.embed.model);
    overlay(env, "EMBED_ENDPOINT", s.embed.endpoint);
    overlay(env, "EMBED_API_KEY", s.embed.api_key);
    if (s.embed.api_key.empty()) s.embed.api_key = s.llm.api_key;

    if (s.providers_mode != "live" && s.providers_mode != "fixture")
        throw InputError("providers.mode must be 'live' or 'fixture', got '" + s.providers_mode + "'");
    if (s.workers < 1) throw InputError("service.workers must be >= 1");
    if (s.match_threshold < 0 || s.match_threshold > 1) throw InputError("service.match_threshold must be in [0,1]");
    return s;
}

providers::ProviderSet make_providers(const Settings& settings) {
    if (settings.providers_mode == "fixture") {
        if (settings.fixtures_dir.empty()) throw InputError("fixture mode needs a fixtures directory");
        return providers::load_fixture_world(settings.fixtures_dir);
    }
    providers::ProviderSet live;
    live.search = std::make_shared<providers::LiveSearch>(settings.search);
    live.scraper = std::make_shared<providers::LiveScraper>();
    live.llm = std::make_shared<providers::LiveLlm>(settings.llm);
    live.embedder = std::make_shared<providers::LiveEmbedder>(settings.embed);
    return providers::with_retry_policy(std::move(live), providers::RetryPolicy{});
}

}  // namespace pledgetracker
