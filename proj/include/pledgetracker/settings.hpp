#pragma once

#include <functional>
#include <optional>
#include <string>

#include "pledgetracker/live_providers.hpp"

namespace pledgetracker {

/// Runtime configuration. Sources, later wins: defaults, INI file, environment.
///
///   [providers]  mode = live|fixture, fixtures = <dir>
///   [search]     endpoint, api_key, engine_id
///   [llm]        endpoint, api_key, model
///   [embed]      endpoint, api_key, model
///   [service]    data_dir, host, port, workers, match_threshold, default_order, corpus
struct Settings {
    std::string providers_mode = "fixture";
    std::string fixtures_dir;
    providers::LiveSearchConfig search;
    providers::LiveLlmConfig llm;
    providers::LiveEmbedConfig embed;

    std::string data_dir = "pledgetracker-data";
    std::string host = "127.0.0.1";
    int port = 8080;
    int workers = 2;
    double match_threshold = 0.8;
    TimelineOrder default_order = TimelineOrder::reverse_chronological;
    std::string corpus_path;  // annotated JSONL for the ICL pool; optional
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

/// Throws InputError on unreadable file or invalid values.
Settings load_settings(const std::optional<std::string>& config_path, const EnvLookup& env = process_env);

/// Builds the provider set for `settings.providers_mode`; live providers are
/// wrapped with the retry policy.
providers::ProviderSet make_providers(const Settings& settings);

}  // namespace pledgetracker
