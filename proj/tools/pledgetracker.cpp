// Command-line front end: headless tracking runs, the HTTP service,
// evaluation scoring and fixture maintenance.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pledgetracker/evalharness.hpp"
#include "pledgetracker/fixture_providers.hpp"
#include "pledgetracker/http_api.hpp"
#include "pledgetracker/pipeline.hpp"
#include "pledgetracker/settings.hpp"
#include "pledgetracker/text.hpp"

namespace fs = std::filesystem;
using namespace pledgetracker;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kPipelineFailure = 2;

struct Common {
    std::string config;
    std::string providers;
    std::string fixtures;
    std::string data_dir;
    std::string corpus;
    bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "INI configuration file");
    cmd->add_option("--providers", c.providers, "Provider mode")->check(CLI::IsMember({"live", "fixture"}));
    cmd->add_option("--fixtures", c.fixtures, "Fixture world directory (fixture mode)");
    cmd->add_option("--data-dir", c.data_dir, "Directory with the bundled seed files");
    cmd->add_option("--corpus", c.corpus, "Annotated corpus (JSON lines) for ICL examples");
    cmd->add_flag("-v,--verbose", c.verbose, "Debug logging");
}

Settings resolve_settings(const Common& c) {
    auto s = load_settings(c.config.empty() ? std::nullopt : std::optional<std::string>(c.config));
    if (!c.providers.empty()) s.providers_mode = c.providers;
    if (!c.fixtures.empty()) s.fixtures_dir = c.fixtures;
    if (!c.corpus.empty()) s.corpus_path = c.corpus;
    return s;
}

fs::path resources_dir(const Common& c) { return c.data_dir.empty() ? pipeline::default_data_dir() : fs::path(c.data_dir); }

void print_issues(const ValidationError& e) {
    for (const auto& i : e.issues()) std::cerr << "invalid " << i.field << ": " << i.message << "\n";
}

// ---------------------------------------------------------------------------

struct TrackArgs {
    std::string speaker, date, geo, claim, from, to, order = "reverse_chronological", out = "pledgetracker-out";
    bool keep_all = false;
    std::uint64_t seed = 0;
};

int cmd_track(const TrackArgs& a, const Common& c) {
    Pledge pledge;
    MonitoringRange range;
    TimelineOrder order{};
    {
        std::vector<FieldIssue> issues;
        try {
            pledge = validate_pledge({"", a.speaker, a.date, a.geo, a.claim});
        } catch (const ValidationError& e) {
            issues.insert(issues.end(), e.issues().begin(), e.issues().end());
        }
        try {
            range = parse_range(a.from, a.to);
        } catch (const ValidationError& e) {
            issues.insert(issues.end(), e.issues().begin(), e.issues().end());
        }
        auto o = order_from_string(a.order);
        if (!o) issues.push_back({"order", "must be chronological or reverse_chronological"});
        else order = *o;
        if (!issues.empty()) {
            print_issues(ValidationError(issues));
            return kInvalid;
        }
    }

    Settings settings;
    providers::ProviderSet providers;
    pipeline::Resources resources;
    try {
        settings = resolve_settings(c);
        providers = make_providers(settings);
        resources = pipeline::load_resources(resources_dir(c), settings.corpus_path.empty()
                                                                   ? std::nullopt
                                                                   : std::optional<std::string>(settings.corpus_path));
        resources.match_threshold = settings.match_threshold;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    }

    pipeline::Request req;
    req.pledge = pledge;
    req.range = range;
    req.keep_all = a.keep_all;
    req.order = order;
    req.seed = a.seed;
    try {
        pipeline::ArtifactWriter writer(a.out);
        auto result = pipeline::run(
            req, providers, resources, [](pipeline::Stage s) { std::cerr << "stage: " << pipeline::to_string(s) << "\n"; },
            &writer);
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
        const auto& tl = result.filter.timeline;
        std::cout << "pledge\t" << pledge.id << "\n";
        std::cout << "documents\t" << result.retrieval.documents.size() << "\n";
        std::cout << "candidates\t" << result.assembly.candidates.sorted.size() << "\n";
        std::cout << "unresolved\t" << result.assembly.candidates.unresolved.size() << "\n";
        std::cout << "events\t" << tl.events.size() << "\n";
        for (const auto& e : tl.events) {
            std::cout << to_iso(e.timestamp.date) << "\t" << (e.decision ? to_string(*e.decision) : "unlabelled") << "\t"
                      << e.source_url << "\t" << e.description << "\n";
        }
        std::cout << "timeline\t" << (writer.dir() / "timeline.json").string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "pipeline failed: " << e.what() << "\n";
        return kPipelineFailure;
    }
    return kOk;
}

// ---------------------------------------------------------------------------

int report(const std::string& table, const json& j, const std::string& json_out) {
    std::cout << table;
    if (!json_out.empty()) text::write_file(json_out, j.dump(2) + "\n");
    return kOk;
}

int cmd_score_filtering(const std::string& predictions, const std::string& gold, const std::string& json_out) {
    auto preds = eval::parse_predictions(text::read_file(predictions));
    auto corpus = load_annotated_corpus(gold);
    auto counts = eval::tally(preds, corpus);
    auto m = eval::prf(counts);
    json j = eval::to_json(m);
    j["counts"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"fn", counts.fn}, {"tn", counts.tn}};
    return report(eval::format_filtering_report(m, counts), j, json_out);
}

int cmd_score_retrieval(const std::string& judgments_path, std::vector<std::string> systems, bool skip_empty,
                        const std::string& json_out) {
    auto judgments = eval::parse_judgments_csv(text::read_file(judgments_path));
    if (systems.empty()) systems = eval::systems_in(judgments);
    std::vector<eval::RetrievalReport> reports;
    json j = json::array();
    for (const auto& s : systems) {
        auto r = eval::retrieval_metrics(judgments, s, skip_empty);
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        j.push_back({{"system", s},
                     {"pledge_level", eval::to_json(r.pledge_level)},
                     {"url_level", eval::to_json(r.url_level)},
                     {"novelty", r.novelty},
                     {"requests", r.requests},
                     {"requests_skipped", r.requests_skipped}});
        reports.push_back(std::move(r));
    }
    return report(eval::format_retrieval_report(reports), j, json_out);
}

int cmd_score_splits(const std::map<std::string, std::string>& files, const std::string& json_out) {
    std::vector<AnnotatedInstance> corpus;
    std::map<std::string, eval::Split> split_of;
    for (const auto& [name, path] : files) {
        if (path.empty()) continue;
        auto split = *eval::split_from_string(name);
        try {
            for (auto& inst : load_annotated_corpus(path)) {
                inst.id = name + ":" + inst.id;
                split_of[inst.id] = split;
                corpus.push_back(std::move(inst));
            }
        } catch (const InputError& e) {
            throw InputError(path + ": " + e.what());
        }
    }
    auto stats = eval::split_stats(corpus, split_of);
    json j = json::array();
    for (const auto& s : stats)
        j.push_back({{"split", eval::to_string(s.split)},
                     {"instances", s.instances},
                     {"pledges", s.pledges},
                     {"useful", s.useful},
                     {"useful_pct", eval::round_half_up(s.useful_pct, 2)},
                     {"events_per_pledge", eval::round_half_up(s.events_per_pledge, 2)}});
    return report(eval::format_split_report(stats), j, json_out);
}

// ---------------------------------------------------------------------------

httplib::Server* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

int cmd_serve(const Common& c, std::string host, int port) {
    auto settings = resolve_settings(c);
    if (host.empty()) host = settings.host;
    if (port <= 0) port = settings.port;
    auto providers = make_providers(settings);
    auto resources = pipeline::load_resources(resources_dir(c), settings.corpus_path.empty()
                                                                    ? std::nullopt
                                                                    : std::optional<std::string>(settings.corpus_path));
    service::ServiceConfig cfg;
    cfg.data_dir = settings.data_dir;
    cfg.workers = settings.workers;
    cfg.match_threshold = settings.match_threshold;
    cfg.default_order = settings.default_order;
    service::Service svc(cfg, providers, std::move(resources));
    httplib::Server server;
    http_api::install_routes(server, svc);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    spdlog::info("listening on {}:{} (providers: {}, data: {})", host, port, settings.providers_mode, settings.data_dir);
    if (!server.listen(host, port)) {
        std::cerr << "cannot listen on " << host << ":" << port << "\n";
        return kPipelineFailure;
    }
    return kOk;
}

// ---------------------------------------------------------------------------

int cmd_fixtures_hash(const std::string& system, const std::string& prompt_file) {
    providers::LlmRequest req;
    req.system_instruction = system;
    req.prompt = text::read_file(prompt_file);
    std::cout << providers::FixtureLlm::request_hash(req) << "\n";
    return kOk;
}

int cmd_fixtures_check(const std::string& dir) {
    auto world = providers::load_fixture_world(dir);
    (void)world;
    std::size_t lines = 0;
    if (fs::exists(fs::path(dir) / "annotated.jsonl")) lines = load_annotated_corpus((fs::path(dir) / "annotated.jsonl").string()).size();
    std::cout << "ok\t" << dir << "\tannotated=" << lines << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pledge fulfilment tracker"};
    app.require_subcommand(1);
    auto logger = spdlog::stderr_color_mt("stderr");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);

    Common common;

    TrackArgs track;
    auto* t = app.add_subcommand("track", "Build a fulfilment timeline for one pledge");
    add_common(t, common);
    t->add_option("--speaker", track.speaker, "Who made the pledge")->required();
    t->add_option("--date", track.date, "Date the pledge was made (YYYY-MM-DD)")->required();
    t->add_option("--geo", track.geo, "Geographic scope, e.g. UK")->required();
    t->add_option("--claim", track.claim, "Pledge text")->required();
    t->add_option("--from", track.from, "Monitoring range start (YYYY-MM-DD)")->required();
    t->add_option("--to", track.to, "Monitoring range end (YYYY-MM-DD)")->required();
    t->add_flag("--keep-all", track.keep_all, "Review mode: keep filtered-out events with their decisions");
    t->add_option("--order", track.order, "chronological or reverse_chronological");
    t->add_option("--seed", track.seed, "Seed for ICL sampling");
    t->add_option("--out", track.out, "Output directory for the timeline and stage artifacts");

    auto* score = app.add_subcommand("score", "Evaluation metrics");
    score->require_subcommand(1);
    std::string json_out;
    std::string predictions, gold, judgments;
    std::vector<std::string> systems;
    bool skip_empty = false;
    std::map<std::string, std::string> split_files{{"train", ""}, {"dev", ""}, {"test", ""}};
    auto* sf = score->add_subcommand("filtering", "Precision/recall/F1 of useful-event predictions");
    sf->add_option("--predictions", predictions, "JSON lines {instance_id, label}")->required();
    sf->add_option("--gold", gold, "Annotated corpus JSON lines")->required();
    sf->add_option("--json", json_out, "Write the report as JSON");
    auto* sr = score->add_subcommand("retrieval", "Pledge-level and URL-level retrieval metrics, novelty");
    sr->add_option("--judgments", judgments, "CSV request_id,system,url,judged_useful")->required();
    sr->add_option("--system", systems, "Systems to report (default: all)");
    sr->add_flag("--skip-empty", skip_empty, "Leave requests with no URLs out of the pledge-level average");
    sr->add_option("--json", json_out, "Write the report as JSON");
    auto* ss = score->add_subcommand("splits", "Per-split useful percentage and events per pledge");
    ss->add_option("--train", split_files["train"], "Training split (JSON lines)");
    ss->add_option("--dev", split_files["dev"], "Development split (JSON lines)");
    ss->add_option("--test", split_files["test"], "Test split (JSON lines)");
    ss->add_option("--json", json_out, "Write the report as JSON");

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    add_common(serve, common);
    std::string host;
    int port = 0;
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port");

    auto* fixtures = app.add_subcommand("fixtures", "Fixture world helpers");
    fixtures->require_subcommand(1);
    std::string system_instruction, prompt_file, fixture_dir;
    auto* fh = fixtures->add_subcommand("hash", "Print the lookup hash of an LLM request");
    fh->add_option("--system", system_instruction, "System instruction text");
    fh->add_option("--prompt-file", prompt_file, "File holding the prompt")->required();
    auto* fc = fixtures->add_subcommand("check", "Load a fixture world and report problems");
    fc->add_option("dir", fixture_dir, "Fixture directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }
    if (common.verbose) spdlog::set_level(spdlog::level::debug);

    try {
        if (t->parsed()) return cmd_track(track, common);
        if (sf->parsed()) return cmd_score_filtering(predictions, gold, json_out);
        if (sr->parsed()) return cmd_score_retrieval(judgments, systems, skip_empty, json_out);
        if (ss->parsed()) return cmd_score_splits(split_files, json_out);
        if (serve->parsed()) return cmd_serve(common, host, port);
        if (fh->parsed()) return cmd_fixtures_hash(system_instruction, prompt_file);
        if (fc->parsed()) return cmd_fixtures_check(fixture_dir);
    } catch (const ValidationError& e) {
        print_issues(e);
        return kInvalid;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPipelineFailure;
    }
    return kInvalid;
}
