#include "pledgetracker/service.hpp"
#include "pledgetracker/errors.hpp"

#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "pledgetracker/text.hpp"

namespace pledgetracker::service {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
std::vector<T> read_jsonl(const fs::path& path) {
    std::vector<T> out;
    std::ifstream in(path);
    if (!in) throw Error("missing artifact " + path.string());
    std::string line;
    while (std::getline(in, line))
        if (!text::trim(line).empty()) out.push_back(json::parse(line).get<T>());
    return out;
}

bool same_event(const timeline::ExtractedEvent& e, const store::EventKey& k) {
    return e.normalized && e.description == k.description && e.normalized->date == k.timestamp &&
           e.source_url == k.source_url;
}

}  // namespace

Service::Service(ServiceConfig config, providers::ProviderSet providers, pipeline::Resources resources)
    : config_(std::move(config)), providers_(std::move(providers)), resources_(std::move(resources)) {
    resources_.match_threshold = config_.match_threshold;
    fs::create_directories(config_.data_dir / "runs");
    store_ = std::make_unique<store::Store>(config_.data_dir / "pledgetracker.db");
    if (auto n = store_->fail_unfinished("service restarted before the run finished"))
        spdlog::warn("marked {} unfinished run(s) as failed", n);
    rebuild_index();
    for (int i = 0; i < std::max(1, config_.workers); ++i) workers_.emplace_back([this] { worker_loop(); });
}

Service::~Service() {
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    for (auto& t : workers_) t.join();
    // Anything still queued never started.
    for (const auto& id : queue_) {
        try {
            store_->set_status(id, store::RunStatus::failed, std::string("service stopped before the run started"));
        } catch (const std::exception&) {
        }
    }
}

void Service::rebuild_index() {
    auto pledges = store_->pledges();
    auto index = std::make_shared<const matcher::PledgeIndex>(matcher::build_index(pledges));
    std::lock_guard lock(index_mutex_);
    index_ = std::move(index);
    indexed_pledges_ = std::move(pledges);
}

std::string Service::create_run(const CreateRunRequest& request) {
    std::vector<FieldIssue> issues;
    std::optional<Pledge> pledge;
    std::optional<MonitoringRange> range;
    try {
        pledge = validate_pledge(request.pledge);
    } catch (const ValidationError& e) {
        for (const auto& i : e.issues()) issues.push_back({"pledge." + i.field, i.message});
    }
    try {
        range = parse_range(request.range_start, request.range_end);
    } catch (const ValidationError& e) {
        for (const auto& i : e.issues()) issues.push_back(i);
    }
    if (request.reuse_pledge_id) {
        std::lock_guard lock(index_mutex_);
        bool known = std::any_of(indexed_pledges_.begin(), indexed_pledges_.end(),
                                 [&](const Pledge& p) { return p.id == *request.reuse_pledge_id; });
        if (!known) issues.push_back({"options.reuse_pledge_id", "unknown pledge '" + *request.reuse_pledge_id + "'"});
    }
    if (!issues.empty()) throw ValidationError(issues);

    store::RunRecord record;
    record.pledge = *pledge;
    record.range = *range;
    record.options.keep_all = request.keep_all;
    record.options.order = request.order.value_or(config_.default_order);
    record.options.seed = request.seed;
    record.options.reuse_pledge_id = request.reuse_pledge_id;
    auto id = store_->insert_run(record);
    store_->upsert_pledge(*pledge);
    rebuild_index();
    {
        std::lock_guard lock(queue_mutex_);
        queue_.push_back(id);
    }
    queue_cv_.notify_one();
    spdlog::info("{} queued for pledge {}", id, pledge->id);
    return id;
}

store::RunRecord Service::get_run(const std::string& run_id) const {
    auto r = store_->find_run(run_id);
    if (!r) throw NotFoundError("run '" + run_id + "' not found");
    return *r;
}

fs::path Service::run_dir(const std::string& run_id) const { return config_.data_dir / "runs" / run_id; }

std::optional<Timeline> Service::timeline(const std::string& run_id) const {
    auto r = get_run(run_id);
    if (r.status != store::RunStatus::done) return std::nullopt;
    return json::parse(text::read_file((config_.data_dir / r.artifacts.at("timeline")).string())).get<Timeline>();
}

std::vector<ReviewRow> Service::review_rows(const std::string& run_id) const {
    auto r = get_run(run_id);
    if (r.status != store::RunStatus::done)
        throw ConflictError("run " + run_id + " is " + to_string(r.status) + ", events are available once done");
    auto decisions = read_jsonl<fulfilment::EventDecision>(config_.data_dir / r.artifacts.at("decisions"));
    auto feedback = store_->feedback_for_run(run_id);
    std::vector<ReviewRow> rows;
    for (auto& d : decisions) {
        ReviewRow row;
        row.in_timeline = r.options.keep_all || !d.decision || d.decision->label == Label::useful;
        for (const auto& f : feedback)
            if (same_event(d.event, f.event)) row.feedback.push_back(f);
        row.decision = std::move(d);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<timeline::ExtractedEvent> Service::unresolved(const std::string& run_id) const {
    auto r = get_run(run_id);
    auto it = r.artifacts.find("unresolved");
    if (it == r.artifacts.end()) return {};
    return read_jsonl<timeline::ExtractedEvent>(config_.data_dir / it->second);
}

store::FeedbackRecord Service::record_feedback(const std::string& run_id, const store::EventKey& event,
                                               store::Verdict verdict, const std::string& reviewer) {
    auto r = get_run(run_id);
    if (r.status != store::RunStatus::done)
        throw ConflictError("feedback needs a finished run; " + run_id + " is " + to_string(r.status));
    auto candidates = read_jsonl<timeline::ExtractedEvent>(config_.data_dir / r.artifacts.at("candidates"));
    bool exists = std::any_of(candidates.begin(), candidates.end(),
                              [&](const timeline::ExtractedEvent& e) { return same_event(e, event); });
    if (!exists) throw NotFoundError("event is not a candidate of run " + run_id);
    store::FeedbackRecord rec;
    rec.run_id = run_id;
    rec.event = event;
    rec.verdict = verdict;
    rec.reviewer = text::trim(reviewer).empty() ? "anonymous" : text::trim(reviewer);
    return store_->upsert_feedback(rec);
}

std::vector<AnnotatedInstance> Service::feedback_instances() const {
    std::vector<AnnotatedInstance> out;
    std::map<std::string, Pledge> pledge_of;
    for (const auto& f : store_->all_feedback()) {
        auto it = pledge_of.find(f.run_id);
        if (it == pledge_of.end()) {
            auto run = store_->find_run(f.run_id);
            if (!run) continue;
            it = pledge_of.emplace(f.run_id, run->pledge).first;
        }
        AnnotatedInstance inst;
        inst.id = "fb-" + text::hex64(text::fnv1a64(f.run_id + '\x1f' + f.event.description + '\x1f' +
                                                    to_iso(f.event.timestamp) + '\x1f' + f.event.source_url + '\x1f' +
                                                    f.reviewer));
        inst.pledge = it->second;
        inst.event = f.event.description;
        inst.timestamp = f.event.timestamp;
        inst.source_url = f.event.source_url;
        inst.label = store::to_label(f.verdict);
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<SimilarPledge> Service::similar(const std::string& claim, std::size_t k) const {
    std::shared_ptr<const matcher::PledgeIndex> index;
    std::vector<Pledge> pledges;
    {
        std::lock_guard lock(index_mutex_);
        index = index_;
        pledges = indexed_pledges_;
    }
    std::vector<SimilarPledge> out;
    for (const auto& s : matcher::suggest_similar(*index, claim, k)) {
        auto it = std::find_if(pledges.begin(), pledges.end(), [&](const Pledge& p) { return p.id == s.pledge_id; });
        if (it != pledges.end()) out.push_back({*it, s.score});
    }
    return out;
}

bool Service::wait_idle(std::chrono::milliseconds timeout) {
    std::unique_lock lock(queue_mutex_);
    return idle_cv_.wait_for(lock, timeout, [&] { return queue_.empty() && active_ == 0; });
}

std::size_t Service::pending() const {
    std::lock_guard lock(queue_mutex_);
    return queue_.size() + active_;
}

void Service::worker_loop() {
    for (;;) {
        std::string id;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
            ++active_;
        }
        execute(id);
        {
            std::lock_guard lock(queue_mutex_);
            --active_;
        }
        idle_cv_.notify_all();
    }
}

std::optional<retrieval::CachedHits> Service::cached_hits(const std::string& pledge_id, const MonitoringRange& range,
                                                          std::vector<std::string>& warnings) const {
    auto runs = store_->runs_for_pledge(pledge_id);
    for (auto it = runs.rbegin(); it != runs.rend(); ++it) {
        if (it->status != store::RunStatus::done || !overlaps(it->range, range)) continue;
        auto log = it->artifacts.find("query_log");
        if (log == it->artifacts.end()) continue;
        retrieval::CachedHits cached;
        for (auto& e : read_jsonl<retrieval::QueryLogEntry>(config_.data_dir / log->second))
            if (e.round == 1 && !e.error) cached.round1.push_back(std::move(e));
        if (cached.round1.empty()) continue;
        spdlog::info("reusing round-1 search results of {}", it->run_id);
        return cached;
    }
    warnings.push_back("no finished run of pledge " + pledge_id + " with an overlapping range; searching afresh");
    return std::nullopt;
}

void Service::execute(const std::string& run_id) {
    try {
        auto record = get_run(run_id);
        pipeline::Request req;
        req.pledge = record.pledge;
        req.range = record.range;
        req.keep_all = record.options.keep_all;
        req.order = record.options.order;
        req.seed = record.options.seed;
        req.feedback = feedback_instances();
        std::vector<std::string> warnings;
        if (record.options.reuse_pledge_id) req.cached = cached_hits(*record.options.reuse_pledge_id, record.range, warnings);

        auto dir = run_dir(run_id);
        pipeline::ArtifactWriter writer(dir);
        auto relative = fs::relative(dir, config_.data_dir);
        std::optional<pipeline::Stage> current;
        auto register_finished = [&](pipeline::Stage s) {
            std::map<std::string, std::string> refs;
            for (const auto& [name, file] : pipeline::ArtifactWriter::files_for(s)) refs[name] = (relative / file).generic_string();
            store_->add_artifacts(run_id, refs);
        };
        auto result = pipeline::run(
            req, providers_, resources_,
            [&](pipeline::Stage s) {
                if (current) register_finished(*current);
                current = s;
                store_->set_status(run_id, static_cast<store::RunStatus>(static_cast<int>(s) + 1));
            },
            &writer);
        register_finished(pipeline::Stage::filtering);
        warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());
        store_->set_warnings(run_id, warnings);
        store_->set_status(run_id, store::RunStatus::done);
        spdlog::info("{} done: {} event(s)", run_id, result.filter.timeline.events.size());
    } catch (const std::exception& e) {
        spdlog::error("{} failed: {}", run_id, e.what());
        try {
            store_->set_status(run_id, store::RunStatus::failed, std::string(e.what()));
        } catch (const std::exception& inner) {
            spdlog::error("could not mark {} failed: {}", run_id, inner.what());
        }
    }
}

}  // namespace pledgetracker::service
