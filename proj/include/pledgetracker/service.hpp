#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pledgetracker/matcher.hpp"
#include "pledgetracker/pipeline.hpp"
#include "pledgetracker/store.hpp"

namespace pledgetracker::service {

struct ServiceConfig {
    std::filesystem::path data_dir = "pledgetracker-data";
    int workers = 2;
    double match_threshold = 0.8;
    TimelineOrder default_order = TimelineOrder::reverse_chronological;
};

struct CreateRunRequest {
    RawPledge pledge;
    std::string range_start;
    std::string range_end;
    bool keep_all = false;
    std::optional<TimelineOrder> order;
    std::uint64_t seed = 0;
    std::optional<std::string> reuse_pledge_id;  // set only after the user confirmed a suggested match
};

/// A candidate event as shown to reviewers.
struct ReviewRow {
    fulfilment::EventDecision decision;
    bool in_timeline = false;
    std::vector<store::FeedbackRecord> feedback;
};

struct SimilarPledge {
    Pledge pledge;
    double score = 0.0;
};

class Service {
public:
    Service(ServiceConfig config, providers::ProviderSet providers, pipeline::Resources resources);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Validates, persists a queued run and schedules it. Throws
    /// ValidationError listing every offending field.
    std::string create_run(const CreateRunRequest& request);

    /// Throws NotFoundError for an unknown id.
    store::RunRecord get_run(const std::string& run_id) const;
    /// Present once the run is done.
    std::optional<Timeline> timeline(const std::string& run_id) const;
    /// Every candidate with its decision. Throws ConflictError before done.
    std::vector<ReviewRow> review_rows(const std::string& run_id) const;
    std::vector<timeline::ExtractedEvent> unresolved(const std::string& run_id) const;

    /// Throws ConflictError if the run is not done, NotFoundError if the
    /// event is not one of the run's candidates.
    store::FeedbackRecord record_feedback(const std::string& run_id, const store::EventKey& event,
                                          store::Verdict verdict, const std::string& reviewer);
    /// Feedback converted for the ICL pool.
    std::vector<AnnotatedInstance> feedback_instances() const;

    std::vector<SimilarPledge> similar(const std::string& claim, std::size_t k) const;
    [[nodiscard]] double match_threshold() const { return config_.match_threshold; }

    /// Blocks until no run is queued or executing, or the timeout passes.
    bool wait_idle(std::chrono::milliseconds timeout);
    std::size_t pending() const;

    store::Store& store() { return *store_; }
    [[nodiscard]] const std::filesystem::path& data_dir() const { return config_.data_dir; }

private:
    void worker_loop();
    void execute(const std::string& run_id);
    std::optional<retrieval::CachedHits> cached_hits(const std::string& pledge_id, const MonitoringRange& range,
                                                     std::vector<std::string>& warnings) const;
    std::filesystem::path run_dir(const std::string& run_id) const;
    void rebuild_index();

    ServiceConfig config_;
    providers::ProviderSet providers_;
    pipeline::Resources resources_;
    std::unique_ptr<store::Store> store_;

    mutable std::mutex index_mutex_;
    std::shared_ptr<const matcher::PledgeIndex> index_;
    std::vector<Pledge> indexed_pledges_;

    mutable std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::condition_variable idle_cv_;
    std::deque<std::string> queue_;
    std::size_t active_ = 0;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

}  // namespace pledgetracker::service
