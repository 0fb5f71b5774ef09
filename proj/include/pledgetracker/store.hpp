#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pledgetracker/domain.hpp"

struct sqlite3;

namespace pledgetracker::store {

enum class RunStatus { queued, retrieving, extracting, filtering, done, failed };
const char* to_string(RunStatus status);
std::optional<RunStatus> status_from_string(std::string_view s);
bool is_terminal(RunStatus status);
/// queued -> retrieving -> extracting -> filtering -> done; failed from any
/// non-terminal state.
bool can_transition(RunStatus from, RunStatus to);

struct RunOptions {
    bool keep_all = false;
    TimelineOrder order = TimelineOrder::reverse_chronological;
    std::uint64_t seed = 0;
    std::optional<std::string> reuse_pledge_id;
};

struct RunRecord {
    std::string run_id;
    Pledge pledge;
    MonitoringRange range;
    RunOptions options;
    RunStatus status = RunStatus::queued;
    std::string created_at;
    std::string updated_at;
    std::map<std::string, std::string> artifacts;  // name -> path relative to the data dir
    std::vector<std::string> warnings;
    std::optional<std::string> error;
};

void to_json(nlohmann::json& j, const RunRecord& r);

enum class Verdict { not_relevant, relevant_seen, relevant_update };
const char* to_string(Verdict v);
std::optional<Verdict> verdict_from_string(std::string_view s);
/// relevant_seen and relevant_update are useful; not_relevant is not.
Label to_label(Verdict v);

struct EventKey {
    std::string description;
    Date timestamp;
    std::string source_url;

    bool operator==(const EventKey&) const = default;
};

struct FeedbackRecord {
    std::string run_id;
    EventKey event;
    Verdict verdict = Verdict::not_relevant;
    std::string reviewer;
    std::string created_at;
};

void to_json(nlohmann::json& j, const FeedbackRecord& f);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_now();

/// SQLite-backed persistence for runs, tracked pledges and feedback. One
/// connection, serialised by a mutex.
class Store {
public:
    explicit Store(const std::filesystem::path& db_path);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    /// Assigns run_id ("run-000001", ...) and timestamps; returns the id.
    std::string insert_run(RunRecord record);
    /// Throws ConflictError on an illegal transition.
    void set_status(const std::string& run_id, RunStatus status, const std::optional<std::string>& error = {});
    void add_artifacts(const std::string& run_id, const std::map<std::string, std::string>& artifacts);
    void set_warnings(const std::string& run_id, const std::vector<std::string>& warnings);
    std::optional<RunRecord> find_run(const std::string& run_id) const;
    std::vector<RunRecord> runs_for_pledge(const std::string& pledge_id) const;
    /// Marks every non-terminal run failed (used at startup after a crash).
    std::size_t fail_unfinished(const std::string& reason);

    void upsert_pledge(const Pledge& pledge);
    std::vector<Pledge> pledges() const;

    /// One verdict per (run, event, reviewer); a later call replaces it.
    FeedbackRecord upsert_feedback(FeedbackRecord record);
    std::vector<FeedbackRecord> feedback_for_run(const std::string& run_id) const;
    std::vector<FeedbackRecord> all_feedback() const;

private:
    sqlite3* db_ = nullptr;
    mutable std::mutex mutex_;
};

}  // namespace pledgetracker::store
