#include "pledgetracker/store.hpp"
#include "pledgetracker/errors.hpp"

#include <chrono>
#include <ctime>

#include <fmt/format.h>
#include <sqlite3.h>

namespace pledgetracker::store {

using nlohmann::json;

const char* to_string(RunStatus status) {
    switch (status) {
        case RunStatus::queued: return "queued";
        case RunStatus::retrieving: return "retrieving";
        case RunStatus::extracting: return "extracting";
        case RunStatus::filtering: return "filtering";
        case RunStatus::done: return "done";
        case RunStatus::failed: return "failed";
    }
    return "?";
}

std::optional<RunStatus> status_from_string(std::string_view s) {
    for (auto st : {RunStatus::queued, RunStatus::retrieving, RunStatus::extracting, RunStatus::filtering,
                    RunStatus::done, RunStatus::failed})
        if (s == to_string(st)) return st;
    return std::nullopt;
}

bool is_terminal(RunStatus status) { return status == RunStatus::done || status == RunStatus::failed; }

bool can_transition(RunStatus from, RunStatus to) {
    if (is_terminal(from)) return false;
    if (to == RunStatus::failed) return true;
    return static_cast<int>(to) == static_cast<int>(from) + 1;
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::not_relevant: return "not_relevant";
        case Verdict::relevant_seen: return "relevant_seen";
        case Verdict::relevant_update: return "relevant_update";
    }
    return "?";
}

std::optional<Verdict> verdict_from_string(std::string_view s) {
    for (auto v : {Verdict::not_relevant, Verdict::relevant_seen, Verdict::relevant_update})
        if (s == to_string(v)) return v;
    return std::nullopt;
}

Label to_label(Verdict v) { return v == Verdict::not_relevant ? Label::not_useful : Label::useful; }

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void to_json(json& j, const RunRecord& r) {
    j = json{{"run_id", r.run_id},
             {"pledge", r.pledge},
             {"range", r.range},
             {"options",
              {{"keep_all", r.options.keep_all},
               {"order", to_string(r.options.order)},
               {"seed", r.options.seed},
               {"reuse_pledge_id", r.options.reuse_pledge_id ? json(*r.options.reuse_pledge_id) : json(nullptr)}}},
             {"status", to_string(r.status)},
             {"created_at", r.created_at},
             {"updated_at", r.updated_at},
             {"artifacts", r.artifacts},
             {"warnings", r.warnings},
             {"error", r.error ? json(*r.error) : json(nullptr)}};
}

void to_json(json& j, const FeedbackRecord& f) {
    j = json{{"run_id", f.run_id},
             {"event", {{"description", f.event.description}, {"timestamp", to_iso(f.event.timestamp)}, {"source_url", f.event.source_url}}},
             {"verdict", to_string(f.verdict)},
             {"reviewer", f.reviewer},
             {"created_at", f.created_at}};
}

// ---------------------------------------------------------------------------

namespace {

class Statement {
public:
    Statement(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
            throw Error(std::string("sqlite prepare: ") + sqlite3_errmsg(db));
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    Statement& bind(int i, const std::string& v) {
        sqlite3_bind_text(stmt_, i, v.c_str(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
        return *this;
    }
    Statement& bind(int i, std::int64_t v) {
        sqlite3_bind_int64(stmt_, i, v);
        return *this;
    }
    Statement& bind_null(int i) {
        sqlite3_bind_null(stmt_, i);
        return *this;
    }
    bool step() {
        int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw Error(std::string("sqlite step: ") + sqlite3_errmsg(db_));
    }
    std::string text(int col) const {
        auto p = sqlite3_column_text(stmt_, col);
        return p ? reinterpret_cast<const char*>(p) : "";
    }
    bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
    std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }

private:
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown";
        sqlite3_free(err);
        throw Error("sqlite: " + msg);
    }
}

const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS runs (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    run_id TEXT UNIQUE,
    pledge_id TEXT NOT NULL,
    record TEXT NOT NULL,
    status TEXT NOT NULL,
    created_at TEXT NOT NULL,
    updated_at TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS runs_by_pledge ON runs(pledge_id);
CREATE TABLE IF NOT EXISTS pledges (
    pledge_id TEXT PRIMARY KEY,
    pledge TEXT NOT NULL,
    first_seen TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS feedback (
    run_id TEXT NOT NULL,
    description TEXT NOT NULL,
    timestamp TEXT NOT NULL,
    source_url TEXT NOT NULL,
    reviewer TEXT NOT NULL,
    verdict TEXT NOT NULL,
    created_at TEXT NOT NULL,
    PRIMARY KEY (run_id, description, timestamp, source_url, reviewer)
);
)sql";

json record_body(const RunRecord& r) {
    json j = r;
    return j;
}

RunRecord parse_record(const std::string& body) {
    auto j = json::parse(body);
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.pledge = j.at("pledge").get<Pledge>();
    r.range = j.at("range").get<MonitoringRange>();
    const auto& o = j.at("options");
    r.options.keep_all = o.value("keep_all", false);
    r.options.order = order_from_string(o.value("order", "reverse_chronological")).value_or(TimelineOrder::reverse_chronological);
    r.options.seed = o.value("seed", std::uint64_t{0});
    if (o.contains("reuse_pledge_id") && o["reuse_pledge_id"].is_string())
        r.options.reuse_pledge_id = o["reuse_pledge_id"].get<std::string>();
    r.status = status_from_string(j.at("status").get<std::string>()).value_or(RunStatus::failed);
    r.created_at = j.value("created_at", "");
    r.updated_at = j.value("updated_at", "");
    r.artifacts = j.value("artifacts", std::map<std::string, std::string>{});
    r.warnings = j.value("warnings", std::vector<std::string>{});
    if (j.contains("error") && j["error"].is_string()) r.error = j["error"].get<std::string>();
    return r;
}

FeedbackRecord read_feedback(const Statement& s) {
    FeedbackRecord f;
    f.run_id = s.text(0);
    f.event.description = s.text(1);
    f.event.timestamp = parse_iso_date(s.text(2)).value_or(Date{});
    f.event.source_url = s.text(3);
    f.reviewer = s.text(4);
    f.verdict = verdict_from_string(s.text(5)).value_or(Verdict::not_relevant);
    f.created_at = s.text(6);
    return f;
}

}  // namespace

Store::Store(const std::filesystem::path& db_path) {
    if (db_path.has_parent_path()) std::filesystem::create_directories(db_path.parent_path());
    if (sqlite3_open(db_path.string().c_str(), &db_) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        throw Error("cannot open store " + db_path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec(db_, "PRAGMA journal_mode=WAL;");
    exec(db_, kSchema);
}

Store::~Store() { sqlite3_close(db_); }

std::string Store::insert_run(RunRecord record) {
    std::lock_guard lock(mutex_);
    exec(db_, "BEGIN IMMEDIATE;");
    try {
        Statement next(db_, "SELECT COALESCE(MAX(seq), 0) + 1 FROM runs;");
        next.step();
        record.run_id = fmt::format("run-{:06d}", next.integer(0));
        record.created_at = record.updated_at = utc_now();
        Statement ins(db_, "INSERT INTO runs(run_id, pledge_id, record, status, created_at, updated_at) VALUES (?,?,?,?,?,?);");
        ins.bind(1, record.run_id)
            .bind(2, record.pledge.id)
            .bind(3, record_body(record).dump())
            .bind(4, std::string(to_string(record.status)))
            .bind(5, record.created_at)
            .bind(6, record.updated_at);
        ins.step();
        exec(db_, "COMMIT;");
    } catch (...) {
        exec(db_, "ROLLBACK;");
        throw;
    }
    return record.run_id;
}

namespace {

template <typename F>
void mutate(sqlite3* db, const std::string& run_id, F&& change) {
    Statement sel(db, "SELECT record FROM runs WHERE run_id = ?;");
    sel.bind(1, run_id);
    if (!sel.step()) throw NotFoundError("run '" + run_id + "' not found");
    auto record = parse_record(sel.text(0));
    change(record);
    record.updated_at = utc_now();
    Statement up(db, "UPDATE runs SET record = ?, status = ?, updated_at = ? WHERE run_id = ?;");
    up.bind(1, record_body(record).dump())
        .bind(2, std::string(to_string(record.status)))
        .bind(3, record.updated_at)
        .bind(4, run_id);
    up.step();
}

}  // namespace

void Store::set_status(const std::string& run_id, RunStatus status, const std::optional<std::string>& error) {
    std::lock_guard lock(mutex_);
    mutate(db_, run_id, [&](RunRecord& r) {
        if (!can_transition(r.status, status))
            throw ConflictError(fmt::format("run {} cannot move from {} to {}", run_id, to_string(r.status), to_string(status)));
        r.status = status;
        if (error) r.error = error;
    });
}

void Store::add_artifacts(const std::string& run_id, const std::map<std::string, std::string>& artifacts) {
    std::lock_guard lock(mutex_);
    mutate(db_, run_id, [&](RunRecord& r) {
        if (is_terminal(r.status)) throw ConflictError("run " + run_id + " is finished");
        for (const auto& [k, v] : artifacts) r.artifacts[k] = v;
    });
}

void Store::set_warnings(const std::string& run_id, const std::vector<std::string>& warnings) {
    std::lock_guard lock(mutex_);
    mutate(db_, run_id, [&](RunRecord& r) {
        if (is_terminal(r.status)) throw ConflictError("run " + run_id + " is finished");
        r.warnings = warnings;
    });
}

std::optional<RunRecord> Store::find_run(const std::string& run_id) const {
    std::lock_guard lock(mutex_);
    Statement sel(db_, "SELECT record FROM runs WHERE run_id = ?;");
    sel.bind(1, run_id);
    if (!sel.step()) return std::nullopt;
    return parse_record(sel.text(0));
}

std::vector<RunRecord> Store::runs_for_pledge(const std::string& pledge_id) const {
    std::lock_guard lock(mutex_);
    Statement sel(db_, "SELECT record FROM runs WHERE pledge_id = ? ORDER BY seq;");
    sel.bind(1, pledge_id);
    std::vector<RunRecord> out;
    while (sel.step()) out.push_back(parse_record(sel.text(0)));
    return out;
}

std::size_t Store::fail_unfinished(const std::string& reason) {
    std::vector<std::string> ids;
    {
        std::lock_guard lock(mutex_);
        Statement sel(db_, "SELECT run_id FROM runs WHERE status NOT IN ('done', 'failed');");
        while (sel.step()) ids.push_back(sel.text(0));
    }
    for (const auto& id : ids) set_status(id, RunStatus::failed, reason);
    return ids.size();
}

void Store::upsert_pledge(const Pledge& pledge) {
    std::lock_guard lock(mutex_);
    Statement ins(db_, "INSERT OR IGNORE INTO pledges(pledge_id, pledge, first_seen) VALUES (?,?,?);");
    ins.bind(1, pledge.id).bind(2, json(pledge).dump()).bind(3, utc_now());
    ins.step();
}

std::vector<Pledge> Store::pledges() const {
    std::lock_guard lock(mutex_);
    Statement sel(db_, "SELECT pledge FROM pledges ORDER BY first_seen, pledge_id;");
    std::vector<Pledge> out;
    while (sel.step()) out.push_back(json::parse(sel.text(0)).get<Pledge>());
    return out;
}

FeedbackRecord Store::upsert_feedback(FeedbackRecord record) {
    std::lock_guard lock(mutex_);
    record.created_at = utc_now();
    Statement ins(db_,
                  "INSERT INTO feedback(run_id, description, timestamp, source_url, reviewer, verdict, created_at) "
                  "VALUES (?,?,?,?,?,?,?) ON CONFLICT(run_id, description, timestamp, source_url, reviewer) "
                  "DO UPDATE SET verdict = excluded.verdict, created_at = excluded.created_at;");
    ins.bind(1, record.run_id)
        .bind(2, record.event.description)
        .bind(3, to_iso(record.event.timestamp))
        .bind(4, record.event.source_url)
        .bind(5, record.reviewer)
        .bind(6, std::string(to_string(record.verdict)))
        .bind(7, record.created_at);
    ins.step();
    return record;
}

std::vector<FeedbackRecord> Store::feedback_for_run(const std::string& run_id) const {
    std::lock_guard lock(mutex_);
    Statement sel(db_,
                  "SELECT run_id, description, timestamp, source_url, reviewer, verdict, created_at FROM feedback "
                  "WHERE run_id = ? ORDER BY timestamp, source_url, description, reviewer;");
    sel.bind(1, run_id);
    std::vector<FeedbackRecord> out;
    while (sel.step()) out.push_back(read_feedback(sel));
    return out;
}

std::vector<FeedbackRecord> Store::all_feedback() const {
    std::lock_guard lock(mutex_);
    Statement sel(db_,
                  "SELECT run_id, description, timestamp, source_url, reviewer, verdict, created_at FROM feedback "
                  "ORDER BY run_id, timestamp, source_url, description, reviewer;");
    std::vector<FeedbackRecord> out;
    while (sel.step()) out.push_back(read_feedback(sel));
    return out;
}

}  // namespace pledgetracker::store
