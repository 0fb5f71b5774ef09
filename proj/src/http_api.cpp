#include "pledgetracker/http_api.hpp"
#include "pledgetracker/errors.hpp"

#include <spdlog/spdlog.h>

#include "pledgetracker/text.hpp"

namespace pledgetracker::http_api {

using nlohmann::json;

json error_body(const std::string& code, const std::string& message, const std::vector<FieldIssue>& fields) {
    json j = {{"code", code}, {"message", message}};
    if (!fields.empty()) {
        j["field"] = fields.front().field;
        json list = json::array();
        for (const auto& f : fields) list.push_back({{"field", f.field}, {"message", f.message}});
        j["fields"] = list;
    }
    return j;
}

namespace {

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

std::string string_field(const json& obj, const char* key, const std::string& path, std::vector<FieldIssue>& issues) {
    if (!obj.contains(key) || obj[key].is_null()) return "";
    if (!obj[key].is_string()) {
        issues.push_back({path, "must be a string"});
        return "";
    }
    return obj[key].get<std::string>();
}

// Maps exceptions from the service into error responses.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
    try {
        body();
    } catch (const ValidationError& e) {
        send(res, 400, error_body("validation_error", e.what(), e.issues()));
    } catch (const NotFoundError& e) {
        send(res, 404, error_body("not_found", e.what()));
    } catch (const ConflictError& e) {
        send(res, 409, error_body("conflict", e.what()));
    } catch (const json::exception& e) {
        send(res, 400, error_body("bad_request", std::string("malformed JSON: ") + e.what()));
    } catch (const InputError& e) {
        send(res, 400, error_body("bad_request", e.what()));
    } catch (const std::exception& e) {
        spdlog::error("request failed: {}", e.what());
        send(res, 500, error_body("internal", e.what()));
    }
}

json run_json(const store::RunRecord& r) {
    json j = r;
    // Paths inside the data directory are server-side details.
    json names = json::array();
    for (const auto& [name, _] : r.artifacts) names.push_back(name);
    j["artifacts"] = names;
    return j;
}

json row_json(const service::ReviewRow& row) {
    const auto& ev = row.decision.event;
    json j = {{"description", ev.description},
              {"timestamp", to_iso(ev.normalized->date)},
              {"precision", to_string(ev.normalized->precision)},
              {"raw_date_expression", ev.raw_date_expression},
              {"date_fallback", ev.date_fallback},
              {"source_url", ev.source_url},
              {"in_timeline", row.in_timeline}};
    if (row.decision.decision) {
        j["decision"] = to_string(row.decision.decision->label);
        j["confidence"] = row.decision.decision->confidence;
        j["logprob_available"] = row.decision.decision->logprob_available;
    } else {
        j["decision"] = nullptr;
        j["confidence"] = nullptr;
        j["error"] = row.decision.error.value_or("classification failed");
    }
    json fb = json::array();
    for (const auto& f : row.feedback)
        fb.push_back({{"reviewer", f.reviewer}, {"verdict", to_string(f.verdict)}, {"created_at", f.created_at}});
    j["feedback"] = fb;
    return j;
}

}  // namespace

service::CreateRunRequest parse_create_run(const json& body) {
    std::vector<FieldIssue> issues;
    service::CreateRunRequest req;
    if (!body.is_object()) throw ValidationError("body", "must be a JSON object");

    if (!body.contains("pledge") || !body["pledge"].is_object()) {
        issues.push_back({"pledge", "required object"});
    } else {
        const auto& p = body["pledge"];
        req.pledge.speaker = string_field(p, "speaker", "pledge.speaker", issues);
        req.pledge.date_made = string_field(p, "date_made", "pledge.date_made", issues);
        req.pledge.geo_scope = string_field(p, "geo_scope", "pledge.geo_scope", issues);
        req.pledge.claim = string_field(p, "claim", "pledge.claim", issues);
    }
    if (!body.contains("range") || !body["range"].is_object()) {
        issues.push_back({"range", "required object with start and end"});
    } else {
        req.range_start = string_field(body["range"], "start", "range.start", issues);
        req.range_end = string_field(body["range"], "end", "range.end", issues);
    }
    if (body.contains("options") && !body["options"].is_null()) {
        const auto& o = body["options"];
        if (!o.is_object()) {
            issues.push_back({"options", "must be an object"});
        } else {
            if (o.contains("keep_all")) {
                if (o["keep_all"].is_boolean()) req.keep_all = o["keep_all"].get<bool>();
                else issues.push_back({"options.keep_all", "must be a boolean"});
            }
            if (o.contains("order") && !o["order"].is_null()) {
                auto order = o["order"].is_string() ? order_from_string(o["order"].get<std::string>()) : std::nullopt;
                if (order) req.order = order;
                else issues.push_back({"options.order", "must be \"chronological\" or \"reverse_chronological\""});
            }
            if (o.contains("seed")) {
                if (o["seed"].is_number_unsigned()) req.seed = o["seed"].get<std::uint64_t>();
                else if (o["seed"].is_number_integer() && o["seed"].get<long long>() >= 0) req.seed = o["seed"].get<std::uint64_t>();
                else issues.push_back({"options.seed", "must be a non-negative integer"});
            }
            if (o.contains("reuse_pledge_id") && !o["reuse_pledge_id"].is_null()) {
                auto id = string_field(o, "reuse_pledge_id", "options.reuse_pledge_id", issues);
                if (!id.empty()) req.reuse_pledge_id = id;
            }
        }
    }
    if (!issues.empty()) throw ValidationError(issues);
    return req;
}

void install_routes(httplib::Server& server, service::Service& svc) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/health", [&svc](const httplib::Request&, httplib::Response& res) {
        send(res, 200, {{"status", "ok"}, {"pending_runs", svc.pending()}});
    });

    server.Post("/runs", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto body = json::parse(req.body);
            auto id = svc.create_run(parse_create_run(body));
            auto run = svc.get_run(id);
            res.set_header("Location", "/runs/" + id);
            send(res, 202, {{"run_id", id}, {"status", to_string(run.status)}, {"pledge_id", run.pledge.id}});
        });
    });

    server.Get(R"(/runs/([A-Za-z0-9\-]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto id = req.matches[1].str();
            auto run = svc.get_run(id);
            auto j = run_json(run);
            if (auto t = svc.timeline(id)) j["timeline"] = *t;
            send(res, 200, j);
        });
    });

    server.Get(R"(/runs/([A-Za-z0-9\-]+)/events)", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto id = req.matches[1].str();
            auto run = svc.get_run(id);
            json rows = json::array();
            for (const auto& row : svc.review_rows(id)) rows.push_back(row_json(row));
            json unresolved = json::array();
            for (const auto& e : svc.unresolved(id))
                unresolved.push_back({{"description", e.description},
                                      {"raw_date_expression", e.raw_date_expression},
                                      {"source_url", e.source_url}});
            send(res, 200,
                 {{"run_id", id},
                  {"status", to_string(run.status)},
                  {"order", to_string(run.options.order)},
                  {"keep_all", run.options.keep_all},
                  {"events", rows},
                  {"unresolved", unresolved}});
        });
    });

    server.Post(R"(/runs/([A-Za-z0-9\-]+)/feedback)", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto id = req.matches[1].str();
            auto body = json::parse(req.body);
            std::vector<FieldIssue> issues;
            if (!body.is_object()) throw ValidationError("body", "must be a JSON object");
            store::EventKey key;
            if (!body.contains("event") || !body["event"].is_object()) {
                issues.push_back({"event", "required object {description, timestamp, source_url}"});
            } else {
                const auto& e = body["event"];
                key.description = string_field(e, "description", "event.description", issues);
                auto ts = string_field(e, "timestamp", "event.timestamp", issues);
                if (auto d = parse_iso_date(ts)) key.timestamp = *d;
                else issues.push_back({"event.timestamp", "invalid date '" + ts + "'"});
                key.source_url = string_field(e, "source_url", "event.source_url", issues);
            }
            auto verdict_text = string_field(body, "verdict", "verdict", issues);
            auto verdict = store::verdict_from_string(verdict_text);
            if (!verdict)
                issues.push_back({"verdict", "must be one of not_relevant, relevant_seen, relevant_update"});
            auto reviewer = string_field(body, "reviewer", "reviewer", issues);
            if (!issues.empty()) throw ValidationError(issues);
            auto stored = svc.record_feedback(id, key, *verdict, reviewer);
            send(res, 201, stored);
        });
    });

    server.Get("/pledges/similar", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto claim = req.get_param_value("claim");
            if (text::trim(claim).empty()) throw ValidationError("claim", "query parameter is required");
            std::size_t k = 5;
            if (req.has_param("k")) {
                try {
                    auto v = std::stol(req.get_param_value("k"));
                    if (v < 1 || v > 100) throw std::out_of_range("k");
                    k = static_cast<std::size_t>(v);
                } catch (const std::exception&) {
                    throw ValidationError("k", "must be an integer between 1 and 100");
                }
            }
            json list = json::array();
            for (const auto& s : svc.similar(claim, k))
                list.push_back({{"pledge", s.pledge}, {"score", s.score}, {"match", s.score >= svc.match_threshold()}});
            send(res, 200, {{"suggestions", list}, {"threshold", svc.match_threshold()}});
        });
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string msg = "unexpected error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            msg = e.what();
        } catch (...) {
        }
        send(res, 500, error_body("internal", msg));
    });
}

}  // namespace pledgetracker::http_api
