#pragma once

#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pledgetracker/service.hpp"

namespace pledgetracker::http_api {

/// Registers the JSON API on `server`:
///
///   POST /runs                   202 {run_id, status}
///   GET  /runs/{id}              run record, plus "timeline" once done
///   GET  /runs/{id}/events       every candidate with decision and feedback
///   POST /runs/{id}/feedback     201 stored feedback record
///   GET  /pledges/similar        ?claim=...&k=5
///   GET  /health
///
/// Errors are {code, message, field?, fields?} with a matching 4xx/5xx status.
void install_routes(httplib::Server& server, service::Service& service);

/// Parses a POST /runs body. Throws ValidationError.
service::CreateRunRequest parse_create_run(const nlohmann::json& body);

nlohmann::json error_body(const std::string& code, const std::string& message,
                          const std::vector<FieldIssue>& fields = {});

}  // namespace pledgetracker::http_api
