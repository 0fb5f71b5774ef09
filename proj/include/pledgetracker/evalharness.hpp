#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pledgetracker/domain.hpp"

namespace pledgetracker::eval {

struct ConfusionCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;
};

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// A zero denominator yields 0 for that metric.
Prf prf(const ConfusionCounts& counts);

/// Half-up rounding to `decimals` places, as used in reports.
double round_half_up(double value, int decimals = 3);

struct Prediction {
    std::string instance_id;
    Label label = Label::not_useful;
};

/// Positive class is `useful`. Missing predictions count as not_useful.
/// Throws InputError on duplicate prediction ids or ids absent from gold.
ConfusionCounts tally(const std::vector<Prediction>& predictions, const std::vector<AnnotatedInstance>& gold);
Prf filtering_metrics(const std::vector<Prediction>& predictions, const std::vector<AnnotatedInstance>& gold);

struct RetrievalJudgment {
    std::string request_id;
    std::string system;
    std::string url;
    bool judged_useful = false;
};

struct RetrievalReport {
    std::string system;
    Prf pledge_level;  // per request, then averaged over requests
    Prf url_level;     // pooled over all requests
    long novelty = 0;
    std::size_t requests = 0;
    std::size_t requests_skipped = 0;
    std::vector<std::string> warnings;
};

/// Gold per request is every URL judged useful by any system. URLs are
/// compared after normalize_url. With skip_empty, requests where the system
/// returned nothing are left out of the pledge-level average instead of
/// scoring 0.
RetrievalReport retrieval_metrics(const std::vector<RetrievalJudgment>& judgments, const std::string& system,
                                  bool skip_empty = false);

std::vector<std::string> systems_in(const std::vector<RetrievalJudgment>& judgments);

enum class Split { train, dev, test };
const char* to_string(Split split);
std::optional<Split> split_from_string(std::string_view s);

struct SplitStats {
    Split split = Split::train;
    std::size_t instances = 0;
    std::size_t pledges = 0;
    std::size_t useful = 0;
    double useful_pct = 0.0;
    double events_per_pledge = 0.0;
};

/// Throws InputError if an instance has no split or a pledge spans splits.
std::vector<SplitStats> split_stats(const std::vector<AnnotatedInstance>& corpus,
                                    const std::map<std::string, Split>& split_of);

// Input files

/// JSON lines {"instance_id", "label"}.
std::vector<Prediction> parse_predictions(std::string_view jsonl);
/// CSV with header request_id,system,url,judged_useful.
std::vector<RetrievalJudgment> parse_judgments_csv(std::string_view csv);

// Reports

nlohmann::json to_json(const Prf& m);
std::string format_filtering_report(const Prf& m, const ConfusionCounts& c);
std::string format_retrieval_report(const std::vector<RetrievalReport>& reports);
std::string format_split_report(const std::vector<SplitStats>& stats);

}  // namespace pledgetracker::eval
