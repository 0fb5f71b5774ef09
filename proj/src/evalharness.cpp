#include "pledgetracker/evalharness.hpp"
#include "pledgetracker/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "pledgetracker/text.hpp"
#include "pledgetracker/url.hpp"

namespace pledgetracker::eval {

using nlohmann::json;

Prf prf(const ConfusionCounts& c) {
    Prf m;
    if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

double round_half_up(double value, int decimals) {
    double scale = std::pow(10.0, decimals);
    // The epsilon absorbs binary representation error such as 0.1235 -> 0.12349999.
    return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

ConfusionCounts tally(const std::vector<Prediction>& predictions, const std::vector<AnnotatedInstance>& gold) {
    std::map<std::string, Label> predicted;
    for (const auto& p : predictions)
        if (!predicted.emplace(p.instance_id, p.label).second)
            throw InputError("duplicate prediction for instance '" + p.instance_id + "'");
    std::set<std::string> gold_ids;
    ConfusionCounts c;
    for (const auto& g : gold) {
        gold_ids.insert(g.id);
        auto it = predicted.find(g.id);
        Label p = it == predicted.end() ? Label::not_useful : it->second;
        bool pos = p == Label::useful;
        bool truth = g.label == Label::useful;
        if (pos && truth) ++c.tp;
        else if (pos) ++c.fp;
        else if (truth) ++c.fn;
        else ++c.tn;
    }
    for (const auto& [id, _] : predicted)
        if (!gold_ids.count(id)) throw InputError("prediction for unknown instance '" + id + "'");
    return c;
}

Prf filtering_metrics(const std::vector<Prediction>& predictions, const std::vector<AnnotatedInstance>& gold) {
    return prf(tally(predictions, gold));
}

std::vector<std::string> systems_in(const std::vector<RetrievalJudgment>& judgments) {
    std::set<std::string> s;
    for (const auto& j : judgments) s.insert(j.system);
    return {s.begin(), s.end()};
}

RetrievalReport retrieval_metrics(const std::vector<RetrievalJudgment>& judgments, const std::string& system,
                                  bool skip_empty) {
    RetrievalReport report;
    report.system = system;
    // request -> url -> systems that returned it; request -> gold urls
    std::map<std::string, std::map<std::string, std::set<std::string>>> returned;
    std::map<std::string, std::set<std::string>> gold;
    for (const auto& j : judgments) {
        auto url = normalize_url(j.url);
        returned[j.request_id][url].insert(j.system);
        if (j.judged_useful) gold[j.request_id].insert(url);
    }
    bool present = std::any_of(judgments.begin(), judgments.end(), [&](const RetrievalJudgment& j) { return j.system == system; });
    if (!present) {
        report.warnings.push_back("system '" + system + "' has no judgments");
        spdlog::warn("system '{}' has no judgments", system);
    }

    ConfusionCounts pooled;
    double p_sum = 0, r_sum = 0, f_sum = 0;
    for (const auto& [request, urls] : returned) {
        const auto& g = gold[request];
        ConfusionCounts c;
        std::size_t mine = 0;
        for (const auto& [url, systems] : urls) {
            if (!systems.count(system)) continue;
            ++mine;
            if (g.count(url)) {
                ++c.tp;
                if (systems.size() == 1) ++report.novelty;
            } else {
                ++c.fp;
            }
        }
        for (const auto& url : g)
            if (!urls.at(url).count(system)) ++c.fn;
        pooled.tp += c.tp;
        pooled.fp += c.fp;
        pooled.fn += c.fn;
        if (mine == 0 && skip_empty) {
            ++report.requests_skipped;
            continue;
        }
        auto m = prf(c);
        p_sum += m.precision;
        r_sum += m.recall;
        f_sum += m.f1;
        ++report.requests;
    }
    if (report.requests > 0) {
        double n = static_cast<double>(report.requests);
        report.pledge_level = {p_sum / n, r_sum / n, f_sum / n};
    }
    report.url_level = prf(pooled);
    return report;
}

const char* to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "?";
}

std::optional<Split> split_from_string(std::string_view s) {
    auto l = text::to_lower(text::trim(s));
    if (l == "train") return Split::train;
    if (l == "dev" || l == "development" || l == "validation") return Split::dev;
    if (l == "test") return Split::test;
    return std::nullopt;
}

std::vector<SplitStats> split_stats(const std::vector<AnnotatedInstance>& corpus,
                                    const std::map<std::string, Split>& split_of) {
    std::map<std::string, Split> pledge_split;
    std::map<Split, SplitStats> stats;
    std::map<Split, std::set<std::string>> pledges;
    for (const auto& inst : corpus) {
        auto it = split_of.find(inst.id);
        if (it == split_of.end()) throw InputError("instance '" + inst.id + "' is not assigned to a split");
        auto [ps, inserted] = pledge_split.emplace(inst.pledge.id, it->second);
        if (!inserted && ps->second != it->second)
            throw InputError("pledge '" + inst.pledge.claim + "' appears in both " + to_string(ps->second) + " and " +
                             to_string(it->second));
        auto& s = stats[it->second];
        s.split = it->second;
        ++s.instances;
        if (inst.label == Label::useful) ++s.useful;
        pledges[it->second].insert(inst.pledge.id);
    }
    std::vector<SplitStats> out;
    for (auto& [split, s] : stats) {
        s.pledges = pledges[split].size();
        s.useful_pct = s.instances ? 100.0 * static_cast<double>(s.useful) / static_cast<double>(s.instances) : 0.0;
        s.events_per_pledge = s.pledges ? static_cast<double>(s.instances) / static_cast<double>(s.pledges) : 0.0;
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<Prediction> parse_predictions(std::string_view jsonl) {
    std::vector<Prediction> out;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            const auto& id = j.at("instance_id");
            Prediction p;
            p.instance_id = id.is_string() ? id.get<std::string>() : id.dump();
            auto label = label_from_string(j.at("label").get<std::string>());
            if (!label) throw InputError("label must be \"useful\" or \"not_useful\"");
            p.label = *label;
            out.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw InputError(e.what(), lineno);
        } catch (const InputError& e) {
            throw InputError(e.what(), lineno);
        }
    }
    return out;
}

namespace {

// RFC 4180 fields: quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    if (quoted) throw InputError("unterminated quoted field", lineno);
    fields.push_back(cur);
    return fields;
}

bool parse_bool(const std::string& raw, std::size_t lineno) {
    auto v = text::to_lower(text::trim(raw));
    if (v == "1" || v == "true" || v == "yes" || v == "useful") return true;
    if (v == "0" || v == "false" || v == "no" || v == "not_useful") return false;
    throw InputError("judged_useful must be true/false or 1/0, got '" + raw + "'", lineno);
}

}  // namespace

std::vector<RetrievalJudgment> parse_judgments_csv(std::string_view csv) {
    std::istringstream in{std::string(csv)};
    std::string line;
    std::size_t lineno = 0;
    std::vector<RetrievalJudgment> out;
    std::map<std::string, std::size_t> col;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        auto fields = split_csv_line(line, lineno);
        if (col.empty()) {
            for (std::size_t i = 0; i < fields.size(); ++i) col[text::to_lower(text::trim(fields[i]))] = i;
            for (const char* need : {"request_id", "system", "url", "judged_useful"})
                if (!col.count(need)) throw InputError(std::string("missing column '") + need + "'", lineno);
            continue;
        }
        if (fields.size() != col.size())
            throw InputError(fmt::format("expected {} fields, found {}", col.size(), fields.size()), lineno);
        RetrievalJudgment j{text::trim(fields[col["request_id"]]), text::trim(fields[col["system"]]),
                            text::trim(fields[col["url"]]), parse_bool(fields[col["judged_useful"]], lineno)};
        if (j.request_id.empty() || j.system.empty() || j.url.empty())
            throw InputError("request_id, system and url must be non-empty", lineno);
        out.push_back(std::move(j));
    }
    if (col.empty()) throw InputError("judgments file is empty");
    return out;
}

// ---------------------------------------------------------------------------

json to_json(const Prf& m) {
    return {{"precision", round_half_up(m.precision)}, {"recall", round_half_up(m.recall)}, {"f1", round_half_up(m.f1)}};
}

std::string format_filtering_report(const Prf& m, const ConfusionCounts& c) {
    std::string out = fmt::format("{:<10} {:>7} {:>7} {:>7}\n", "", "P", "R", "F1");
    out += fmt::format("{:<10} {:>7.3f} {:>7.3f} {:>7.3f}\n", "useful", round_half_up(m.precision),
                       round_half_up(m.recall), round_half_up(m.f1));
    out += fmt::format("tp={} fp={} fn={} tn={}\n", c.tp, c.fp, c.fn, c.tn);
    return out;
}

std::string format_retrieval_report(const std::vector<RetrievalReport>& reports) {
    std::string out = fmt::format("{:<16} {:>7} {:>7} {:>7} | {:>7} {:>7} {:>7} | {:>7}\n", "system", "pl-P", "pl-R",
                                  "pl-F1", "url-P", "url-R", "url-F1", "novelty");
    for (const auto& r : reports) {
        out += fmt::format("{:<16} {:>7.3f} {:>7.3f} {:>7.3f} | {:>7.3f} {:>7.3f} {:>7.3f} | {:>7}\n", r.system,
                           round_half_up(r.pledge_level.precision), round_half_up(r.pledge_level.recall),
                           round_half_up(r.pledge_level.f1), round_half_up(r.url_level.precision),
                           round_half_up(r.url_level.recall), round_half_up(r.url_level.f1), r.novelty);
    }
    return out;
}

std::string format_split_report(const std::vector<SplitStats>& stats) {
    std::string out = fmt::format("{:<6} {:>9} {:>8} {:>7} {:>10} {:>13}\n", "split", "instances", "pledges", "useful",
                                  "useful(%)", "event/pledge");
    for (const auto& s : stats)
        out += fmt::format("{:<6} {:>9} {:>8} {:>7} {:>10.2f} {:>13.2f}\n", to_string(s.split), s.instances, s.pledges,
                           s.useful, s.useful_pct, s.events_per_pledge);
    return out;
}

}  // namespace pledgetracker::eval
