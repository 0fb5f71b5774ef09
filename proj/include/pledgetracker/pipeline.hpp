#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pledgetracker/fulfilment.hpp"
#include "pledgetracker/retrieval.hpp"
#include "pledgetracker/timeline_builder.hpp"

namespace pledgetracker::pipeline {

/// Static inputs shared by every run.
struct Resources {
    std::vector<retrieval::QuestionEvidence> seed_pairs;
    std::vector<timeline::ExtractionExample> extraction_examples;
    std::vector<AnnotatedInstance> corpus;
    retrieval::RetrievalConfig retrieval;
    std::size_t token_budget = 8000;
    std::size_t concurrency = 4;
    double match_threshold = 0.8;
};

/// Reads question_evidence_seed.jsonl and extraction_examples.json from
/// `data_dir`, plus the annotated corpus when given.
Resources load_resources(const std::filesystem::path& data_dir, const std::optional<std::string>& corpus_path = {});

/// Directory holding the bundled seed files.
std::filesystem::path default_data_dir();

struct Request {
    Pledge pledge;
    MonitoringRange range;
    bool keep_all = false;
    TimelineOrder order = TimelineOrder::reverse_chronological;
    std::uint64_t seed = 0;
    std::vector<AnnotatedInstance> feedback;
    std::optional<retrieval::CachedHits> cached;
};

enum class Stage { retrieving, extracting, filtering };
const char* to_string(Stage stage);

struct Result {
    retrieval::RetrievalResult retrieval;
    timeline::AssemblyResult assembly;
    fulfilment::IclPool pool;
    fulfilment::FilterResult filter;
    std::vector<std::string> warnings;
};

/// Writes stage artifacts into one directory as each stage completes.
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir);

    /// Artifact name -> file name, in the order they are written.
    static const std::vector<std::pair<std::string, std::string>>& files_for(Stage stage);

    void write_retrieval(const retrieval::RetrievalResult& r);
    void write_candidates(const timeline::AssemblyResult& a);
    void write_filter(const Request& request, const fulfilment::IclPool& pool, const fulfilment::FilterResult& f,
                      const std::vector<std::string>& warnings);

    [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

using StageCallback = std::function<void(Stage)>;

/// retrieve -> assemble_candidates -> filter_timeline. `on_stage` runs
/// before each stage starts; `writer`, when set, receives each stage's
/// output as soon as the stage finishes.
Result run(const Request& request, const providers::ProviderSet& providers, const Resources& resources,
           const StageCallback& on_stage = {}, ArtifactWriter* writer = nullptr);

/// Serialises as the timeline file: two-space indented JSON plus newline.
std::string timeline_file_contents(const Timeline& timeline);

}  // namespace pledgetracker::pipeline
