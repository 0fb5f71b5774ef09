#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>

#include "pledgetracker/domain.hpp"
#include "pledgetracker/pipeline.hpp"
#include "pledgetracker/providers.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace pledgetracker;

inline fs::path fixtures_dir() { return PLEDGETRACKER_TEST_FIXTURES; }
inline fs::path data_dir() { return PLEDGETRACKER_TEST_DATA; }
inline fs::path golden_dir() { return PLEDGETRACKER_TEST_GOLDEN; }
inline fs::path trail_world() { return fixtures_dir() / "trail_hunting"; }

inline Date d(int y, unsigned m, unsigned day) { return *make_date(y, m, day); }

inline Pledge trail_pledge() {
    return validate_pledge({"", "Labour", "2024-07-04", "UK", "We will ban trail hunting"});
}

inline MonitoringRange trail_range() { return make_range(d(2024, 7, 5), d(2025, 6, 30)); }

inline pipeline::Request trail_request(bool keep_all = false) {
    pipeline::Request r;
    r.pledge = trail_pledge();
    r.range = trail_range();
    r.keep_all = keep_all;
    r.seed = 7;
    return r;
}

inline pipeline::Resources trail_resources() {
    return pipeline::load_resources(data_dir(), (trail_world() / "annotated.jsonl").string());
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("pt-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

/// LLM stub driven by a callback; records every request.
class ScriptedLlm final : public providers::LlmProvider {
public:
    using Fn = std::function<providers::LlmResponse(const providers::LlmRequest&)>;
    explicit ScriptedLlm(Fn fn) : fn_(std::move(fn)) {}
    providers::LlmResponse complete(const providers::LlmRequest& request) override {
        {
            std::lock_guard lock(mutex_);
            requests.push_back(request);
        }
        return fn_(request);
    }
    std::vector<providers::LlmRequest> requests;

private:
    Fn fn_;
    std::mutex mutex_;
};

class FailingEmbedder final : public providers::Embedder {
public:
    std::vector<providers::EmbeddingVector> embed(const std::vector<std::string>&) override {
        throw ProviderError(ProviderErrorKind::transport, "embedding service down");
    }
};

}  // namespace testsupport
