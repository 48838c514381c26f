#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <tuple>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rubricrank/backend.hpp"
#include "rubricrank/orchestrator.hpp"

namespace testing {

namespace fs = std::filesystem;

fs::path fixture_dir();  // tests/fixtures
fs::path golden_dir();   // tests/golden

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& text);

// Synthetic benchmark: queries x candidates with a handful of graded
// relevant documents per query, shuffled so input order carries no signal.
struct SyntheticQuery {
    std::string query_id;
    std::string text;
    std::vector<rubricrank::CandidateDoc> candidates;
};

struct SyntheticBenchmark {
    std::vector<SyntheticQuery> queries;
    std::vector<std::tuple<std::string, std::string, int>> judgments;  // qid, did, grade
};

SyntheticBenchmark make_benchmark(std::size_t queries, std::size_t candidates, std::size_t relevant,
                                  std::uint64_t seed);

// Writes the benchmark as a dataset directory <root>/<name>.
void write_dataset(const SyntheticBenchmark& bench, const fs::path& root, const std::string& name);

}  // namespace testing

namespace testing {

// Backend driven by a callback; the callback must be thread-safe.
class FnBackend final : public rubricrank::ScoringBackend {
public:
    using Fn = std::function<rubricrank::Completion(const rubricrank::CompletionRequest&)>;
    explicit FnBackend(Fn fn) : fn_(std::move(fn)) {}
    rubricrank::Completion complete(const rubricrank::CompletionRequest& r) override {
        calls_.fetch_add(1);
        return fn_(r);
    }
    std::size_t calls() const { return calls_.load(); }

private:
    Fn fn_;
    std::atomic<std::size_t> calls_{0};
};

inline rubricrank::Completion scored(int s) {
    return {"reasoning...\n<score>\n" + std::to_string(s) + "\n</score>", std::nullopt};
}

}  // namespace testing
