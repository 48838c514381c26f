#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rubricrank/jsonl.hpp"
#include "rubricrank/metrics.hpp"
#include "rubricrank/orchestrator.hpp"
#include "rubricrank/reward.hpp"
#include "rubricrank/rubric.hpp"
#include "rubricrank/score_integration.hpp"

namespace rubricrank {

namespace fs = std::filesystem;

inline constexpr std::size_t kDefaultCandidateDepth = 100;

struct Query {
    std::string query_id;
    std::string text;
};

struct CandidateEntry {
    std::string doc_id;
    double first_stage_score = 0.0;
};

struct CandidateSet {
    std::string query_id;
    std::vector<CandidateEntry> entries;  // rank order, non-increasing score
};

struct TrainingSample {
    std::string query_id;
    std::string positive_doc_id;
    std::string negative_doc_id;
};

// Line-delimited corpus indexed by byte offset. Only the index stays
// resident; text() re-reads the record from disk.
class Corpus {
public:
    static Corpus open(const fs::path& path);

    Corpus();  // empty
    Corpus(Corpus&&) noexcept;
    Corpus& operator=(Corpus&&) noexcept;
    ~Corpus();

    bool contains(const std::string& doc_id) const;
    // Throws Error(DanglingReference) for an unknown id. Thread-safe.
    std::string text(const std::string& doc_id) const;
    std::size_t size() const { return index_.size(); }

private:
    struct Slot {
        std::uint64_t offset = 0;
        std::uint64_t length = 0;
    };
    fs::path path_;
    std::unordered_map<std::string, Slot> index_;
    mutable std::unique_ptr<std::mutex> mu_;
    mutable std::unique_ptr<std::ifstream> in_;
};

std::vector<Query> load_queries(const fs::path& path);

// Six-column run format. Entries are sorted by rank and truncated to depth.
std::vector<CandidateSet> load_candidates(const fs::path& path,
                                          std::size_t depth = kDefaultCandidateDepth);

// "query_id 0 doc_id relevance" lines.
Qrels load_qrels(const fs::path& path);

std::vector<TrainingSample> load_training_samples(const fs::path& path);
void write_training_samples(const fs::path& path, std::span<const TrainingSample> samples);

// Run files: "query_id Q0 doc_id rank score tag", ranks from 1, queries in
// id order. Failed pairs are written with score -1.
std::string format_run(std::span<const RankedList> rankings, const std::string& tag);
void write_run_file(const fs::path& path, std::span<const RankedList> rankings,
                    const std::string& tag);
std::vector<RankedList> load_run_file(const fs::path& path);

struct DatasetPaths {
    std::string name;
    fs::path queries;
    fs::path corpus;
    fs::path candidates;
    fs::path qrels;

    // <root>/<name>/{queries.jsonl, corpus.jsonl, candidates.run, qrels.txt}
    static DatasetPaths under(const fs::path& root, const std::string& name);
};

// Subdirectories of root that contain a queries.jsonl, sorted by name.
std::vector<std::string> discover_datasets(const fs::path& root);

struct DanglingReport {
    std::size_t candidate_docs = 0;   // candidate doc ids missing from the corpus
    std::size_t candidate_queries = 0;  // candidate query ids missing from queries
    std::vector<std::string> examples;  // first few offending ids

    std::size_t total() const { return candidate_docs + candidate_queries; }
};

struct LoadOptions {
    bool strict = false;
    std::size_t depth = kDefaultCandidateDepth;
};

struct Dataset {
    std::string name;
    std::vector<Query> queries;
    Corpus corpus;
    std::vector<CandidateSet> candidates;  // dangling entries removed
    Qrels qrels;
    RelevanceRubric rubric;
    DanglingReport dangling;

    const Query* query(const std::string& query_id) const;

private:
    friend Dataset load_dataset(const DatasetPaths&, const RubricConfig&, const LoadOptions&);
    std::unordered_map<std::string, std::size_t> query_index_;
};

// Cross-references every file. The rubric is looked up by dataset name.
// Strict mode raises Error(DanglingReference) on the first unresolved id;
// otherwise unresolved candidates are dropped and counted.
Dataset load_dataset(const DatasetPaths& paths, const RubricConfig& rubrics,
                     const LoadOptions& options = {});

// Convenience sampler: per judged query, one uniformly drawn positive
// (grade > 0) and one negative (grade 0 or unjudged candidate). Not the
// canonical training-pair construction.
std::vector<TrainingSample> sample_training_pairs(const Dataset& dataset, std::uint64_t seed);

// ----- audit / export records -------------------------------------------------

nlohmann::ordered_json audit_record(const ScoredCandidate& scored, std::size_t rank);
ScoredCandidate audit_from_json(const nlohmann::json& j);
// Writes records in ranking order of each query, queries in id order.
std::size_t write_audit_file(const fs::path& path, std::span<const RerankResult> results);
std::vector<ScoredCandidate> load_audit_file(const fs::path& path);

nlohmann::ordered_json sft_record(const SftTuple& tuple);
SftTuple sft_from_json(const nlohmann::json& j);

// One reward export record: a training sample with both rollout groups and
// the three reward vectors per group.
struct RewardExport {
    std::string query_id;
    RolloutGroup positive;
    RolloutGroup negative;
    SampleRewards rewards;
    RewardConfig config;
};

nlohmann::ordered_json reward_record(const RewardExport& rec);
RewardExport reward_from_json(const nlohmann::json& j);

// Rollout input: same layout as the reward export without reward vectors.
struct RolloutSample {
    std::string query_id;
    RolloutGroup positive;
    RolloutGroup negative;
};

nlohmann::ordered_json rollout_record(const RolloutSample& sample);
std::vector<RolloutSample> load_rollouts(const fs::path& path);

extern const std::string_view kSftHeader;
extern const std::string_view kRewardHeader;
extern const std::string_view kAuditHeader;
extern const std::string_view kRolloutHeader;

struct ExportCounts {
    std::size_t sft = 0;
    std::size_t rewards = 0;
};

// Writes <dir>/sft.jsonl and <dir>/rewards.jsonl.
ExportCounts export_training_artifacts(const fs::path& dir, std::span<const SftTuple> sft,
                                       std::span<const RewardExport> rewards);

}  // namespace rubricrank
