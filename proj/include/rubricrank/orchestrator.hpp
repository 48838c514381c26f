#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rubricrank/backend.hpp"
#include "rubricrank/error.hpp"
#include "rubricrank/rubric.hpp"
#include "rubricrank/score_integration.hpp"

namespace rubricrank {

// Outcome of one sample slot after its retry budget.
struct SampleOutcome {
    std::string text;              // last completion received (empty if none)
    std::optional<int> score;      // empty when every attempt failed
    std::optional<double> weight;  // from token log-probs when requested
    std::size_t attempts = 0;
};

struct SampleBatch {
    std::vector<SampleOutcome> samples;
    std::size_t failure_count = 0;  // failed attempts, including retried ones
    std::size_t backend_calls = 0;

    std::vector<Trajectory> trajectories() const;
};

// Draws n samples for one prompt, retrying each unparseable or timed-out
// completion up to config.max_retries_per_sample times. Runs the samples
// with at most config.concurrency_limit in flight.
SampleBatch sample_completions(ScoringBackend& backend, const PromptText& prompt, std::size_t n,
                               const ScoringBackendConfig& config, const std::string& query_id,
                               const std::string& doc_id);

struct ScoredCandidate {
    std::string query_id;
    std::string doc_id;
    std::optional<IntegratedScore> integrated;  // empty when every sample failed
    std::vector<Trajectory> trajectories;
    std::size_t failure_count = 0;
    std::size_t backend_calls = 0;
    std::string prompt_sha256;

    bool failed() const { return !integrated.has_value(); }
};

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;
    bool failed = false;

    bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
    std::string query_id;
    std::vector<RankedEntry> entries;

    bool operator==(const RankedList&) const = default;
};

struct CandidateDoc {
    std::string doc_id;
    std::string text;
};

// Scores one pair. Throws Error(AllSamplesFailed) when no sample parsed.
ScoredCandidate score_pair(ScoringBackend& backend, const RelevanceRubric& rubric,
                           const std::string& query_id, const std::string& query,
                           const CandidateDoc& doc, const ScoringBackendConfig& config);

// Sorts by integrated score descending; equal scores keep input order and
// failed pairs go last in input order.
RankedList assemble_ranking(const std::string& query_id, std::span<const ScoredCandidate> scored);

struct RerankResult {
    RankedList ranking;
    std::vector<ScoredCandidate> candidates;  // input order
};

// Raised when a non-retryable backend error stops a query. partial holds the
// pairs that finished before the abort.
class QueryAbortedError : public Error {
public:
    QueryAbortedError(std::string query_id, ErrorCode cause, const std::string& message,
                      std::vector<ScoredCandidate> partial, std::size_t total_pairs);

    const std::string& query_id() const noexcept { return query_id_; }
    ErrorCode cause() const noexcept { return cause_; }
    const std::vector<ScoredCandidate>& partial() const noexcept { return partial_; }
    std::size_t total_pairs() const noexcept { return total_pairs_; }

private:
    std::string query_id_;
    ErrorCode cause_;
    std::vector<ScoredCandidate> partial_;
    std::size_t total_pairs_;
};

// Scores every candidate independently (K samples each, all pairs and
// samples in one bounded pool) and ranks them.
RerankResult rerank(ScoringBackend& backend, const std::string& query_id, const std::string& query,
                    std::span<const CandidateDoc> candidates, const RelevanceRubric& rubric,
                    const ScoringBackendConfig& config);

// Runs fn(0..count-1) on at most `workers` threads. Stops handing out new
// indices once fn throws; the first exception is rethrown after joining.
void bounded_parallel_for(std::size_t count, std::size_t workers,
                          const std::function<void(std::size_t)>& fn);

}  // namespace rubricrank
