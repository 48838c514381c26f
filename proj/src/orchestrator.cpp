#include "rubricrank/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "rubricrank/digest.hpp"

namespace rubricrank {

namespace {

struct PairJob {
    const std::string* query_id;
    const std::string* doc_id;
    PromptText prompt;
};

bool retryable(ErrorCode code) {
    return code == ErrorCode::Timeout || code == ErrorCode::BackendTransient;
}

SampleOutcome run_slot(ScoringBackend& backend, const PairJob& job, std::size_t sample_index,
                       const ScoringBackendConfig& config) {
    CompletionRequest req;
    req.prompt = job.prompt.text;
    req.model = config.model_name;
    req.temperature = config.effective_temperature();
    req.want_logprobs = config.weighting == Weighting::likelihood;
    req.timeout = config.request_timeout;
    req.key.query_id = *job.query_id;
    req.key.doc_id = *job.doc_id;
    req.key.sample_index = sample_index;

    SampleOutcome out;
    for (std::size_t attempt = 0; attempt <= config.max_retries_per_sample; ++attempt) {
        req.key.attempt = attempt;
        ++out.attempts;
        Completion c;
        try {
            c = backend.complete(req);
        } catch (const Error& e) {
            if (retryable(e.code())) continue;
            throw;
        }
        out.text = std::move(c.text);
        if (auto s = try_parse_score(out.text)) {
            out.score = *s;
            if (c.token_logprobs && !c.token_logprobs->empty()) {
                out.weight = likelihood_weight(*c.token_logprobs);
            }
            break;
        }
    }
    return out;
}

ScoredCandidate summarize(const PairJob& job, std::span<const SampleOutcome> slots,
                          Weighting weighting) {
    ScoredCandidate sc;
    sc.query_id = *job.query_id;
    sc.doc_id = *job.doc_id;
    sc.prompt_sha256 = sha256_hex(job.prompt.text);
    for (const auto& s : slots) {
        sc.backend_calls += s.attempts;
        sc.failure_count += s.attempts - (s.score ? 1 : 0);
        if (s.score) sc.trajectories.push_back(Trajectory{s.text, *s.score, s.weight});
    }
    if (!sc.trajectories.empty()) sc.integrated = integrate_scores(sc.trajectories, weighting);
    return sc;
}

struct JobsOutcome {
    std::vector<ScoredCandidate> scored;  // input order; only complete pairs are meaningful
    std::vector<char> complete;
    std::exception_ptr failure;
};

// Executes every (pair, sample) slot in one bounded pool. Slots are keyed by
// index, so completion order never affects the result.
JobsOutcome score_jobs(ScoringBackend& backend, std::span<const PairJob> jobs,
                       const ScoringBackendConfig& config) {
    const std::size_t k = config.samples_per_pair;
    std::vector<SampleOutcome> slots(jobs.size() * k);
    std::vector<char> slot_done(slots.size(), 0);

    JobsOutcome out;
    try {
        bounded_parallel_for(slots.size(), config.concurrency_limit, [&](std::size_t i) {
            slots[i] = run_slot(backend, jobs[i / k], i % k, config);
            slot_done[i] = 1;
        });
    } catch (...) {
        out.failure = std::current_exception();
    }

    out.scored.reserve(jobs.size());
    out.complete.assign(jobs.size(), 0);
    for (std::size_t p = 0; p < jobs.size(); ++p) {
        const auto first = slot_done.begin() + static_cast<std::ptrdiff_t>(p * k);
        out.complete[p] = std::all_of(first, first + static_cast<std::ptrdiff_t>(k),
                                      [](char d) { return d != 0; });
        if (!out.complete[p]) {
            out.scored.emplace_back();
            continue;
        }
        out.scored.push_back(summarize(jobs[p], std::span(slots).subspan(p * k, k), config.weighting));
    }
    return out;
}

}  // namespace

std::vector<Trajectory> SampleBatch::trajectories() const {
    std::vector<Trajectory> out;
    for (const auto& s : samples) {
        if (s.score) out.push_back(Trajectory{s.text, *s.score, s.weight});
    }
    return out;
}

void bounded_parallel_for(std::size_t count, std::size_t workers,
                          const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first_error;
    std::mutex error_mu;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (!stop.load(std::memory_order_relaxed)) {
                    const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                    if (i >= count) return;
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mu);
                        if (!first_error) first_error = std::current_exception();
                        stop.store(true, std::memory_order_relaxed);
                        return;
                    }
                }
            });
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

SampleBatch sample_completions(ScoringBackend& backend, const PromptText& prompt, std::size_t n,
                               const ScoringBackendConfig& config, const std::string& query_id,
                               const std::string& doc_id) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
    const PairJob job{&query_id, &doc_id, prompt};
    SampleBatch batch;
    batch.samples.resize(n);
    bounded_parallel_for(n, config.concurrency_limit, [&](std::size_t i) {
        batch.samples[i] = run_slot(backend, job, i, config);
    });
    for (const auto& s : batch.samples) {
        batch.backend_calls += s.attempts;
        batch.failure_count += s.attempts - (s.score ? 1 : 0);
    }
    return batch;
}

ScoredCandidate score_pair(ScoringBackend& backend, const RelevanceRubric& rubric,
                           const std::string& query_id, const std::string& query,
                           const CandidateDoc& doc, const ScoringBackendConfig& config) {
    config.validate();
    const PairJob job{&query_id, &doc.doc_id, render_prompt(rubric, query, doc.text)};
    auto outcome = score_jobs(backend, std::span(&job, 1), config);
    if (outcome.failure) std::rethrow_exception(outcome.failure);
    auto& scored = outcome.scored;
    if (scored.front().failed()) {
        throw Error(ErrorCode::AllSamplesFailed,
                    "no parseable score for (" + query_id + ", " + doc.doc_id + ") after " +
                        std::to_string(scored.front().backend_calls) + " calls");
    }
    return std::move(scored.front());
}

RankedList assemble_ranking(const std::string& query_id, std::span<const ScoredCandidate> scored) {
    std::vector<const ScoredCandidate*> order;
    order.reserve(scored.size());
    for (const auto& s : scored) order.push_back(&s);
    std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        if (a->failed() != b->failed()) return b->failed();
        if (a->failed()) return false;
        return a->integrated->value > b->integrated->value;
    });

    RankedList out;
    out.query_id = query_id;
    out.entries.reserve(order.size());
    for (const auto* s : order) {
        out.entries.push_back(RankedEntry{s->doc_id, s->failed() ? 0.0 : s->integrated->value,
                                          s->failed()});
    }
    return out;
}

QueryAbortedError::QueryAbortedError(std::string query_id, ErrorCode cause,
                                     const std::string& message,
                                     std::vector<ScoredCandidate> partial, std::size_t total_pairs)
    : Error(ErrorCode::QueryAborted,
            "query " + query_id + " aborted after " + std::to_string(partial.size()) + "/" +
                std::to_string(total_pairs) + " pairs: " + message),
      query_id_(std::move(query_id)),
      cause_(cause),
      partial_(std::move(partial)),
      total_pairs_(total_pairs) {}

RerankResult rerank(ScoringBackend& backend, const std::string& query_id, const std::string& query,
                    std::span<const CandidateDoc> candidates, const RelevanceRubric& rubric,
                    const ScoringBackendConfig& config) {
    config.validate();
    if (candidates.empty()) {
        throw Error(ErrorCode::InvalidArgument, "query " + query_id + " has no candidates");
    }

    std::vector<PairJob> jobs;
    jobs.reserve(candidates.size());
    for (const auto& c : candidates) {
        jobs.push_back(PairJob{&query_id, &c.doc_id, render_prompt(rubric, query, c.text)});
    }

    auto outcome = score_jobs(backend, jobs, config);
    if (outcome.failure) {
        std::vector<ScoredCandidate> partial;
        for (std::size_t p = 0; p < jobs.size(); ++p) {
            if (outcome.complete[p]) partial.push_back(std::move(outcome.scored[p]));
        }
        try {
            std::rethrow_exception(outcome.failure);
        } catch (const Error& e) {
            throw QueryAbortedError(query_id, e.code(), e.what(), std::move(partial),
                                    candidates.size());
        }
    }

    RerankResult result;
    result.candidates = std::move(outcome.scored);
    result.ranking = assemble_ranking(query_id, result.candidates);
    return result;
}

}  // namespace rubricrank
