#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rubricrank/score_integration.hpp"

namespace rubricrank {

// Environment variable holding the bearer token for HTTP backends.
inline constexpr std::string_view kApiKeyEnv = "RUBRICRANK_API_KEY";

// URL scheme reserved for the deterministic in-process mock.
inline constexpr std::string_view kMockScheme = "mock://";

struct ScoringBackendConfig {
    std::string endpoint_url = "mock://oracle";
    std::string model_name = "rubricrank-scorer";
    // Unset: 1.0 when samples_per_pair > 1, 0.0 (greedy) otherwise.
    std::optional<double> temperature;
    std::size_t samples_per_pair = 1;
    std::size_t max_retries_per_sample = 2;
    std::size_t concurrency_limit = 8;
    std::chrono::milliseconds request_timeout{120'000};
    Weighting weighting = Weighting::uniform;
    std::string api_key_env = std::string(kApiKeyEnv);

    double effective_temperature() const;
    bool is_mock() const;
    // Throws Error(InvalidArgument) naming the offending field.
    void validate() const;
};

// Identifies one backend call. Only the mock uses it for seeding; HTTP
// backends ignore it.
struct SampleKey {
    std::string query_id;
    std::string doc_id;
    std::size_t sample_index = 0;
    std::size_t attempt = 0;
};

struct CompletionRequest {
    std::string_view prompt;
    std::string_view model;
    double temperature = 0.0;
    bool want_logprobs = false;
    std::chrono::milliseconds timeout{120'000};
    SampleKey key;
};

struct Completion {
    std::string text;
    std::optional<std::vector<double>> token_logprobs;
};

// Implementations must be safe to call concurrently.
//
// Failure contract: Error(Timeout) and Error(BackendTransient) are retried by
// the orchestrator; BackendUnreachable, BackendRejected and AuthFailure abort.
class ScoringBackend {
public:
    virtual ~ScoringBackend() = default;
    virtual Completion complete(const CompletionRequest& request) = 0;
};

struct MockOptions {
    std::uint64_t seed = 0;
    double noise_sd = 15.0;
    double positive_center = 80.0;
    double negative_center = 20.0;
    double grade_step = 10.0;     // added per relevance grade above 1
    double failure_rate = 0.0;    // probability of a malformed completion per call

    // Parses the query string of "mock://<name>?seed=7&noise=20&pos=80&neg=20&step=10&fail=0.1".
    static MockOptions from_url(std::string_view url);

    // Centre of the score distribution for a judged relevance grade.
    double center_for_relevance(int relevance) const;
};

// Deterministic pseudo-LLM. Scores are drawn from a normal distribution
// around a per-(query, doc) centre, rounded and clamped to [0,100], seeded by
// (seed, query_id, doc_id, sample_index, attempt). Temperature is ignored:
// the mock always samples.
class MockBackend final : public ScoringBackend {
public:
    explicit MockBackend(MockOptions options);

    void set_center(const std::string& query_id, const std::string& doc_id, double center);
    void set_relevance(const std::string& query_id, const std::string& doc_id, int relevance);

    const MockOptions& options() const { return options_; }
    double center(const std::string& query_id, const std::string& doc_id) const;

    Completion complete(const CompletionRequest& request) override;

private:
    MockOptions options_;
    std::map<std::pair<std::string, std::string>, double> centers_;
};

// OpenAI-style chat-completions client: one user message per call, bearer
// token from the configured environment variable.
class HttpBackend final : public ScoringBackend {
public:
    // Throws Error(AuthFailure) when the API key variable is unset.
    explicit HttpBackend(const ScoringBackendConfig& config);
    ~HttpBackend() override;

    Completion complete(const CompletionRequest& request) override;

    // Request body sent for a prompt; exposed for wire-format tests.
    static std::string request_body(const CompletionRequest& request);
    // Extracts the first choice's content and optional token log-probs.
    static Completion parse_response_body(std::string_view body);

private:
    std::string scheme_host_port_;
    std::string path_;
    std::string api_key_;
    std::string api_key_env_;
};

// mock:// URLs build a MockBackend; http(s):// URLs an HttpBackend.
std::unique_ptr<ScoringBackend> make_backend(const ScoringBackendConfig& config);

// Stable 64-bit FNV-1a; used wherever a platform-independent hash is needed.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace rubricrank
