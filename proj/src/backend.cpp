#include "rubricrank/backend.hpp"

#include "rubricrank/error.hpp"

namespace rubricrank {

double ScoringBackendConfig::effective_temperature() const {
    if (temperature) return *temperature;
    return samples_per_pair > 1 ? 1.0 : 0.0;
}

bool ScoringBackendConfig::is_mock() const {
    return endpoint_url.rfind(kMockScheme, 0) == 0;
}

void ScoringBackendConfig::validate() const {
    auto bad = [](const std::string& field, const std::string& why) {
        throw Error(ErrorCode::InvalidArgument, field + ": " + why);
    };
    if (endpoint_url.empty()) bad("endpoint_url", "must not be empty");
    if (!is_mock() && endpoint_url.rfind("http://", 0) != 0 &&
        endpoint_url.rfind("https://", 0) != 0) {
        bad("endpoint_url", "expected mock://, http:// or https://, got '" + endpoint_url + "'");
    }
    if (samples_per_pair < 1) bad("samples_per_pair", "must be >= 1");
    if (concurrency_limit < 1) bad("concurrency_limit", "must be >= 1");
    if (temperature && !(*temperature >= 0.0)) bad("temperature", "must be >= 0");
    if (request_timeout.count() <= 0) bad("request_timeout", "must be positive");
    if (!is_mock() && model_name.empty()) bad("model_name", "must not be empty");
}

std::unique_ptr<ScoringBackend> make_backend(const ScoringBackendConfig& config) {
    config.validate();
    if (config.is_mock()) {
        return std::make_unique<MockBackend>(MockOptions::from_url(config.endpoint_url));
    }
    return std::make_unique<HttpBackend>(config);
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace rubricrank
