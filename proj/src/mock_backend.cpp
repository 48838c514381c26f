#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "rubricrank/backend.hpp"
#include "rubricrank/error.hpp"

namespace rubricrank {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in [0,1) from the top 53 bits; unlike std::uniform_real_distribution
// this is identical on every standard library.
double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
    const double u1 = 1.0 - unit(rng);  // (0,1]
    const double u2 = unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double parse_number(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw Error(ErrorCode::InvalidArgument,
                    "mock option '" + std::string(key) + "' is not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::string malformed_completion(std::uint64_t kind) {
    switch (kind % 4) {
        case 0: return "1. Query Analysis: unclear.\n2. Document Analysis: unclear.\nNo verdict.";
        case 1: return "3. Relevance Annotation: borderline.\n<score>\n72.5\n</score>";
        case 2: return "3. Relevance Annotation: overwhelming.\n<score>\n150\n</score>";
        default: return "3. Relevance Annotation: cut off.\n<score>\n7";
    }
}

}  // namespace

MockOptions MockOptions::from_url(std::string_view url) {
    if (url.rfind(kMockScheme, 0) != 0) {
        throw Error(ErrorCode::InvalidArgument, "not a mock URL: '" + std::string(url) + "'");
    }
    MockOptions opts;
    const auto q = url.find('?');
    if (q == std::string_view::npos) return opts;

    std::string_view rest = url.substr(q + 1);
    while (!rest.empty()) {
        const auto amp = rest.find('&');
        const std::string_view pair = rest.substr(0, amp);
        rest = amp == std::string_view::npos ? std::string_view{} : rest.substr(amp + 1);
        if (pair.empty()) continue;
        const auto eq = pair.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorCode::InvalidArgument, "mock option without value: '" + std::string(pair) + "'");
        }
        const auto key = pair.substr(0, eq);
        const auto value = pair.substr(eq + 1);
        if (key == "seed") {
            std::uint64_t seed = 0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
            if (ec != std::errc{} || ptr != value.data() + value.size()) {
                throw Error(ErrorCode::InvalidArgument, "mock seed must be an unsigned integer");
            }
            opts.seed = seed;
        } else if (key == "noise") {
            opts.noise_sd = parse_number(key, value);
        } else if (key == "pos") {
            opts.positive_center = parse_number(key, value);
        } else if (key == "neg") {
            opts.negative_center = parse_number(key, value);
        } else if (key == "step") {
            opts.grade_step = parse_number(key, value);
        } else if (key == "fail") {
            opts.failure_rate = parse_number(key, value);
        } else {
            throw Error(ErrorCode::InvalidArgument, "unknown mock option '" + std::string(key) + "'");
        }
    }
    if (opts.noise_sd < 0.0) throw Error(ErrorCode::InvalidArgument, "mock noise must be >= 0");
    if (opts.failure_rate < 0.0 || opts.failure_rate > 1.0) {
        throw Error(ErrorCode::InvalidArgument, "mock fail rate must lie in [0,1]");
    }
    return opts;
}

double MockOptions::center_for_relevance(int relevance) const {
    if (relevance <= 0) return negative_center;
    return std::min(100.0, positive_center + grade_step * (relevance - 1));
}

MockBackend::MockBackend(MockOptions options) : options_(options) {}

void MockBackend::set_center(const std::string& query_id, const std::string& doc_id, double center) {
    centers_[{query_id, doc_id}] = center;
}

void MockBackend::set_relevance(const std::string& query_id, const std::string& doc_id,
                                int relevance) {
    set_center(query_id, doc_id, options_.center_for_relevance(relevance));
}

double MockBackend::center(const std::string& query_id, const std::string& doc_id) const {
    auto it = centers_.find({query_id, doc_id});
    return it == centers_.end() ? options_.negative_center : it->second;
}

Completion MockBackend::complete(const CompletionRequest& request) {
    const auto& key = request.key;
    std::uint64_t h = fnv1a64(key.query_id);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(key.doc_id, h);
    h = splitmix64(h ^ splitmix64(options_.seed));
    h = splitmix64(h ^ (key.sample_index * 0x9e3779b97f4a7c15ULL));
    h = splitmix64(h ^ (key.attempt + 1));
    std::mt19937_64 rng(h);

    Completion out;
    if (options_.failure_rate > 0.0 && unit(rng) < options_.failure_rate) {
        out.text = malformed_completion(rng());
        return out;
    }

    const double mu = center(key.query_id, key.doc_id);
    const double raw = mu + options_.noise_sd * standard_normal(rng);
    const int score = static_cast<int>(std::clamp(std::lround(raw), 0L, 100L));

    std::ostringstream text;
    text << "1. Query Analysis: The query " << key.query_id << " asks for specific information.\n"
         << "2. Document Analysis: Document " << key.doc_id << " is checked against that need.\n"
         << "3. Relevance Annotation: Judgement from sample " << key.sample_index << ".\n"
         << "<score>\n" << score << "\n</score>";
    out.text = text.str();

    if (request.want_logprobs) {
        const double lp = -0.05 - std::abs(score - mu) / 200.0;
        out.token_logprobs = std::vector<double>(24, lp);
    }
    return out;
}

}  // namespace rubricrank
