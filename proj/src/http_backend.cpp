#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "rubricrank/backend.hpp"
#include "rubricrank/error.hpp"

namespace rubricrank {

namespace {

constexpr std::string_view kDefaultPath = "/v1/chat/completions";

}  // namespace

HttpBackend::HttpBackend(const ScoringBackendConfig& config) : api_key_env_(config.api_key_env) {
    const std::string& url = config.endpoint_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "endpoint_url: missing scheme in '" + url + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? std::string(kDefaultPath) : url.substr(path_start);

    const char* key = std::getenv(api_key_env_.c_str());
    if (key == nullptr || *key == '\0') {
        throw Error(ErrorCode::AuthFailure,
                    "environment variable " + api_key_env_ + " is not set (required for " + url + ")");
    }
    api_key_ = key;
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::request_body(const CompletionRequest& request) {
    nlohmann::ordered_json body = {
        {"model", request.model},
        {"messages", nlohmann::ordered_json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.temperature},
        {"n", 1},
    };
    if (request.want_logprobs) body["logprobs"] = true;
    return body.dump();
}

Completion HttpBackend::parse_response_body(std::string_view body) {
    Completion out;
    try {
        const auto j = nlohmann::json::parse(body);
        const auto& choice = j.at("choices").at(0);
        out.text = choice.at("message").at("content").get<std::string>();
        if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
            choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array()) {
            std::vector<double> lps;
            for (const auto& tok : choice["logprobs"]["content"]) {
                lps.push_back(tok.at("logprob").get<double>());
            }
            if (!lps.empty()) out.token_logprobs = std::move(lps);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BackendTransient, std::string("malformed completion response: ") + e.what());
    }
    return out;
}

Completion HttpBackend::complete(const CompletionRequest& request) {
    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_bearer_token_auth(api_key_);

    auto res = client.Post(path_, request_body(request), "application/json");
    if (!res) {
        const auto err = res.error();
        const std::string what = httplib::to_string(err);
        if (err == httplib::Error::Read || err == httplib::Error::Write ||
            err == httplib::Error::ConnectionTimeout) {
            throw Error(ErrorCode::Timeout, scheme_host_port_ + path_ + ": " + what);
        }
        throw Error(ErrorCode::BackendUnreachable, scheme_host_port_ + path_ + ": " + what);
    }
    if (res->status == 401 || res->status == 403) {
        throw Error(ErrorCode::AuthFailure, "backend rejected the key in " + api_key_env_ +
                                                " (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 408 || res->status == 429 || res->status >= 500) {
        throw Error(ErrorCode::BackendTransient, "HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::BackendRejected,
                    "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    return parse_response_body(res->body);
}

}  // namespace rubricrank
