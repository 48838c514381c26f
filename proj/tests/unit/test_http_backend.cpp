#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "rubricrank/backend.hpp"
#include "rubricrank/error.hpp"
#include "rubricrank/orchestrator.hpp"

using namespace rubricrank;

namespace {

// Local OpenAI-style endpoint whose behaviour is set per test.
class FakeServer {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    explicit FakeServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            hits_.fetch_add(1);
            handler_(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int hits() const { return hits_.load(); }

private:
    Handler handler_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> hits_{0};
};

std::string reply(const std::string& content, bool logprobs = false) {
    nlohmann::json choice{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}};
    if (logprobs) {
        choice["logprobs"] = {{"content", {{{"token", "a"}, {"logprob", -0.5}}, {{"token", "b"}, {"logprob", -1.5}}}}};
    }
    return nlohmann::json{{"id", "x"}, {"choices", {choice}}}.dump();
}

ScoringBackendConfig config_for(const FakeServer& s) {
    ::setenv("RUBRICRANK_API_KEY", "sk-test", 1);
    ScoringBackendConfig c;
    c.endpoint_url = s.url();
    c.model_name = "scorer-7b";
    c.request_timeout = std::chrono::milliseconds(2000);
    return c;
}

CompletionRequest request(std::string_view prompt = "rate this") {  // prompt must outlive the request
    CompletionRequest r;
    r.prompt = prompt;
    r.model = "scorer-7b";
    r.temperature = 0.0;
    r.timeout = std::chrono::milliseconds(2000);
    return r;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("request body follows the chat-completions shape") {
    auto r = request("hello \"world\"");
    r.temperature = 1.0;
    r.want_logprobs = true;
    const auto j = nlohmann::json::parse(HttpBackend::request_body(r));
    CHECK(j["model"] == "scorer-7b");
    CHECK(j["messages"][0]["role"] == "user");
    CHECK(j["messages"][0]["content"] == "hello \"world\"");
    CHECK(j["temperature"] == 1.0);
    CHECK(j["logprobs"] == true);
}

TEST_CASE("response parsing") {
    CHECK(HttpBackend::parse_response_body(reply("<score>5</score>")).text == "<score>5</score>");
    const auto c = HttpBackend::parse_response_body(reply("x", true));
    REQUIRE(c.token_logprobs.has_value());
    CHECK(*c.token_logprobs == std::vector<double>{-0.5, -1.5});
    CHECK(code_of([] { HttpBackend::parse_response_body("{\"choices\": []}"); }) == ErrorCode::BackendTransient);
    CHECK(code_of([] { HttpBackend::parse_response_body("not json"); }) == ErrorCode::BackendTransient);
}

TEST_CASE("successful call sends bearer token and prompt") {
    std::string auth, body, ctype;
    FakeServer s([&](const httplib::Request& req, httplib::Response& res) {
        auth = req.get_header_value("Authorization");
        ctype = req.get_header_value("Content-Type");
        body = req.body;
        res.set_content(reply("analysis\n<score>\n77\n</score>"), "application/json");
    });
    HttpBackend b(config_for(s));
    const auto c = b.complete(request("the prompt"));
    CHECK(c.text == "analysis\n<score>\n77\n</score>");
    CHECK(auth == "Bearer sk-test");
    CHECK(ctype == "application/json");
    CHECK(nlohmann::json::parse(body)["messages"][0]["content"] == "the prompt");
}

TEST_CASE("status codes map to error classes") {
    int status = 200;
    FakeServer s([&](const httplib::Request&, httplib::Response& res) {
        res.status = status;
        res.set_content(status == 200 ? "{broken" : "nope", "application/json");
    });
    HttpBackend b(config_for(s));
    const std::vector<std::pair<int, ErrorCode>> cases{
        {401, ErrorCode::AuthFailure},      {403, ErrorCode::AuthFailure},
        {429, ErrorCode::BackendTransient}, {500, ErrorCode::BackendTransient},
        {503, ErrorCode::BackendTransient}, {408, ErrorCode::BackendTransient},
        {400, ErrorCode::BackendRejected},  {404, ErrorCode::BackendRejected},
        {200, ErrorCode::BackendTransient},  // malformed JSON body
    };
    for (const auto& [code, expected] : cases) {
        CAPTURE(code);
        status = code;
        CHECK(code_of([&] { b.complete(request()); }) == expected);
    }
    status = 401;
    try {
        b.complete(request());
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("RUBRICRANK_API_KEY") != std::string::npos);
    }
}

TEST_CASE("slow responses time out") {
    FakeServer s([](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        res.set_content(reply("<score>1</score>"), "application/json");
    });
    HttpBackend b(config_for(s));
    auto r = request();
    r.timeout = std::chrono::milliseconds(150);
    CHECK(code_of([&] { b.complete(r); }) == ErrorCode::Timeout);
}

TEST_CASE("nothing listening is unreachable") {
    // Bind an ephemeral port and release it without listening.
    int port = 0;
    {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
        socklen_t len = sizeof addr;
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
        port = ntohs(addr.sin_port);
        ::close(fd);
    }
    ::setenv("RUBRICRANK_API_KEY", "sk-test", 1);
    ScoringBackendConfig c;
    c.endpoint_url = "http://127.0.0.1:" + std::to_string(port);
    HttpBackend b(c);
    CHECK(code_of([&] { b.complete(request()); }) == ErrorCode::BackendUnreachable);
}

TEST_CASE("orchestrator retries transient failures against a live endpoint") {
    std::atomic<int> n{0};
    FakeServer s([&](const httplib::Request&, httplib::Response& res) {
        if (n.fetch_add(1) % 2 == 0) {
            res.status = 503;
            return;
        }
        res.set_content(reply("<score>64</score>"), "application/json");
    });
    auto config = config_for(s);
    config.concurrency_limit = 1;
    config.max_retries_per_sample = 1;
    HttpBackend b(config);
    const auto batch = sample_completions(b, PromptText{"p"}, 3, config, "q", "d");
    CHECK(batch.trajectories().size() == 3);
    CHECK(batch.failure_count == 3);
    CHECK(batch.backend_calls == 6);
    for (const auto& t : batch.trajectories()) CHECK(t.score == 64);
}

TEST_CASE("auth failure aborts the query") {
    FakeServer s([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
    auto config = config_for(s);
    HttpBackend b(config);
    const std::vector<CandidateDoc> docs{{"d1", "one"}, {"d2", "two"}};
    try {
        rerank(b, "q", "query", docs, RelevanceRubric{"def", "qt", "dt", false}, config);
        FAIL("expected QueryAbortedError");
    } catch (const QueryAbortedError& e) {
        CHECK(e.cause() == ErrorCode::AuthFailure);
        CHECK(e.query_id() == "q");
        CHECK(e.total_pairs() == 2);
        CHECK(e.partial().empty());
    }
}
