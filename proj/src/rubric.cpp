#include "rubricrank/rubric.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rubricrank/error.hpp"

namespace rubricrank {

namespace {

constexpr std::string_view kLengthControlAnchor = "your mission is to perform the following steps";

bool has_newline(std::string_view s) {
    return s.find('\n') != std::string_view::npos || s.find('\r') != std::string_view::npos;
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail_parse(ErrorCode code, const std::string& why, std::string_view completion) {
    throw ScoreParseError(code, why, std::string(completion));
}

// Same phrasing pattern for every BRIGHT StackExchange domain.
constexpr std::string_view kStackExchangeTail =
    "the document is relevant to the query if the critical concepts or theories discussed in "
    "the document can provide references for domain experts to draft an answer to the query.";

RelevanceRubric make_rubric(std::string query_type, std::string doc_type, std::string_view tail) {
    RelevanceRubric r;
    r.relevance_definition = "Given a query (" + query_type + ") and a document (" + doc_type +
                             "), " + std::string(tail);
    r.query_type = std::move(query_type);
    r.doc_type = std::move(doc_type);
    return r;
}

RelevanceRubric rubric_from_json(const nlohmann::json& j, const std::string& origin,
                                 const std::string& name) {
    if (!j.is_object()) {
        throw ParseError(origin, 0, "rubric '" + name + "' must be an object");
    }
    RelevanceRubric r;
    try {
        r.relevance_definition = j.at("relevance_definition").get<std::string>();
        r.query_type = j.at("query_type").get<std::string>();
        r.doc_type = j.at("doc_type").get<std::string>();
        if (j.contains("length_control")) r.length_control = j.at("length_control").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin, 0, "rubric '" + name + "': " + e.what());
    }
    try {
        r.validate();
    } catch (const Error& e) {
        throw ParseError(origin, 0, "rubric '" + name + "': " + e.what());
    }
    return r;
}

}  // namespace

void RelevanceRubric::validate() const {
    if (relevance_definition.empty()) {
        throw Error(ErrorCode::EmptyField, "relevance_definition is empty");
    }
    if (query_type.empty()) throw Error(ErrorCode::EmptyField, "query_type is empty");
    if (doc_type.empty()) throw Error(ErrorCode::EmptyField, "doc_type is empty");
    if (has_newline(query_type)) {
        throw Error(ErrorCode::InvalidArgument, "query_type contains a newline");
    }
    if (has_newline(doc_type)) {
        throw Error(ErrorCode::InvalidArgument, "doc_type contains a newline");
    }
}

void Trajectory::validate() const {
    if (score < kMinScore || score > kMaxScore) {
        throw Error(ErrorCode::OutOfRange, "trajectory score " + std::to_string(score) +
                                               " outside [0,100]");
    }
    if (weight && !(std::isfinite(*weight) && *weight > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "trajectory weight must be finite and > 0");
    }
}

PromptText render_prompt(const RelevanceRubric& rubric, std::string_view query,
                         std::string_view doc) {
    rubric.validate();
    if (query.empty()) throw Error(ErrorCode::EmptyField, "query text is empty");
    if (doc.empty()) throw Error(ErrorCode::EmptyField, "document text is empty");

    std::string_view tpl = prompt_template();
    std::string effective;
    if (rubric.length_control) {
        const auto at = tpl.find(kLengthControlAnchor);
        effective.reserve(tpl.size() + length_control_instruction().size());
        effective.append(tpl.substr(0, at + kLengthControlAnchor.size()));
        effective.append(length_control_instruction());
        effective.append(tpl.substr(at + kLengthControlAnchor.size()));
        tpl = effective;
    }

    const std::array<std::pair<std::string_view, std::string_view>, 5> slots{{
        {"{relevance_definition}", rubric.relevance_definition},
        {"{query_type}", rubric.query_type},
        {"{doc_type}", rubric.doc_type},
        {"{query}", query},
        {"{doc}", doc},
    }};

    std::string out;
    out.reserve(tpl.size() + rubric.relevance_definition.size() + query.size() + doc.size() + 64);
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        const auto brace = tpl.find('{', pos);
        if (brace == std::string_view::npos) {
            out.append(tpl.substr(pos));
            break;
        }
        out.append(tpl.substr(pos, brace - pos));
        bool matched = false;
        for (const auto& [placeholder, value] : slots) {
            if (tpl.compare(brace, placeholder.size(), placeholder) == 0) {
                out.append(value);
                pos = brace + placeholder.size();
                matched = true;
                break;
            }
        }
        if (!matched) {
            out.push_back('{');
            pos = brace + 1;
        }
    }
    return PromptText{std::move(out)};
}

int parse_score(std::string_view completion) {
    static constexpr std::string_view kOpen = "<score>";
    static constexpr std::string_view kClose = "</score>";

    const auto close = completion.rfind(kClose);
    if (close == std::string_view::npos) {
        fail_parse(ErrorCode::MissingScoreTag, "no </score> tag", completion);
    }
    const auto open = completion.substr(0, close).rfind(kOpen);
    if (open == std::string_view::npos) {
        fail_parse(ErrorCode::MissingScoreTag, "no <score> tag before </score>", completion);
    }

    std::string_view body =
        trim(completion.substr(open + kOpen.size(), close - open - kOpen.size()));
    if (body.size() >= 2 && body.front() == '[' && body.back() == ']') {
        body = trim(body.substr(1, body.size() - 2));
    }
    if (body.empty()) {
        fail_parse(ErrorCode::MalformedScore, "empty score tag", completion);
    }
    for (char c : body) {
        if (c < '0' || c > '9') {
            fail_parse(ErrorCode::MalformedScore,
                       "score content '" + std::string(body) + "' is not a bare integer",
                       completion);
        }
    }
    // Strip leading zeros so arbitrarily long digit runs cannot overflow.
    while (body.size() > 1 && body.front() == '0') body.remove_prefix(1);
    if (body.size() > 3) {
        fail_parse(ErrorCode::OutOfRange, "score " + std::string(body) + " exceeds 100",
                   completion);
    }
    int value = 0;
    for (char c : body) value = value * 10 + (c - '0');
    if (value > kMaxScore) {
        fail_parse(ErrorCode::OutOfRange, "score " + std::to_string(value) + " exceeds 100",
                   completion);
    }
    return value;
}

std::optional<int> try_parse_score(std::string_view completion) {
    try {
        return parse_score(completion);
    } catch (const ScoreParseError&) {
        return std::nullopt;
    }
}

RubricConfig RubricConfig::builtin() {
    RubricConfig cfg;
    // BRIGHT
    for (const auto& [name, label] : std::array<std::pair<const char*, const char*>, 7>{{
             {"biology", "biology post"},
             {"earth_science", "earth science post"},
             {"economics", "economics post"},
             {"psychology", "psychology post"},
             {"robotics", "robotics post"},
             {"stackoverflow", "Stack Overflow post"},
             {"sustainable_living", "sustainable living post"},
         }}) {
        cfg.set(name, make_rubric(label, "passage", kStackExchangeTail));
    }
    cfg.set("leetcode",
            make_rubric("LeetCode problem", "coding problem solution",
                        "the document is relevant to the query if the underlying algorithms or "
                        "data structures used in the document can provide helpful insights for "
                        "solving the problem in the query."));
    cfg.set("pony", make_rubric("Pony coding instruction", "Pony documentation passage",
                                "the document is relevant to the query if the Pony syntax "
                                "described in the document is necessary for beginners with no "
                                "prior knowledge of Pony to complete the coding instruction in "
                                "the query."));
    constexpr std::string_view kTheoremTail =
        "the document is relevant to the query if the theorems used in the document can provide "
        "helpful insights for solving the problem in the query.";
    cfg.set("aops", make_rubric("math problem", "math problem solution", kTheoremTail));
    cfg.set("theoremqa_questions", make_rubric("math problem", "math problem solution", kTheoremTail));
    cfg.set("theoremqa_theorems",
            make_rubric("math problem", "math-related passage",
                        "the document is relevant to the query if the theorem described in the "
                        "document can help solve the problem in the query."));

    // BEIR
    cfg.set("trec-covid", make_rubric("COVID-19 related query", "document",
                                      "the document is relevant to the query if the document "
                                      "answers the query."));
    cfg.set("dbpedia", make_rubric("query", "entity description from DBpedia",
                                   "the document is relevant to the query if the entity described "
                                   "in the document matches the query."));
    cfg.set("scifact", make_rubric("scientific claim", "document",
                                   "the document is relevant to the query if the document provides "
                                   "evidence supporting or refuting the scientific claim."));
    cfg.set("nfcorpus", make_rubric("question", "document",
                                    "the document is relevant to the query if the document can "
                                    "best answer the question."));
    cfg.set("signal-1m", make_rubric("news event or topic", "news headline or summary",
                                     "the document is relevant to the query if it reports on, "
                                     "summarizes, or directly relates to the same news event or "
                                     "topic described in the query."));
    cfg.set("robust04", make_rubric("information need", "news or government document",
                                    "the document is relevant to the query if it contains "
                                    "information that satisfies the intent or topic described in "
                                    "the query, even if phrased differently."));
    cfg.set("trec-news", make_rubric("contemporary news topic or event",
                                     "news article from The Washington Post",
                                     "the document is relevant to the query if it discusses, "
                                     "explains, or provides factual coverage of the specific event "
                                     "or topic mentioned in the query."));
    return cfg;
}

RubricConfig RubricConfig::from_json_text(std::string_view json_text, const std::string& origin,
                                          bool merge_with_builtin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(origin, 0, e.what());
    }
    if (!j.is_object()) throw ParseError(origin, 0, "rubric config must be a JSON object");

    RubricConfig cfg = merge_with_builtin ? builtin() : RubricConfig{};
    for (const auto& [name, entry] : j.items()) {
        cfg.set(name, rubric_from_json(entry, origin, name));
    }
    return cfg;
}

RubricConfig RubricConfig::load(const std::string& path, bool merge_with_builtin) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open rubric config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str(), path, merge_with_builtin);
}

void RubricConfig::set(const std::string& dataset, RelevanceRubric rubric) {
    rubric.validate();
    entries_[dataset] = std::move(rubric);
}

bool RubricConfig::contains(const std::string& dataset) const {
    return entries_.count(dataset) > 0;
}

const RelevanceRubric& RubricConfig::at(const std::string& dataset) const {
    auto it = entries_.find(dataset);
    if (it == entries_.end()) {
        throw Error(ErrorCode::UnknownDataset, "no rubric configured for dataset '" + dataset + "'");
    }
    return it->second;
}

std::string RubricConfig::to_json_text() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [name, r] : entries_) {
        j[name] = {{"relevance_definition", r.relevance_definition},
                   {"query_type", r.query_type},
                   {"doc_type", r.doc_type},
                   {"length_control", r.length_control}};
    }
    return j.dump(2) + "\n";
}

}  // namespace rubricrank
