#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace rubricrank {

// Task-specific relevance definition plus the type labels that are spliced
// into the scoring prompt.
struct RelevanceRubric {
    std::string relevance_definition;
    std::string query_type;
    std::string doc_type;
    bool length_control = false;

    // Throws Error(EmptyField) / Error(InvalidArgument) when an invariant fails.
    void validate() const;

    bool operator==(const RelevanceRubric&) const = default;
};

struct PromptText {
    std::string text;

    bool operator==(const PromptText&) const = default;
};

// One sampled completion and the score parsed out of it.
struct Trajectory {
    std::string text;
    int score = 0;
    std::optional<double> weight;

    void validate() const;

    bool operator==(const Trajectory&) const = default;
};

inline constexpr int kMinScore = 0;
inline constexpr int kMaxScore = 100;

// Raw prompt template with {relevance_definition}, {query_type}, {doc_type},
// {query} and {doc} placeholders.
std::string_view prompt_template();

// The sentence injected when RelevanceRubric::length_control is set.
std::string_view length_control_instruction();

// Substitutes every placeholder in a single left-to-right pass; substituted
// values are never rescanned for placeholders.
PromptText render_prompt(const RelevanceRubric& rubric, std::string_view query,
                         std::string_view doc);

// Extracts the integer in the last <score>...</score> block. Accepts
// surrounding whitespace and one pair of square brackets around the digits.
// Throws ScoreParseError with MissingScoreTag, MalformedScore or OutOfRange.
int parse_score(std::string_view completion);

// Non-throwing variant; nullopt on any parse failure.
std::optional<int> try_parse_score(std::string_view completion);

// Dataset name -> rubric. Built-ins cover the BRIGHT and BEIR task families.
class RubricConfig {
public:
    RubricConfig() = default;

    static RubricConfig builtin();
    // JSON object keyed by dataset name. Entries override built-ins when
    // merge_with_builtin is true.
    static RubricConfig load(const std::string& path, bool merge_with_builtin = true);
    static RubricConfig from_json_text(std::string_view json_text, const std::string& origin,
                                       bool merge_with_builtin = true);

    void set(const std::string& dataset, RelevanceRubric rubric);
    bool contains(const std::string& dataset) const;
    // Throws Error(UnknownDataset) naming the dataset.
    const RelevanceRubric& at(const std::string& dataset) const;

    const std::map<std::string, RelevanceRubric>& entries() const { return entries_; }
    std::string to_json_text() const;

private:
    std::map<std::string, RelevanceRubric> entries_;
};

}  // namespace rubricrank
