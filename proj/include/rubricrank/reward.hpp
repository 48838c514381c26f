#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rubricrank {

enum class Label { positive, negative };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

// One rolled-out completion. score is empty when the completion could not be
// parsed; such rollouts are penalised and excluded from every statistic.
struct Rollout {
    std::string text;
    std::optional<int> score;

    bool operator==(const Rollout&) const = default;
};

struct RolloutGroup {
    std::string query_id;
    std::string doc_id;
    Label label = Label::positive;
    std::vector<Rollout> trajectories;

    // Non-empty, every present score in [0,100].
    void validate() const;
    std::vector<int> valid_scores() const;
};

struct RewardConfig {
    double alpha = 0.75;
    double tau = 20.0;
    std::size_t n = 8;

    // Throws Error(AlphaOutOfRange) or Error(InvalidArgument).
    void validate() const;
};

// Reward assigned to a rollout whose score could not be parsed.
inline constexpr double kFormatFailureReward = -1.0;

struct RewardRecord {
    std::string query_id;
    std::string doc_id;
    Label label = Label::positive;
    std::vector<double> intra;
    std::vector<double> inter;
    std::vector<double> composite;
    bool intra_pruned = false;
};

struct InterRewards {
    std::vector<double> positive;
    std::vector<double> negative;
};

struct SampleRewards {
    RewardRecord positive;
    RewardRecord negative;
};

// Ternary agreement reward over a set of parsed scores. All zeros when the
// largest deviation from the mean is below tau, or when every score is
// equidistant from the mean. Error: EmptyGroup.
std::vector<double> intra_reward(std::span<const int> scores, double tau);

// True when the tau threshold suppresses the group.
bool intra_pruned(std::span<const int> scores, double tau);

// Group form: unparseable rollouts receive kFormatFailureReward.
std::vector<double> intra_reward(const RolloutGroup& group, double tau);

// Fraction of opposite-group scores each trajectory orders correctly (strict).
// Error: EmptyGroup.
InterRewards inter_reward(std::span<const int> positive, std::span<const int> negative);

// Group form: unparseable rollouts receive 0 here and are excluded from the
// opposite group's denominator.
InterRewards inter_reward(const RolloutGroup& positive, const RolloutGroup& negative);

// alpha * intra + (1 - alpha) * inter. Error: AlphaOutOfRange.
double composite_reward(double intra, double inter, double alpha);

// Full per-trajectory reward computation for one (q, d+, d-) sample.
SampleRewards compute_sample_rewards(const RolloutGroup& positive, const RolloutGroup& negative,
                                     const RewardConfig& config);

}  // namespace rubricrank
