#include "rubricrank/reward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>

#include "rubricrank/error.hpp"
#include "rubricrank/rubric.hpp"

namespace rubricrank {

namespace {

// |K*s_i - sum| == K * |s_i - mean|; integer arithmetic keeps ties exact.
std::vector<std::int64_t> scaled_deviations(std::span<const int> scores, std::int64_t& sum) {
    sum = 0;
    for (int s : scores) sum += s;
    const auto k = static_cast<std::int64_t>(scores.size());
    std::vector<std::int64_t> dev;
    dev.reserve(scores.size());
    for (int s : scores) dev.push_back(std::llabs(k * s - sum));
    return dev;
}

std::vector<double> spread(const RolloutGroup& group, const std::vector<double>& valid,
                           double failed_value) {
    std::vector<double> out;
    out.reserve(group.trajectories.size());
    std::size_t next = 0;
    for (const auto& r : group.trajectories) {
        out.push_back(r.score ? valid[next++] : failed_value);
    }
    return out;
}

}  // namespace

std::string_view to_string(Label label) {
    return label == Label::positive ? "positive" : "negative";
}

Label parse_label(std::string_view text) {
    if (text == "positive") return Label::positive;
    if (text == "negative") return Label::negative;
    throw Error(ErrorCode::InvalidArgument, "unknown label '" + std::string(text) + "'");
}

void RolloutGroup::validate() const {
    if (trajectories.empty()) {
        throw Error(ErrorCode::EmptyGroup,
                    "rollout group for (" + query_id + ", " + doc_id + ") is empty");
    }
    for (const auto& r : trajectories) {
        if (r.score && (*r.score < kMinScore || *r.score > kMaxScore)) {
            throw Error(ErrorCode::OutOfRange, "rollout score " + std::to_string(*r.score) +
                                                   " outside [0,100]");
        }
    }
}

std::vector<int> RolloutGroup::valid_scores() const {
    std::vector<int> out;
    out.reserve(trajectories.size());
    for (const auto& r : trajectories) {
        if (r.score) out.push_back(*r.score);
    }
    return out;
}

void RewardConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in (0,1), got " + std::to_string(alpha));
    }
    if (!(std::isfinite(tau) && tau >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "tau must be a finite value >= 0");
    }
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "rollout count n must be >= 1");
}

bool intra_pruned(std::span<const int> scores, double tau) {
    if (scores.empty()) throw Error(ErrorCode::EmptyGroup, "intra reward over an empty group");
    std::int64_t sum = 0;
    const auto dev = scaled_deviations(scores, sum);
    const auto max_dev = *std::max_element(dev.begin(), dev.end());
    // max |s_i - mean| < tau  <=>  max |K*s_i - sum| < K*tau
    return static_cast<double>(max_dev) < tau * static_cast<double>(scores.size());
}

std::vector<double> intra_reward(std::span<const int> scores, double tau) {
    std::vector<double> out(scores.size(), 0.0);
    if (intra_pruned(scores, tau)) return out;

    std::int64_t sum = 0;
    const auto dev = scaled_deviations(scores, sum);
    const auto [lo, hi] = std::minmax_element(dev.begin(), dev.end());
    if (*lo == *hi) return out;  // argmin and argmax coincide

    for (std::size_t i = 0; i < dev.size(); ++i) {
        if (dev[i] == *lo) out[i] = 1.0;
        else if (dev[i] == *hi) out[i] = -1.0;
    }
    return out;
}

std::vector<double> intra_reward(const RolloutGroup& group, double tau) {
    group.validate();
    const auto scores = group.valid_scores();
    if (scores.empty()) return std::vector<double>(group.trajectories.size(), kFormatFailureReward);
    return spread(group, intra_reward(scores, tau), kFormatFailureReward);
}

InterRewards inter_reward(std::span<const int> positive, std::span<const int> negative) {
    if (positive.empty() || negative.empty()) {
        throw Error(ErrorCode::EmptyGroup, "inter reward needs non-empty positive and negative groups");
    }
    InterRewards out;
    out.positive.reserve(positive.size());
    out.negative.reserve(negative.size());
    const double n_neg = static_cast<double>(negative.size());
    const double n_pos = static_cast<double>(positive.size());
    for (int p : positive) {
        std::size_t wins = 0;
        for (int n : negative) wins += p > n ? 1 : 0;
        out.positive.push_back(static_cast<double>(wins) / n_neg);
    }
    for (int n : negative) {
        std::size_t wins = 0;
        for (int p : positive) wins += n < p ? 1 : 0;
        out.negative.push_back(static_cast<double>(wins) / n_pos);
    }
    return out;
}

InterRewards inter_reward(const RolloutGroup& positive, const RolloutGroup& negative) {
    positive.validate();
    negative.validate();
    const auto pos = positive.valid_scores();
    const auto neg = negative.valid_scores();
    if (pos.empty() || neg.empty()) {
        // Nothing to compare against: every trajectory earns 0.
        return InterRewards{std::vector<double>(positive.trajectories.size(), 0.0),
                            std::vector<double>(negative.trajectories.size(), 0.0)};
    }
    const auto valid = inter_reward(pos, neg);
    return InterRewards{spread(positive, valid.positive, 0.0), spread(negative, valid.negative, 0.0)};
}

double composite_reward(double intra, double inter, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in (0,1), got " + std::to_string(alpha));
    }
    return alpha * intra + (1.0 - alpha) * inter;
}

SampleRewards compute_sample_rewards(const RolloutGroup& positive, const RolloutGroup& negative,
                                     const RewardConfig& config) {
    config.validate();
    if (positive.label != Label::positive || negative.label != Label::negative) {
        throw Error(ErrorCode::InvalidArgument, "group labels must be (positive, negative)");
    }
    const auto inter = inter_reward(positive, negative);

    auto build = [&](const RolloutGroup& group, const std::vector<double>& inter_values) {
        RewardRecord rec;
        rec.query_id = group.query_id;
        rec.doc_id = group.doc_id;
        rec.label = group.label;
        rec.intra = intra_reward(group, config.tau);
        rec.inter = inter_values;
        const auto scores = group.valid_scores();
        rec.intra_pruned = !scores.empty() && intra_pruned(scores, config.tau);
        rec.composite.reserve(group.trajectories.size());
        for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
            rec.composite.push_back(group.trajectories[i].score
                                        ? composite_reward(rec.intra[i], rec.inter[i], config.alpha)
                                        : kFormatFailureReward);
        }
        return rec;
    };
    return SampleRewards{build(positive, inter.positive), build(negative, inter.negative)};
}

}  // namespace rubricrank
