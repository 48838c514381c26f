#include "rubricrank/score_integration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>

#include "rubricrank/error.hpp"

namespace rubricrank {

std::string_view to_string(Weighting w) {
    return w == Weighting::uniform ? "uniform" : "likelihood";
}

Weighting parse_weighting(std::string_view text) {
    if (text == "uniform") return Weighting::uniform;
    if (text == "likelihood") return Weighting::likelihood;
    throw Error(ErrorCode::InvalidArgument,
                "unknown weighting '" + std::string(text) + "' (expected uniform|likelihood)");
}

IntegratedScore integrate_scores(std::span<const Trajectory> trajectories, Weighting weighting) {
    if (trajectories.empty()) {
        throw Error(ErrorCode::EmptyGroup, "cannot integrate an empty trajectory group");
    }
    for (const auto& t : trajectories) t.validate();

    IntegratedScore out;
    out.k = trajectories.size();
    out.weighting = weighting;

    if (weighting == Weighting::uniform) {
        std::int64_t sum = 0;
        for (const auto& t : trajectories) sum += t.score;
        out.value = static_cast<double>(sum) / static_cast<double>(trajectories.size());
        return out;
    }

    // Neumaier-compensated sums keep the ratio within a few ulps.
    double num = 0.0, num_c = 0.0, den = 0.0, den_c = 0.0;
    auto add = [](double& s, double& c, double x) {
        const double t = s + x;
        c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
        s = t;
    };
    int lo = kMaxScore, hi = kMinScore;
    for (const auto& t : trajectories) {
        if (!t.weight) {
            throw Error(ErrorCode::MissingWeights,
                        "likelihood weighting requires a weight on every trajectory");
        }
        add(num, num_c, *t.weight * t.score);
        add(den, den_c, *t.weight);
        lo = std::min(lo, t.score);
        hi = std::max(hi, t.score);
    }
    out.value = std::clamp((num + num_c) / (den + den_c), double(lo), double(hi));
    return out;
}

double likelihood_weight(std::span<const double> token_logprobs) {
    if (token_logprobs.empty()) {
        throw Error(ErrorCode::InvalidArgument, "no token log-likelihoods");
    }
    double sum = 0.0;
    for (double lp : token_logprobs) {
        if (!std::isfinite(lp)) {
            throw Error(ErrorCode::InvalidArgument, "non-finite token log-likelihood");
        }
        sum += lp;
    }
    const double w = std::exp(sum / static_cast<double>(token_logprobs.size()));
    // exp of a very negative mean underflows; keep the weight strictly positive.
    return std::max(w, std::numeric_limits<double>::min());
}

SftSelection select_sft_trajectory(std::span<const Trajectory> trajectories) {
    const IntegratedScore integrated = integrate_scores(trajectories, Weighting::uniform);

    // Compare |K*s_i - sum| in integers so ties are exact.
    const auto k = static_cast<std::int64_t>(trajectories.size());
    std::int64_t sum = 0;
    for (const auto& t : trajectories) sum += t.score;

    std::size_t best = 0;
    std::int64_t best_dist = std::llabs(k * trajectories[0].score - sum);
    for (std::size_t i = 1; i < trajectories.size(); ++i) {
        const std::int64_t d = std::llabs(k * trajectories[i].score - sum);
        if (d < best_dist) {
            best = i;
            best_dist = d;
        }
    }
    return SftSelection{best, trajectories[best], integrated};
}

bool satisfies_closest_to_mean(int chosen, std::span<const int> scores) {
    if (scores.empty()) return false;
    const auto k = static_cast<std::int64_t>(scores.size());
    std::int64_t sum = 0;
    for (int s : scores) sum += s;
    const std::int64_t mine = std::llabs(k * chosen - sum);
    bool present = false;
    for (int s : scores) {
        if (std::llabs(k * s - sum) < mine) return false;
        present = present || s == chosen;
    }
    return present;
}

}  // namespace rubricrank
