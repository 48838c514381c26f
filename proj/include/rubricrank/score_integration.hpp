#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "rubricrank/rubric.hpp"

namespace rubricrank {

enum class Weighting { uniform, likelihood };

std::string_view to_string(Weighting w);
// Accepts "uniform" / "likelihood"; throws Error(InvalidArgument) otherwise.
Weighting parse_weighting(std::string_view text);

struct IntegratedScore {
    double value = 0.0;
    std::size_t k = 0;
    Weighting weighting = Weighting::uniform;

    bool operator==(const IntegratedScore&) const = default;
};

// Weighted mean of the trajectory scores. Uniform weighting uses exact
// integer summation; likelihood weighting uses each trajectory's weight.
// Errors: EmptyGroup, MissingWeights.
IntegratedScore integrate_scores(std::span<const Trajectory> trajectories, Weighting weighting);

// Geometric-mean per-token probability: exp(mean token log-likelihood).
// Throws Error(InvalidArgument) on an empty or non-finite sequence.
double likelihood_weight(std::span<const double> token_logprobs);

struct SftSelection {
    std::size_t index = 0;
    Trajectory trajectory;
    IntegratedScore integrated;
};

// Picks the trajectory whose score is closest to the uniform mean; the
// earliest index wins ties. Error: EmptyGroup.
SftSelection select_sft_trajectory(std::span<const Trajectory> trajectories);

struct SftTuple {
    std::string query_id;
    std::string doc_id;
    PromptText prompt;
    Trajectory trajectory;
    IntegratedScore integrated;
    std::size_t discarded = 0;  // teacher completions dropped for unparseable scores
};

// True when tuple.trajectory.score is at minimal |s - mean| among scores.
bool satisfies_closest_to_mean(int chosen, std::span<const int> scores);

}  // namespace rubricrank
