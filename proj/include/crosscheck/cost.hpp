#pragma once

// FLOP-proxy accounting for verifier calls. Per-token cost is taken as
// 2N for a model with N non-embedding parameters, so the extra cost of
// cross-checking a fraction p of questions relative to self-checking is
// p * N_verifier / N_target.

#include "crosscheck/core.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace crosscheck::cost {

struct ModelCostProfile {
    std::string name;
    double n_params = 0.0;  // non-embedding parameters
    double context_length = 0.0;

    void validate() const;
};

double relative_additional_cost(double p, const ModelCostProfile& target,
                                const ModelCostProfile& verifier);

/// Ratio of the entailment-scoring term to the verifier-sampling term of
/// the per-question cross-check cost: m * (l_a / l_q) * (N_entail / N_verifier).
double entailment_term_ratio(double m, double l_a, double l_q, double n_entail,
                             double n_verifier);

/// Ratios above this are not negligible for the cost approximation.
inline constexpr double kNegligibleEntailmentRatio = 0.087;

struct GainPoint {
    double p = 0.0;
    double auroc = 0.0;
};

struct GainSummary {
    double p_alpha = 0.0;
    double delta_max = 0.0;
    bool no_gain = false;  // delta_max <= 0; p_alpha reported as 0
};

/// Smallest grid p whose AUROC gain over p = 0 reaches alpha_pct percent of
/// the maximal gain. Throws InvalidArgument when the curve lacks p = 0.
GainSummary min_p_for_gain(std::span<const GainPoint> gain_curve, double alpha_pct);

/// Configuration defaults for the target/verifier/entailment models of the
/// original experiments. Parameter counts are public model-card totals.
std::vector<ModelCostProfile> builtin_profiles();

/// Reads [{"name", "n_params", "context_length"}, ...] or
/// {"profiles": [...]} from a JSON file.
std::vector<ModelCostProfile> load_profiles(const std::string& path);
const ModelCostProfile& find_profile(std::span<const ModelCostProfile> profiles,
                                     const std::string& name);

}  // namespace crosscheck::cost
