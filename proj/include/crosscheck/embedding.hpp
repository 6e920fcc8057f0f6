#pragma once

// Kernel mean embedding view of consistency. With a kernel bounded by one,
// self-consistency is the squared norm of the target embedding and
// cross-consistency is the inner product of target and verifier embeddings.

#include "crosscheck/core.hpp"

#include <optional>

namespace crosscheck {

struct EmbeddingGeometry {
    double self_norm_sq = 0.0;                 // ||mu_t||^2
    std::optional<double> cross_inner;         // <mu_t, mu_v>
    std::optional<double> truth_inner_target;  // <mu_t, mu_*>
    std::optional<double> truth_inner_verifier;  // <mu_v, mu_*>
};

EmbeddingGeometry geometry_from_matrices(
    const EntailmentMatrix& p_self, const std::optional<EntailmentMatrix>& p_cross = std::nullopt,
    const std::optional<EntailmentMatrix>& p_target_truth = std::nullopt,
    const std::optional<EntailmentMatrix>& p_verifier_truth = std::nullopt);

inline constexpr double kDefaultEntropicEps = 0.1;

/// Weight on the target embedding that maximizes the entropically
/// regularized agreement with the truth embedding: a two-way softmax of the
/// truth inner products at temperature eps_reg.
double lambda_entropic(double inner_t_star, double inner_v_star,
                       double eps_reg = kDefaultEntropicEps);

/// sqrt(2 (1 - <mu_*, lambda mu_t + (1 - lambda) mu_v>)).
double approx_error_bound(double mix_truth_inner);

}  // namespace crosscheck
