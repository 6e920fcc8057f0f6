#include "crosscheck/embedding.hpp"

#include "crosscheck/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace crosscheck {

EmbeddingGeometry geometry_from_matrices(const EntailmentMatrix& p_self,
                                         const std::optional<EntailmentMatrix>& p_cross,
                                         const std::optional<EntailmentMatrix>& p_target_truth,
                                         const std::optional<EntailmentMatrix>& p_verifier_truth) {
    EmbeddingGeometry g;
    g.self_norm_sq = 1.0 - mpd(p_self);
    if (p_cross) g.cross_inner = 1.0 - mpd(*p_cross);
    if (p_target_truth) g.truth_inner_target = 1.0 - mpd(*p_target_truth);
    if (p_verifier_truth) g.truth_inner_verifier = 1.0 - mpd(*p_verifier_truth);
    return g;
}

double lambda_entropic(double inner_t_star, double inner_v_star, double eps_reg) {
    if (!(eps_reg > 0.0)) throw InvalidArgument("eps_reg must be positive");
    const double a = inner_t_star / eps_reg;
    const double b = inner_v_star / eps_reg;
    const double top = std::max(a, b);
    const double ea = std::exp(a - top);
    const double eb = std::exp(b - top);
    return ea / (ea + eb);
}

double approx_error_bound(double mix_truth_inner) {
    if (!(mix_truth_inner >= 0.0 && mix_truth_inner <= 1.0))
        throw InvalidArgument("mixture inner product must lie in [0,1]");
    return std::sqrt(2.0 * (1.0 - mix_truth_inner));
}

}  // namespace crosscheck
