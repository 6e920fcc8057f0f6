#pragma once

// Synthetic stand-in for LLM sampling. Each question has a finite set of
// semantic atoms; the target and verifier models are distributions over
// those atoms, answers are atom draws, and entailment between two answers is
// intra_entail for equal atoms and inter_entail otherwise (plus jitter).
// Because everything is finite, expectations have exact closed forms.

#include "crosscheck/core.hpp"

#include <cstdint>
#include <vector>

namespace crosscheck::synth {

struct WorldConfig {
    std::size_t n_questions = 400;
    std::size_t atoms = 4;
    double concentration = 0.5;  // Dirichlet concentration of the target
    double kernel_noise = 0.05;  // jitter half-width sigma, in [0, 0.2]
    double intra_entail = 0.95;
    double inter_entail = 0.05;
    // Verifier = strength * point mass on the truth
    //          + (1 - strength) * Dirichlet(verifier_concentration).
    double verifier_strength = 0.8;
    double verifier_concentration = 0.5;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SyntheticWorld {
    WorldConfig config;
    std::vector<std::vector<double>> target_dist;
    std::vector<std::vector<double>> verifier_dist;
    std::vector<std::size_t> truth_atom;

    std::size_t n_questions() const { return target_dist.size(); }
    void validate() const;
};

struct WorldCase {
    QuestionCase question;
    std::vector<std::size_t> target_atoms;
    std::vector<std::size_t> verifier_atoms;
    std::size_t low_temp_atom = 0;
    double exact_correctness = 0.0;  // target_dist[truth_atom]
};

/// Deterministic in config.seed; question q only depends on (seed, q).
SyntheticWorld gen_world(const WorldConfig& config);

/// Draws m target and m verifier answers for question q and builds both
/// entailment matrices. `draw` selects an independent resample of the same
/// question (e.g. a validation copy).
WorldCase sample_case(const SyntheticWorld& world, std::size_t q_index, std::size_t m,
                      std::uint64_t draw = 0);

/// sample_case for every question, with QuestionCase records only.
std::vector<QuestionCase> sample_cases(const SyntheticWorld& world, std::size_t m,
                                       std::uint64_t draw = 0);

/// E[1 - mpd(P_cross)] from the atom distributions.
double exact_cross_consistency(const SyntheticWorld& world, std::size_t q_index);

/// E[clamp(base + U(-sigma, sigma), 0, 1)]
double expected_entry(double base, double sigma);

/// Inner product of two mean embeddings under the atom kernel
/// k(a, b) = intra if a == b else inter.
double atom_kernel_inner(const std::vector<double>& x, const std::vector<double>& y, double intra,
                         double inter);

/// Index of the largest probability, lowest index on ties.
std::size_t argmax_atom(const std::vector<double>& dist);

}  // namespace crosscheck::synth
