#pragma once

// Consistency functionals: each maps an entailment matrix to a scalar where
// larger values mean the sampled answers disagree more.

#include "crosscheck/core.hpp"

#include <string>

namespace crosscheck {

inline constexpr double kDefaultBinarizeTheta = 0.5;
inline constexpr double kDefaultEigThreshold = 0.9;

/// 1 - mean of all entries, diagonal included.
double mpd(const EntailmentMatrix& m);

/// Entropy (nats) of the connected components of the bidirectional
/// entailment graph.
double semantic_entropy(const EntailmentMatrix& m, double theta = kDefaultBinarizeTheta);

/// I - D^{-1/2} W D^{-1/2}. Zero-degree nodes get L(j,j) = 1 and no
/// off-diagonal coupling.
Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& w);

/// Soft cluster count: sum over Laplacian eigenvalues of max(0, 1 - lambda).
double eigv(const EntailmentMatrix& m);

/// Spread of the spectral node embeddings built from Laplacian eigenvectors
/// with eigenvalue below eig_threshold.
double ecc(const EntailmentMatrix& m, double eig_threshold = kDefaultEigThreshold);

/// Von Neumann entropy (nats) of the trace-normalized symmetrized matrix.
/// Negative eigenvalues are clipped and the rest rescaled to unit sum.
double kle(const EntailmentMatrix& m);

/// (1 - lambda) * mpd(p_self) + lambda * mpd(p_cross).
double combined_score(const EntailmentMatrix& p_self, const EntailmentMatrix& p_cross,
                      double lambda);

enum class MetricKind { MpdSelf, MpdCross, SemanticEntropy, EigV, Ecc, Kle, Combined };

struct Metric {
    MetricKind kind = MetricKind::MpdSelf;
    double lambda = 0.0;         // Combined only
    double theta = kDefaultBinarizeTheta;
    double eig_threshold = kDefaultEigThreshold;

    /// Canonical label, e.g. "mpd_self", "se(theta=0.5)", "combined(lambda=0.3)".
    std::string name() const;
    void validate() const;

    static Metric mpd_self() { return {}; }
    static Metric mpd_cross() { return {MetricKind::MpdCross}; }
    static Metric combined(double lambda) { return {MetricKind::Combined, lambda}; }
};

/// Accepts mpd_self, mpd_cross, se, eigv, ecc, kle, combined. Throws
/// InvalidArgument on anything else.
MetricKind parse_metric_kind(const std::string& name);

/// Throws MissingMatrix when the case lacks a matrix the metric needs.
ScoreRecord score_case(const QuestionCase& c, const Metric& metric);
double metric_value(const QuestionCase& c, const Metric& metric);

}  // namespace crosscheck
