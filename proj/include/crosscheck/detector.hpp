#pragma once

// Budget-aware two-stage detection. Stage one thresholds the self-consistency
// score; only cases whose score falls inside the uncertain band [t1, t_star]
// are sent to the verifier and decided on the cross-consistency score.

#include "crosscheck/core.hpp"
#include "crosscheck/metrics.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crosscheck {

class EmptyScores : public Error {
public:
    using Error::Error;
};
class ProviderError : public Error {
public:
    using Error::Error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ThresholdTriple {
    double t1 = 0.0;
    double t_star = 0.0;
    double t2 = 0.0;

    void validate() const;
};

struct DetectionOutcome {
    std::string question_id;
    bool predicted = false;  // true = hallucination
    bool verifier_called = false;
    double s_self = 0.0;
    std::optional<double> s_cross;  // present iff verifier_called

    friend bool operator==(const DetectionOutcome&, const DetectionOutcome&) = default;
};

/// Upper stage-one threshold such that (about) a fraction p of the scores
/// land in [t1, t_star]. Lower empirical quantile: the realized fraction
/// never exceeds p except for tie mass sitting exactly at t1. Returns +inf
/// when the band must take every score at or above t1.
double calibrate_tstar(std::span<const double> self_scores, double t1, double p);

using CrossScoreProvider = std::function<double()>;

/// Decision for a single case. Scores equal to t1 or t_star fall into the
/// middle band and reach the verifier. An empty provider in the middle band
/// is a ProviderError; exceptions thrown by the provider propagate.
DetectionOutcome two_stage_decide(double s_self, const ThresholdTriple& thr,
                                  const CrossScoreProvider& cross_score_provider,
                                  std::string question_id = {});

struct BatchDetection {
    std::vector<DetectionOutcome> outcomes;
    double t_star = 0.0;
    double realized_call_fraction = 0.0;
};

/// Pre-scored case: s_cross absent means no cross data is available.
struct ScoredCase {
    std::string id;
    double s_self = 0.0;
    std::optional<double> s_cross;
};

struct BatchOptions {
    Metric self_metric = Metric::mpd_self();
    Metric cross_metric = Metric::mpd_cross();
    // Scores used to place t_star. Empty: use the batch's own self scores.
    std::vector<double> calibration_scores;
    // Consulted for middle-band cases lacking p_cross.
    std::function<double(const QuestionCase&)> live_cross_provider;
};

BatchDetection batch_detect(std::span<const QuestionCase> cases, double t1, double t2, double p,
                            const BatchOptions& options = {});

/// Same algorithm over precomputed scores; MissingMatrix for a middle-band
/// case without s_cross.
BatchDetection batch_detect_scored(std::span<const ScoredCase> cases, double t1, double t2,
                                   double p, std::span<const double> calibration_scores = {});

}  // namespace crosscheck
