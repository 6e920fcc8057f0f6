#pragma once

// Detection quality measures (AUROC, AURAC), the two-threshold band protocol
// used to score the two-stage detector, and the uniform-convergence bound on
// thresholds picked from validation data.

#include "crosscheck/core.hpp"
#include "crosscheck/detector.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace crosscheck {

class DegenerateLabels : public Error {
public:
    using Error::Error;
};

/// P(score_pos > score_neg) + 0.5 P(tie) with positives = hallucinations.
double auroc(std::span<const double> scores, const std::vector<bool>& labels);

struct RejectionPoint {
    double fraction = 0.0;  // X
    double accuracy = 0.0;  // share of non-hallucinated answers among the kept ones
};

/// Accuracy on the ceil(X n) lowest-scoring cases for each X in grid. Ties
/// keep input order.
std::vector<RejectionPoint> rejection_accuracy_curve(std::span<const double> scores,
                                                     const std::vector<bool>& labels,
                                                     std::span<const double> grid);

/// {0.01, 0.02, ..., 1.00}
std::vector<double> aurac_grid();

/// Trapezoid area under the rejection-accuracy curve on aurac_grid(),
/// divided by the width of the grid.
double aurac(std::span<const double> scores, const std::vector<bool>& labels);

struct BandPoint {
    double p_fa = 0.0;
    double p_d = 0.0;
    double t1 = 0.0;
    double t2 = 0.0;
};

struct FrontierEntry {
    double t1 = 0.0;
    double t2 = 0.0;
    double p_fa = 0.0;  // on the data the frontier was selected from
    double p_d = 0.0;
};

using Frontier = std::map<std::size_t, FrontierEntry>;

struct RocBand {
    std::vector<BandPoint> points;
    double bin_width = 0.0;
    Frontier frontier;
};

inline constexpr double kDefaultBinWidth = 0.02;
inline constexpr std::size_t kDefaultGridSize = 51;

/// n evenly spaced values covering [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Scores every case once (s_self always, s_cross when p_cross exists) and
/// checks that labels are present.
std::vector<ScoredCase> score_cases(std::span<const QuestionCase> cases,
                                    const Metric& self_metric = Metric::mpd_self(),
                                    const Metric& cross_metric = Metric::mpd_cross());
std::vector<bool> case_labels(std::span<const QuestionCase> cases);

/// (false-positive rate, true-positive rate) of binary predictions.
std::pair<double, double> roc_rates(std::span<const DetectionOutcome> outcomes,
                                    const std::vector<bool>& labels);

/// Runs batch detection at budget p for every (t1, t2) in the grid product.
/// Points are ordered t1-major.
std::vector<BandPoint> band_points(std::span<const ScoredCase> cases, const std::vector<bool>& labels,
                                   std::span<const double> grid_t1,
                                   std::span<const double> grid_t2, double p,
                                   std::span<const double> calibration_scores = {});
std::vector<BandPoint> band_points(std::span<const QuestionCase> val_cases,
                                   std::span<const double> grid_t1,
                                   std::span<const double> grid_t2, double p);

/// Best combo per p_FA bin: max p_D, then smaller p_FA, t1, t2.
Frontier select_frontier(std::span<const BandPoint> points, double bin_width);

/// Trapezoid area of (p_FA, p_D) points after adding (0,0) and (1,1),
/// sorting by p_FA and collapsing duplicate p_FA values to their max p_D.
double anchored_roc_area(std::vector<std::pair<double, double>> points);

/// Area of the frontier on the data it was selected from.
double frontier_area(const Frontier& frontier);

/// Re-runs each frontier combo on the test cases and returns the anchored
/// trapezoid area of the resulting points.
double test_band_auc(std::span<const ScoredCase> test_cases, const std::vector<bool>& labels,
                     const Frontier& frontier, double p,
                     std::span<const double> calibration_scores = {});
double test_band_auc(std::span<const QuestionCase> test_cases, const Frontier& frontier, double p);

struct BoundReport {
    double epsilon = 0.0;
    double confidence = 0.0;
    std::uint64_t n_neg = 0;
    std::uint64_t n_pos = 0;
    std::pair<std::uint64_t, std::uint64_t> grid_sizes;
};

/// epsilon = sqrt((ln|T1| + ln|T2|) / min(n_neg, n_pos)),
/// confidence = (1 - 2 / (|T1| |T2|))^2.
BoundReport hoeffding_epsilon(std::uint64_t size_t1, std::uint64_t size_t2, std::uint64_t n_neg,
                              std::uint64_t n_pos);
/// Same formulas over real-valued sizes.
double hoeffding_epsilon_value(double size_t1, double size_t2, double n_neg, double n_pos);

/// Fraction of simulated validation draws in which every grid cell's
/// estimated (p_FA, p_D) lies within epsilon of its true value.
double monte_carlo_theorem_check(std::pair<std::uint64_t, std::uint64_t> grid_sizes,
                                 std::uint64_t n_neg, std::uint64_t n_pos, std::uint64_t trials,
                                 std::uint64_t seed);

}  // namespace crosscheck
