#include "crosscheck/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace crosscheck {

namespace {

void check_inputs(std::span<const double> scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size())
        throw InvalidArgument("scores and labels differ in length");
    if (scores.empty()) throw InvalidArgument("no scores given");
    for (double s : scores)
        if (std::isnan(s)) throw InvalidArgument("NaN score");
}

std::vector<std::size_t> stable_order(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    return idx;
}

}  // namespace

double auroc(std::span<const double> scores, const std::vector<bool>& labels) {
    check_inputs(scores, labels);
    const auto idx = stable_order(scores);
    // Walk tie groups in ascending score order; every positive beats the
    // negatives seen so far and splits credit with negatives in its group.
    double wins = 0.0;
    double neg_below = 0.0;
    double n_pos = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        double pos_g = 0.0, neg_g = 0.0;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            (labels[idx[j]] ? pos_g : neg_g) += 1.0;
            ++j;
        }
        wins += pos_g * neg_below + 0.5 * pos_g * neg_g;
        neg_below += neg_g;
        n_pos += pos_g;
        i = j;
    }
    const double n_neg = neg_below;
    if (n_pos == 0.0 || n_neg == 0.0)
        throw DegenerateLabels("AUROC needs both hallucinated and non-hallucinated cases");
    return wins / (n_pos * n_neg);
}

std::vector<RejectionPoint> rejection_accuracy_curve(std::span<const double> scores,
                                                     const std::vector<bool>& labels,
                                                     std::span<const double> grid) {
    check_inputs(scores, labels);
    const auto idx = stable_order(scores);
    const std::size_t n = scores.size();
    // correct_prefix[k] = non-hallucinated count among the k lowest scores
    std::vector<std::size_t> correct_prefix(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k)
        correct_prefix[k + 1] = correct_prefix[k] + (labels[idx[k]] ? 0 : 1);

    std::vector<RejectionPoint> curve;
    curve.reserve(grid.size());
    for (double x : grid) {
        if (!(x > 0.0 && x <= 1.0)) throw InvalidArgument("rejection fractions must lie in (0,1]");
        auto keep = static_cast<std::size_t>(std::ceil(x * static_cast<double>(n) - 1e-9));
        keep = std::clamp<std::size_t>(keep, 1, n);
        curve.push_back({x, static_cast<double>(correct_prefix[keep]) / static_cast<double>(keep)});
    }
    return curve;
}

std::vector<double> aurac_grid() {
    std::vector<double> grid(100);
    for (int i = 0; i < 100; ++i) grid[i] = (i + 1) / 100.0;
    return grid;
}

double aurac(std::span<const double> scores, const std::vector<bool>& labels) {
    const auto grid = aurac_grid();
    const auto curve = rejection_accuracy_curve(scores, labels, grid);
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += 0.5 * (curve[i].accuracy + curve[i - 1].accuracy) *
                (curve[i].fraction - curve[i - 1].fraction);
    return area / (curve.back().fraction - curve.front().fraction);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    v.back() = hi;
    return v;
}

std::vector<ScoredCase> score_cases(std::span<const QuestionCase> cases, const Metric& self_metric,
                                    const Metric& cross_metric) {
    std::vector<ScoredCase> out;
    out.reserve(cases.size());
    for (const auto& c : cases) {
        ScoredCase s{c.id, metric_value(c, self_metric), std::nullopt};
        if (c.p_cross) s.s_cross = metric_value(c, cross_metric);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<bool> case_labels(std::span<const QuestionCase> cases) {
    std::vector<bool> labels;
    labels.reserve(cases.size());
    for (const auto& c : cases) {
        if (!c.label) throw MissingLabel("case " + c.id + " has no label");
        labels.push_back(*c.label);
    }
    return labels;
}

std::pair<double, double> roc_rates(std::span<const DetectionOutcome> outcomes,
                                    const std::vector<bool>& labels) {
    if (outcomes.size() != labels.size())
        throw InvalidArgument("outcomes and labels differ in length");
    double tp = 0, fp = 0, pos = 0, neg = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (labels[i]) {
            pos += 1;
            tp += outcomes[i].predicted ? 1 : 0;
        } else {
            neg += 1;
            fp += outcomes[i].predicted ? 1 : 0;
        }
    }
    if (pos == 0 || neg == 0)
        throw DegenerateLabels("ROC rates need both hallucinated and non-hallucinated cases");
    return {fp / neg, tp / pos};
}

std::vector<BandPoint> band_points(std::span<const ScoredCase> cases,
                                   const std::vector<bool>& labels,
                                   std::span<const double> grid_t1,
                                   std::span<const double> grid_t2, double p,
                                   std::span<const double> calibration_scores) {
    if (cases.size() != labels.size()) throw InvalidArgument("cases and labels differ in length");
    double n_pos = 0, n_neg = 0;
    for (bool l : labels) (l ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0)
        throw DegenerateLabels("band evaluation needs both classes in the labels");

    std::vector<double> own;
    if (calibration_scores.empty()) {
        for (const auto& c : cases) own.push_back(c.s_self);
        calibration_scores = own;
    }

    // Equivalent to batch_detect_scored per combo, but stage one only depends
    // on t1 so it is evaluated once per row.
    std::vector<BandPoint> points;
    points.reserve(grid_t1.size() * grid_t2.size());
    std::vector<std::size_t> middle;
    for (double t1 : grid_t1) {
        const double t_star = calibrate_tstar(calibration_scores, t1, p);
        double tp_stage1 = 0, fp_stage1 = 0;
        middle.clear();
        for (std::size_t i = 0; i < cases.size(); ++i) {
            const double s = cases[i].s_self;
            if (s < t1) continue;
            if (s > t_star) {
                (labels[i] ? tp_stage1 : fp_stage1) += 1;
                continue;
            }
            if (!cases[i].s_cross)
                throw MissingMatrix("case " + cases[i].id +
                                    " reached the verifier stage without p_cross");
            middle.push_back(i);
        }
        for (double t2 : grid_t2) {
            double tp = tp_stage1, fp = fp_stage1;
            for (std::size_t i : middle)
                if (*cases[i].s_cross >= t2) (labels[i] ? tp : fp) += 1;
            points.push_back({fp / n_neg, tp / n_pos, t1, t2});
        }
    }
    return points;
}

std::vector<BandPoint> band_points(std::span<const QuestionCase> val_cases,
                                   std::span<const double> grid_t1,
                                   std::span<const double> grid_t2, double p) {
    const auto labels = case_labels(val_cases);
    const auto scored = score_cases(val_cases);
    return band_points(scored, labels, grid_t1, grid_t2, p);
}

Frontier select_frontier(std::span<const BandPoint> points, double bin_width) {
    if (!(bin_width > 0.0 && bin_width <= 1.0)) throw InvalidArgument("bin_width must lie in (0,1]");
    const auto n_bins = static_cast<std::size_t>(std::ceil(1.0 / bin_width - 1e-9));
    auto better = [](const BandPoint& a, const FrontierEntry& b) {
        if (a.p_d != b.p_d) return a.p_d > b.p_d;
        if (a.p_fa != b.p_fa) return a.p_fa < b.p_fa;
        if (a.t1 != b.t1) return a.t1 < b.t1;
        return a.t2 < b.t2;
    };
    Frontier frontier;
    for (const auto& pt : points) {
        auto bin = static_cast<std::size_t>(std::floor(pt.p_fa / bin_width));
        bin = std::min(bin, n_bins - 1);
        auto it = frontier.find(bin);
        if (it == frontier.end() || better(pt, it->second))
            frontier[bin] = FrontierEntry{pt.t1, pt.t2, pt.p_fa, pt.p_d};
    }
    return frontier;
}

double anchored_roc_area(std::vector<std::pair<double, double>> points) {
    points.emplace_back(0.0, 0.0);
    points.emplace_back(1.0, 1.0);
    std::sort(points.begin(), points.end());
    std::vector<std::pair<double, double>> curve;
    for (const auto& pt : points) {
        if (!curve.empty() && curve.back().first == pt.first)
            curve.back().second = std::max(curve.back().second, pt.second);
        else
            curve.push_back(pt);
    }
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += 0.5 * (curve[i].second + curve[i - 1].second) * (curve[i].first - curve[i - 1].first);
    return area;
}

double frontier_area(const Frontier& frontier) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [bin, e] : frontier) pts.emplace_back(e.p_fa, e.p_d);
    return anchored_roc_area(std::move(pts));
}

double test_band_auc(std::span<const ScoredCase> test_cases, const std::vector<bool>& labels,
                     const Frontier& frontier, double p,
                     std::span<const double> calibration_scores) {
    if (frontier.empty()) throw InvalidArgument("empty frontier");
    std::vector<std::pair<double, double>> pts;
    for (const auto& [bin, e] : frontier) {
        const auto batch = batch_detect_scored(test_cases, e.t1, e.t2, p, calibration_scores);
        pts.push_back(roc_rates(batch.outcomes, labels));
    }
    return anchored_roc_area(std::move(pts));
}

double test_band_auc(std::span<const QuestionCase> test_cases, const Frontier& frontier, double p) {
    const auto labels = case_labels(test_cases);
    const auto scored = score_cases(test_cases);
    return test_band_auc(scored, labels, frontier, p);
}

double hoeffding_epsilon_value(double size_t1, double size_t2, double n_neg, double n_pos) {
    return std::sqrt((std::log(size_t1) + std::log(size_t2)) / std::min(n_neg, n_pos));
}

BoundReport hoeffding_epsilon(std::uint64_t size_t1, std::uint64_t size_t2, std::uint64_t n_neg,
                              std::uint64_t n_pos) {
    if (size_t1 < 1 || size_t2 < 1 || n_neg < 1 || n_pos < 1)
        throw InvalidArgument("grid sizes and class counts must be at least 1");
    const double cells = static_cast<double>(size_t1) * static_cast<double>(size_t2);
    if (!(cells > 2.0)) throw InvalidArgument("the threshold grid needs more than 2 cells");
    BoundReport r;
    r.epsilon = hoeffding_epsilon_value(static_cast<double>(size_t1), static_cast<double>(size_t2),
                                        static_cast<double>(n_neg), static_cast<double>(n_pos));
    const double miss = 1.0 - 2.0 / cells;
    r.confidence = miss * miss;
    r.n_neg = n_neg;
    r.n_pos = n_pos;
    r.grid_sizes = {size_t1, size_t2};
    return r;
}

double monte_carlo_theorem_check(std::pair<std::uint64_t, std::uint64_t> grid_sizes,
                                 std::uint64_t n_neg, std::uint64_t n_pos, std::uint64_t trials,
                                 std::uint64_t seed) {
    if (trials < 1) throw InvalidArgument("need at least one trial");
    const BoundReport bound = hoeffding_epsilon(grid_sizes.first, grid_sizes.second, n_neg, n_pos);
    const std::uint64_t cells = grid_sizes.first * grid_sizes.second;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double inv_neg = 1.0 / static_cast<double>(n_neg);
    const double inv_pos = 1.0 / static_cast<double>(n_pos);

    std::uint64_t covered = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        bool holds = true;
        for (std::uint64_t c = 0; c < cells && holds; ++c) {
            const double p_fa = unit(rng);
            const double p_d = unit(rng);
            std::binomial_distribution<std::uint64_t> false_alarms(n_neg, p_fa);
            std::binomial_distribution<std::uint64_t> detections(n_pos, p_d);
            const double fa_hat = static_cast<double>(false_alarms(rng)) * inv_neg;
            const double d_hat = static_cast<double>(detections(rng)) * inv_pos;
            holds = std::abs(fa_hat - p_fa) <= bound.epsilon && std::abs(d_hat - p_d) <= bound.epsilon;
        }
        covered += holds ? 1 : 0;
    }
    return static_cast<double>(covered) / static_cast<double>(trials);
}

}  // namespace crosscheck
