#include "crosscheck/detector.hpp"

#include <algorithm>
#include <cmath>

namespace crosscheck {

void ThresholdTriple::validate() const {
    if (std::isnan(t1) || std::isnan(t_star) || std::isnan(t2))
        throw InvalidArgument("thresholds must not be NaN");
    if (!(t1 <= t_star)) throw InvalidArgument("threshold triple needs t1 <= t_star");
}

double calibrate_tstar(std::span<const double> self_scores, double t1, double p) {
    if (self_scores.empty()) throw EmptyScores("cannot calibrate t_star without scores");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("budget fraction p must lie in [0,1]");

    std::vector<double> above;
    std::size_t at_t1 = 0;
    for (double s : self_scores) {
        if (s > t1)
            above.push_back(s);
        else if (s == t1)
            ++at_t1;
    }
    std::sort(above.begin(), above.end());

    const double n = static_cast<double>(self_scores.size());
    // Small slack so that e.g. 4 of 10 counts as "at most 0.4".
    const double budget = p * n + 1e-9;

    // Walk candidate thresholds t1, then each distinct score above t1, and
    // keep the last one whose band count fits the budget.
    double best = t1;
    std::size_t i = 0;
    while (i < above.size()) {
        std::size_t j = i;
        while (j < above.size() && above[j] == above[i]) ++j;
        const std::size_t count = at_t1 + j;
        if (static_cast<double>(count) > budget) break;
        best = above[i];
        i = j;
    }
    const std::size_t everything = at_t1 + above.size();
    if (everything > 0 && static_cast<double>(everything) <= budget) return kInf;
    return best;
}

DetectionOutcome two_stage_decide(double s_self, const ThresholdTriple& thr,
                                  const CrossScoreProvider& cross_score_provider,
                                  std::string question_id) {
    thr.validate();
    DetectionOutcome out;
    out.question_id = std::move(question_id);
    out.s_self = s_self;
    if (s_self < thr.t1) {
        out.predicted = false;
        return out;
    }
    if (s_self > thr.t_star) {
        out.predicted = true;
        return out;
    }
    if (!cross_score_provider)
        throw ProviderError("no cross-consistency provider for case " + out.question_id);
    const double s_cross = cross_score_provider();
    out.verifier_called = true;
    out.s_cross = s_cross;
    out.predicted = s_cross >= thr.t2;
    return out;
}

namespace {

BatchDetection finish(std::vector<DetectionOutcome> outcomes, double t_star) {
    BatchDetection result;
    std::size_t calls = 0;
    for (const auto& o : outcomes) calls += o.verifier_called ? 1 : 0;
    result.realized_call_fraction =
        outcomes.empty() ? 0.0 : static_cast<double>(calls) / static_cast<double>(outcomes.size());
    result.outcomes = std::move(outcomes);
    result.t_star = t_star;
    return result;
}

}  // namespace

BatchDetection batch_detect_scored(std::span<const ScoredCase> cases, double t1, double t2,
                                   double p, std::span<const double> calibration_scores) {
    std::vector<double> own;
    if (calibration_scores.empty()) {
        own.reserve(cases.size());
        for (const auto& c : cases) own.push_back(c.s_self);
        calibration_scores = own;
    }
    const double t_star = calibrate_tstar(calibration_scores, t1, p);
    const ThresholdTriple thr{t1, t_star, t2};

    std::vector<DetectionOutcome> outcomes;
    outcomes.reserve(cases.size());
    for (const auto& c : cases) {
        CrossScoreProvider provider = [&c]() -> double {
            if (!c.s_cross)
                throw MissingMatrix("case " + c.id + " reached the verifier stage without p_cross");
            return *c.s_cross;
        };
        outcomes.push_back(two_stage_decide(c.s_self, thr, provider, c.id));
    }
    return finish(std::move(outcomes), t_star);
}

BatchDetection batch_detect(std::span<const QuestionCase> cases, double t1, double t2, double p,
                            const BatchOptions& options) {
    std::vector<double> self_scores;
    self_scores.reserve(cases.size());
    for (const auto& c : cases) self_scores.push_back(metric_value(c, options.self_metric));

    std::span<const double> calibration = options.calibration_scores;
    if (calibration.empty()) calibration = self_scores;
    const double t_star = calibrate_tstar(calibration, t1, p);
    const ThresholdTriple thr{t1, t_star, t2};

    std::vector<DetectionOutcome> outcomes;
    outcomes.reserve(cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const QuestionCase& c = cases[i];
        CrossScoreProvider provider = [&]() -> double {
            if (c.p_cross || !options.live_cross_provider)
                return metric_value(c, options.cross_metric);
            return options.live_cross_provider(c);
        };
        outcomes.push_back(two_stage_decide(self_scores[i], thr, provider, c.id));
    }
    return finish(std::move(outcomes), t_star);
}

}  // namespace crosscheck
