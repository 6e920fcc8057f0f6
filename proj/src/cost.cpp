#include "crosscheck/cost.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace crosscheck::cost {

void ModelCostProfile::validate() const {
    if (!(n_params > 0.0)) throw InvalidArgument("profile " + name + ": n_params must be positive");
    if (!(context_length > 0.0))
        throw InvalidArgument("profile " + name + ": context_length must be positive");
}

double relative_additional_cost(double p, const ModelCostProfile& target,
                                const ModelCostProfile& verifier) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("p must lie in [0,1]");
    target.validate();
    verifier.validate();
    return p * verifier.n_params / target.n_params;
}

double entailment_term_ratio(double m, double l_a, double l_q, double n_entail,
                             double n_verifier) {
    if (!(m > 0 && l_a > 0 && l_q > 0 && n_entail > 0 && n_verifier > 0))
        throw InvalidArgument("entailment_term_ratio needs positive inputs");
    return m * (l_a / l_q) * (n_entail / n_verifier);
}

GainSummary min_p_for_gain(std::span<const GainPoint> gain_curve, double alpha_pct) {
    if (!(alpha_pct > 0.0 && alpha_pct <= 100.0))
        throw InvalidArgument("alpha must lie in (0,100]");
    std::vector<GainPoint> curve(gain_curve.begin(), gain_curve.end());
    std::sort(curve.begin(), curve.end(),
              [](const GainPoint& a, const GainPoint& b) { return a.p < b.p; });
    auto base_it = std::find_if(curve.begin(), curve.end(),
                                [](const GainPoint& g) { return g.p == 0.0; });
    if (base_it == curve.end()) throw InvalidArgument("gain curve has no p = 0 point");
    const double base = base_it->auroc;

    GainSummary out;
    for (const auto& g : curve) out.delta_max = std::max(out.delta_max, g.auroc - base);
    if (!(out.delta_max > 0.0)) {
        out.no_gain = true;
        out.p_alpha = 0.0;
        out.delta_max = 0.0;
        return out;
    }
    // Slack absorbs rounding in auroc(p) - auroc(0) on exactly linear curves.
    const double needed = alpha_pct / 100.0 * out.delta_max - 1e-12;
    for (const auto& g : curve) {
        if (g.auroc - base >= needed) {
            out.p_alpha = g.p;
            break;
        }
    }
    return out;
}

std::vector<ModelCostProfile> builtin_profiles() {
    return {
        {"Llama-2-13b-chat", 13e9, 4096},
        {"Llama-2-70b-chat-hf", 70e9, 4096},
        {"Llama-3-70B-Instruct", 70e9, 8192},
        {"Mixtral-8x7B-Instruct-v0.1", 46.7e9, 32768},
        {"merlinite-7b", 7e9, 32768},
        {"deberta-v2-xlarge-mnli", 0.9e9, 512},
    };
}

std::vector<ModelCostProfile> load_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open profile file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("malformed profile file " + path + ": " + e.what());
    }
    const nlohmann::json& list = j.is_object() ? j.at("profiles") : j;
    std::vector<ModelCostProfile> out;
    for (const auto& item : list) {
        ModelCostProfile p{item.at("name").get<std::string>(), item.at("n_params").get<double>(),
                           item.at("context_length").get<double>()};
        p.validate();
        out.push_back(std::move(p));
    }
    return out;
}

const ModelCostProfile& find_profile(std::span<const ModelCostProfile> profiles,
                                     const std::string& name) {
    for (const auto& p : profiles)
        if (p.name == name) return p;
    throw InvalidArgument("unknown model profile '" + name + "'");
}

}  // namespace crosscheck::cost
