#include "crosscheck/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace crosscheck::synth {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t salt) {
    return splitmix64(splitmix64(splitmix64(seed) ^ index) ^ salt);
}

double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t categorical(const std::vector<double>& dist, std::mt19937_64& rng) {
    const double u = unit(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        acc += dist[i];
        if (u < acc) return i;
    }
    // Rounding left u above the last partial sum: take the last atom with mass.
    for (std::size_t i = dist.size(); i-- > 0;)
        if (dist[i] > 0.0) return i;
    return dist.size() - 1;
}

// Dirichlet draw in log space: G_i = Gamma(a + 1) * U^(1/a) keeps tiny
// concentrations from underflowing to an all-zero vector.
std::vector<double> dirichlet(std::size_t k, double alpha, std::mt19937_64& rng) {
    std::gamma_distribution<double> gamma(alpha + 1.0, 1.0);
    std::vector<double> logs(k);
    for (auto& l : logs) {
        const double u = std::max(unit(rng), 0x1.0p-60);
        l = std::log(gamma(rng)) + std::log(u) / alpha;
    }
    const double top = *std::max_element(logs.begin(), logs.end());
    std::vector<double> out(k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += out[i] = std::exp(logs[i] - top);
    for (auto& v : out) v /= total;
    return out;
}

double jittered(double base, double sigma, std::mt19937_64& rng) {
    if (sigma == 0.0) return base;
    return std::clamp(base + sigma * (2.0 * unit(rng) - 1.0), 0.0, 1.0);
}

void check_distribution(const std::vector<double>& d, std::size_t k, const char* what) {
    if (d.size() != k) throw ShapeError(std::string(what) + " has the wrong number of atoms");
    double total = 0.0;
    for (double v : d) {
        if (!(v >= 0.0)) throw RangeError(std::string(what) + " has a negative probability");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) throw RangeError(std::string(what) + " does not sum to 1");
}

std::string json_text(const nlohmann::json& j) { return j.dump(); }

}  // namespace

void WorldConfig::validate() const {
    if (atoms < 1) throw InvalidArgument("a world needs at least one atom");
    if (!(concentration > 0.0)) throw InvalidArgument("concentration must be positive");
    if (!(verifier_concentration > 0.0))
        throw InvalidArgument("verifier concentration must be positive");
    if (!(kernel_noise >= 0.0 && kernel_noise <= 0.2))
        throw InvalidArgument("kernel_noise must lie in [0, 0.2]");
    if (!(intra_entail > inter_entail)) throw InvalidArgument("intra_entail must exceed inter_entail");
    if (!(inter_entail >= 0.0 && intra_entail <= 1.0))
        throw InvalidArgument("entailment levels must lie in [0,1]");
    if (!(verifier_strength >= 0.0 && verifier_strength <= 1.0))
        throw InvalidArgument("verifier_strength must lie in [0,1]");
}

void SyntheticWorld::validate() const {
    config.validate();
    if (verifier_dist.size() != target_dist.size() || truth_atom.size() != target_dist.size())
        throw ShapeError("world tables disagree on the number of questions");
    for (std::size_t q = 0; q < target_dist.size(); ++q) {
        check_distribution(target_dist[q], config.atoms, "target distribution");
        check_distribution(verifier_dist[q], config.atoms, "verifier distribution");
        if (truth_atom[q] >= config.atoms) throw RangeError("truth atom out of range");
    }
}

SyntheticWorld gen_world(const WorldConfig& config) {
    config.validate();
    SyntheticWorld w;
    w.config = config;
    const std::size_t k = config.atoms;
    for (std::size_t q = 0; q < config.n_questions; ++q) {
        std::mt19937_64 rng(derive_seed(config.seed, q, 0));
        auto target = dirichlet(k, config.concentration, rng);
        // The target is calibrated: the truth is distributed as its posterior.
        const std::size_t truth = categorical(target, rng);
        auto noise = dirichlet(k, config.verifier_concentration, rng);
        std::vector<double> verifier(k);
        for (std::size_t a = 0; a < k; ++a)
            verifier[a] = (1.0 - config.verifier_strength) * noise[a];
        verifier[truth] += config.verifier_strength;
        const double total = std::accumulate(verifier.begin(), verifier.end(), 0.0);
        for (auto& v : verifier) v /= total;

        w.target_dist.push_back(std::move(target));
        w.verifier_dist.push_back(std::move(verifier));
        w.truth_atom.push_back(truth);
    }
    return w;
}

std::size_t argmax_atom(const std::vector<double>& dist) {
    return static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
}

WorldCase sample_case(const SyntheticWorld& world, std::size_t q_index, std::size_t m,
                      std::uint64_t draw) {
    if (q_index >= world.n_questions()) throw InvalidArgument("question index out of range");
    if (m < 2) throw InvalidArgument("need at least 2 samples per question");
    const auto& cfg = world.config;
    std::mt19937_64 rng(derive_seed(cfg.seed, q_index, draw + 1));

    WorldCase wc;
    for (std::size_t j = 0; j < m; ++j) wc.target_atoms.push_back(categorical(world.target_dist[q_index], rng));
    for (std::size_t j = 0; j < m; ++j)
        wc.verifier_atoms.push_back(categorical(world.verifier_dist[q_index], rng));

    const auto base = [&](std::size_t a, std::size_t b) {
        return a == b ? cfg.intra_entail : cfg.inter_entail;
    };
    const auto em = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd self(em, em), cross(em, em);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = 0; k < m; ++k) {
            const auto r = static_cast<Eigen::Index>(j), c = static_cast<Eigen::Index>(k);
            self(r, c) = j == k ? 1.0
                                : jittered(base(wc.target_atoms[j], wc.target_atoms[k]),
                                           cfg.kernel_noise, rng);
        }
    }
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k)
            cross(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
                jittered(base(wc.target_atoms[j], wc.verifier_atoms[k]), cfg.kernel_noise, rng);

    wc.low_temp_atom = argmax_atom(world.target_dist[q_index]);
    const std::size_t truth = world.truth_atom[q_index];
    wc.exact_correctness = world.target_dist[q_index][truth];

    QuestionCase& qc = wc.question;
    qc.id = "q" + std::to_string(q_index);
    qc.question = "synthetic question " + std::to_string(q_index);
    qc.p_self = validate_matrix(self, MatrixKind::SelfTarget);
    qc.p_cross = validate_matrix(cross, MatrixKind::CrossTargetVerifier);
    qc.label = wc.low_temp_atom != truth;
    qc.extra["target_atoms"] = json_text(wc.target_atoms);
    qc.extra["verifier_atoms"] = json_text(wc.verifier_atoms);
    qc.extra["truth_atom"] = json_text(truth);
    qc.extra["exact_correctness"] = json_text(wc.exact_correctness);
    return wc;
}

std::vector<QuestionCase> sample_cases(const SyntheticWorld& world, std::size_t m,
                                       std::uint64_t draw) {
    std::vector<QuestionCase> out;
    out.reserve(world.n_questions());
    for (std::size_t q = 0; q < world.n_questions(); ++q)
        out.push_back(sample_case(world, q, m, draw).question);
    return out;
}

double expected_entry(double base, double sigma) {
    if (sigma == 0.0) return std::clamp(base, 0.0, 1.0);
    // Antiderivative of clamp(x, 0, 1).
    const auto prim = [](double x) {
        if (x <= 0.0) return 0.0;
        if (x <= 1.0) return 0.5 * x * x;
        return 0.5 + (x - 1.0);
    };
    return (prim(base + sigma) - prim(base - sigma)) / (2.0 * sigma);
}

double exact_cross_consistency(const SyntheticWorld& world, std::size_t q_index) {
    if (q_index >= world.n_questions()) throw InvalidArgument("question index out of range");
    const auto& cfg = world.config;
    const double same = expected_entry(cfg.intra_entail, cfg.kernel_noise);
    const double diff = expected_entry(cfg.inter_entail, cfg.kernel_noise);
    const auto& t = world.target_dist[q_index];
    const auto& v = world.verifier_dist[q_index];
    double total = 0.0;
    for (std::size_t a = 0; a < t.size(); ++a)
        for (std::size_t b = 0; b < v.size(); ++b) total += t[a] * v[b] * (a == b ? same : diff);
    return total;
}

double atom_kernel_inner(const std::vector<double>& x, const std::vector<double>& y, double intra,
                         double inter) {
    if (x.size() != y.size()) throw ShapeError("atom distributions differ in size");
    double sx = 0.0, sy = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        dot += x[i] * y[i];
    }
    return inter * sx * sy + (intra - inter) * dot;
}

}  // namespace crosscheck::synth
