#include "crosscheck/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace crosscheck {

double mpd(const EntailmentMatrix& m) {
    // Summing each off-diagonal pair before accumulating makes the result
    // bit-identical for M and symmetrize(M): 2 * ((a + b) / 2) == a + b.
    const std::size_t n = m.size();
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        total += m(j, j);
        for (std::size_t k = j + 1; k < n; ++k) total += m(j, k) + m(k, j);
    }
    const double mean = total / static_cast<double>(n * n);
    return 1.0 - mean;
}

namespace {

std::vector<std::size_t> component_sizes(const BoolMatrix& b) {
    const std::size_t n = b.n;
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k)
            if (b(j, k)) parent[find(j)] = find(k);
    std::vector<std::size_t> counts(n, 0);
    for (std::size_t j = 0; j < n; ++j) ++counts[find(j)];
    std::vector<std::size_t> sizes;
    for (std::size_t c : counts)
        if (c > 0) sizes.push_back(c);
    return sizes;
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> laplacian_eigen(const EntailmentMatrix& m) {
    const Eigen::MatrixXd l = normalized_laplacian(symmetrize(m).values());
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(l);
}

}  // namespace

double semantic_entropy(const EntailmentMatrix& m, double theta) {
    const auto sizes = component_sizes(binarize(m, theta));
    const double n = static_cast<double>(m.size());
    double h = 0.0;
    for (std::size_t c : sizes) {
        const double q = static_cast<double>(c) / n;
        h -= q * std::log(q);
    }
    return h;
}

Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& w) {
    const Eigen::Index n = w.rows();
    if (w.cols() != n) throw ShapeError("Laplacian needs a square weight matrix");
    Eigen::VectorXd inv_sqrt_deg(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double d = w.row(j).sum();
        inv_sqrt_deg(j) = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
    }
    Eigen::MatrixXd l(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const double a = inv_sqrt_deg(j) * w(j, k) * inv_sqrt_deg(k);
            l(j, k) = (j == k ? 1.0 : 0.0) - a;
        }
        if (inv_sqrt_deg(j) == 0.0) {
            l.row(j).setZero();
            l.col(j).setZero();
            l(j, j) = 1.0;
        }
    }
    return l;
}

double eigv(const EntailmentMatrix& m) {
    const auto es = laplacian_eigen(m);
    double total = 0.0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        total += std::max(0.0, 1.0 - es.eigenvalues()(k));
    return total;
}

double ecc(const EntailmentMatrix& m, double eig_threshold) {
    if (!(eig_threshold > 0.0 && eig_threshold <= 2.0))
        throw InvalidArgument("eig_threshold must lie in (0,2]");
    const auto es = laplacian_eigen(m);
    const Eigen::VectorXd& lambdas = es.eigenvalues();
    std::vector<Eigen::Index> kept;
    for (Eigen::Index k = 0; k < lambdas.size(); ++k)
        if (lambdas(k) < eig_threshold) kept.push_back(k);
    if (kept.empty()) return 0.0;

    const Eigen::Index n = lambdas.size();
    Eigen::MatrixXd embed(n, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c)
        embed.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(kept[c]);
    const Eigen::RowVectorXd centre = embed.colwise().mean();
    double spread = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) spread += (embed.row(j) - centre).squaredNorm();
    return std::sqrt(spread);
}

double kle(const EntailmentMatrix& m) {
    const Eigen::MatrixXd w = symmetrize(m).values();
    const double trace = w.trace();
    if (!(trace > 0.0)) throw InvalidArgument("KLE needs a matrix with positive trace");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w / trace, Eigen::EigenvaluesOnly);
    // Indefinite inputs: clip negative eigenvalues and renormalize, so the
    // spectrum is a distribution and the entropy stays within [0, ln m].
    double mass = 0.0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        mass += std::max(0.0, es.eigenvalues()(k));
    double h = 0.0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double lam = es.eigenvalues()(k) / mass;
        if (lam > 0.0) h -= lam * std::log(lam);
    }
    return h;
}

double combined_score(const EntailmentMatrix& p_self, const EntailmentMatrix& p_cross,
                      double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0,1]");
    return (1.0 - lambda) * mpd(p_self) + lambda * mpd(p_cross);
}

std::string Metric::name() const {
    std::ostringstream os;
    switch (kind) {
        case MetricKind::MpdSelf: return "mpd_self";
        case MetricKind::MpdCross: return "mpd_cross";
        case MetricKind::EigV: return "eigv";
        case MetricKind::Kle: return "kle";
        case MetricKind::SemanticEntropy: os << "se(theta=" << theta << ")"; break;
        case MetricKind::Ecc: os << "ecc(eig_threshold=" << eig_threshold << ")"; break;
        case MetricKind::Combined: os << "combined(lambda=" << lambda << ")"; break;
    }
    return os.str();
}

void Metric::validate() const {
    if (kind == MetricKind::Combined && !(lambda >= 0.0 && lambda <= 1.0))
        throw InvalidArgument("combined metric needs lambda in [0,1]");
    if (kind == MetricKind::SemanticEntropy && !(theta > 0.0 && theta < 1.0))
        throw InvalidArgument("semantic entropy needs theta in (0,1)");
    if (kind == MetricKind::Ecc && !(eig_threshold > 0.0 && eig_threshold <= 2.0))
        throw InvalidArgument("ecc needs eig_threshold in (0,2]");
}

MetricKind parse_metric_kind(const std::string& name) {
    if (name == "mpd_self" || name == "mpd") return MetricKind::MpdSelf;
    if (name == "mpd_cross") return MetricKind::MpdCross;
    if (name == "se" || name == "semantic_entropy") return MetricKind::SemanticEntropy;
    if (name == "eigv") return MetricKind::EigV;
    if (name == "ecc") return MetricKind::Ecc;
    if (name == "kle") return MetricKind::Kle;
    if (name == "combined") return MetricKind::Combined;
    throw InvalidArgument("unknown metric '" + name + "'");
}

namespace {

const EntailmentMatrix& need_self(const QuestionCase& c) {
    if (!c.p_self) throw MissingMatrix("case " + c.id + " has no p_self matrix");
    return *c.p_self;
}

const EntailmentMatrix& need_cross(const QuestionCase& c) {
    if (!c.p_cross) throw MissingMatrix("case " + c.id + " has no p_cross matrix");
    return *c.p_cross;
}

}  // namespace

double metric_value(const QuestionCase& c, const Metric& metric) {
    metric.validate();
    switch (metric.kind) {
        case MetricKind::MpdSelf: return mpd(need_self(c));
        case MetricKind::MpdCross: return mpd(need_cross(c));
        case MetricKind::SemanticEntropy: return semantic_entropy(need_self(c), metric.theta);
        case MetricKind::EigV: return eigv(need_self(c));
        case MetricKind::Ecc: return ecc(need_self(c), metric.eig_threshold);
        case MetricKind::Kle: return kle(need_self(c));
        case MetricKind::Combined: {
            const auto& self = need_self(c);
            return combined_score(self, need_cross(c), metric.lambda);
        }
    }
    throw InvalidArgument("unhandled metric");
}

ScoreRecord score_case(const QuestionCase& c, const Metric& metric) {
    const double v = metric_value(c, metric);
    if (!std::isfinite(v)) throw RangeError("non-finite score for case " + c.id);
    return ScoreRecord{c.id, metric.name(), v};
}

}  // namespace crosscheck
