#include "crosscheck/core.hpp"

#include <cmath>
#include <sstream>

namespace crosscheck {

const char* to_string(MatrixKind kind) {
    switch (kind) {
        case MatrixKind::SelfTarget: return "self_target";
        case MatrixKind::CrossTargetVerifier: return "cross_target_verifier";
        case MatrixKind::TargetTruth: return "target_truth";
    }
    return "unknown";
}

std::vector<std::vector<double>> EntailmentMatrix::to_rows() const {
    std::vector<std::vector<double>> rows(size(), std::vector<double>(size()));
    for (std::size_t r = 0; r < size(); ++r)
        for (std::size_t c = 0; c < size(); ++c) rows[r][c] = (*this)(r, c);
    return rows;
}

EntailmentMatrix validate_matrix(const Eigen::MatrixXd& raw, MatrixKind kind) {
    if (raw.rows() != raw.cols()) {
        std::ostringstream os;
        os << "entailment matrix must be square, got " << raw.rows() << "x" << raw.cols();
        throw ShapeError(os.str());
    }
    if (raw.rows() < 2) {
        throw ShapeError("entailment matrix needs at least 2 answers, got " +
                         std::to_string(raw.rows()));
    }
    for (Eigen::Index r = 0; r < raw.rows(); ++r) {
        for (Eigen::Index c = 0; c < raw.cols(); ++c) {
            const double e = raw(r, c);
            // NaN fails both comparisons and lands here as well.
            if (!(e >= 0.0 && e <= 1.0)) {
                std::ostringstream os;
                os << "entry (" << r << "," << c << ") = " << e << " outside [0,1]";
                throw RangeError(os.str());
            }
        }
    }
    if (kind == MatrixKind::SelfTarget) {
        for (Eigen::Index j = 0; j < raw.rows(); ++j) {
            if (raw(j, j) < kSelfDiagonalFloor) {
                std::ostringstream os;
                os << "self-entailment diagonal (" << j << ") = " << raw(j, j) << " below "
                   << kSelfDiagonalFloor;
                throw DiagonalError(os.str());
            }
        }
    }
    return EntailmentMatrix(kind, raw);
}

EntailmentMatrix validate_matrix(const std::vector<std::vector<double>>& raw, MatrixKind kind) {
    const std::size_t rows = raw.size();
    const std::size_t cols = rows == 0 ? 0 : raw.front().size();
    for (const auto& row : raw) {
        if (row.size() != cols) throw ShapeError("entailment matrix rows have unequal length");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = raw[r][c];
    return validate_matrix(m, kind);
}

EntailmentMatrix validate_matrix(std::initializer_list<std::initializer_list<double>> raw,
                                 MatrixKind kind) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : raw) rows.emplace_back(r);
    return validate_matrix(rows, kind);
}

EntailmentMatrix symmetrize(const EntailmentMatrix& m) {
    const Eigen::MatrixXd& v = m.values();
    Eigen::MatrixXd s(v.rows(), v.cols());
    for (Eigen::Index r = 0; r < v.rows(); ++r)
        for (Eigen::Index c = 0; c < v.cols(); ++c) s(r, c) = (v(r, c) + v(c, r)) / 2.0;
    return validate_matrix(s, m.kind());
}

BoolMatrix binarize(const EntailmentMatrix& m, double theta) {
    if (!(theta > 0.0 && theta < 1.0))
        throw InvalidArgument("binarization threshold must lie in (0,1)");
    const std::size_t n = m.size();
    BoolMatrix b(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) b.set(j, k, m(j, k) > theta && m(k, j) > theta);
    return b;
}

void SamplingConfig::validate() const {
    if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
    if (!(tau_prime >= tau)) throw InvalidArgument("tau_prime must be >= tau");
    if (m < 2) throw InvalidArgument("m must be at least 2");
}

void QuestionCase::validate() const {
    if (p_self && target_samples && p_self->size() != target_samples->size()) {
        throw ShapeError("case " + id + ": p_self size " + std::to_string(p_self->size()) +
                         " does not match " + std::to_string(target_samples->size()) +
                         " target samples");
    }
    if (p_cross && verifier_samples && p_cross->size() != verifier_samples->size()) {
        throw ShapeError("case " + id + ": p_cross size " + std::to_string(p_cross->size()) +
                         " does not match " + std::to_string(verifier_samples->size()) +
                         " verifier samples");
    }
    if (p_self && p_cross && p_self->size() != p_cross->size()) {
        throw ShapeError("case " + id + ": p_self and p_cross sizes differ");
    }
}

}  // namespace crosscheck
