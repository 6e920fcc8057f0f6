#pragma once

// Domain types shared by every module: entailment matrices, question cases,
// sampling settings and score records, plus the error hierarchy.

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace crosscheck {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};
class RangeError : public Error {
public:
    using Error::Error;
};
class DiagonalError : public Error {
public:
    using Error::Error;
};
class MissingMatrix : public Error {
public:
    using Error::Error;
};
class MissingLabel : public Error {
public:
    using Error::Error;
};
class InvalidArgument : public Error {
public:
    using Error::Error;
};

enum class MatrixKind { SelfTarget, CrossTargetVerifier, TargetTruth };

const char* to_string(MatrixKind kind);

/// Self-entailment diagonal entries below this value mark a broken provider.
inline constexpr double kSelfDiagonalFloor = 0.5;

/// Square matrix of entailment probabilities. Entry (j, k) holds
/// E(row answer j, column answer k). Only constructible through
/// validate_matrix, so every instance satisfies the range/shape invariants.
class EntailmentMatrix {
public:
    MatrixKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    double operator()(std::size_t row, std::size_t col) const {
        return values_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    std::vector<std::vector<double>> to_rows() const;

    friend bool operator==(const EntailmentMatrix& a, const EntailmentMatrix& b) {
        return a.kind_ == b.kind_ && a.values_.rows() == b.values_.rows() &&
               a.values_.cols() == b.values_.cols() && a.values_ == b.values_;
    }

private:
    EntailmentMatrix(MatrixKind kind, Eigen::MatrixXd values)
        : kind_(kind), values_(std::move(values)) {}

    friend EntailmentMatrix validate_matrix(const Eigen::MatrixXd&, MatrixKind);

    MatrixKind kind_;
    Eigen::MatrixXd values_;
};

/// Throws ShapeError, RangeError or DiagonalError.
EntailmentMatrix validate_matrix(const Eigen::MatrixXd& raw, MatrixKind kind);
/// Rows of unequal length are a ShapeError.
EntailmentMatrix validate_matrix(const std::vector<std::vector<double>>& raw, MatrixKind kind);
/// Literal form, validate_matrix({{1, 0.2}, {0.8, 1}}, kind).
EntailmentMatrix validate_matrix(std::initializer_list<std::initializer_list<double>> raw,
                                 MatrixKind kind);

/// (M + M^T) / 2, same kind.
EntailmentMatrix symmetrize(const EntailmentMatrix& m);

struct BoolMatrix {
    std::size_t n = 0;
    std::vector<unsigned char> cells;

    explicit BoolMatrix(std::size_t size = 0) : n(size), cells(size * size, 0) {}
    bool operator()(std::size_t r, std::size_t c) const { return cells[r * n + c] != 0; }
    void set(std::size_t r, std::size_t c, bool v) { cells[r * n + c] = v ? 1 : 0; }
    friend bool operator==(const BoolMatrix&, const BoolMatrix&) = default;
};

/// Bidirectional entailment test: B(j,k) iff M(j,k) > theta and M(k,j) > theta.
BoolMatrix binarize(const EntailmentMatrix& m, double theta);

struct SamplingConfig {
    double tau = 0.1;
    double tau_prime = 1.0;
    std::size_t m = 10;

    void validate() const;
};

struct QuestionCase {
    std::string id;
    std::string question;
    std::optional<std::string> low_temp_answer;
    std::optional<std::vector<std::string>> target_samples;
    std::optional<std::vector<std::string>> verifier_samples;
    std::optional<EntailmentMatrix> p_self;
    std::optional<EntailmentMatrix> p_cross;
    std::optional<bool> label;  // true = hallucination
    // Fields not understood by this library, kept as serialized JSON text so a
    // rewrite reproduces them.
    std::map<std::string, std::string> extra;

    /// Throws ShapeError when the sample counts disagree with matrix sizes.
    void validate() const;

    friend bool operator==(const QuestionCase&, const QuestionCase&) = default;
};

struct ScoreRecord {
    std::string question_id;
    std::string metric_name;
    double value = 0.0;  // higher means more likely hallucination
};

}  // namespace crosscheck
