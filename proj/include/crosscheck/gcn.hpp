#pragma once

// Two-layer graph convolutional network over entailment graphs, trained with
// binary cross-entropy as a supervised ceiling for what the matrices reveal
// about the hallucination label.

#include "crosscheck/core.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crosscheck::gcn {

inline constexpr Eigen::Index kInputDim = 3;  // [bias, degree / size, verifier indicator]

struct ConsistencyGraph {
    Eigen::MatrixXd adjacency;  // symmetric, self-loops included
    Eigen::MatrixXd features;   // one row per node
};

/// Self-only: symmetrized p_self. With p_cross: the symmetrized 2m x 2m
/// block matrix [[P_self, P_cross], [P_cross^T, I]].
ConsistencyGraph build_graph(const EntailmentMatrix& p_self,
                             const std::optional<EntailmentMatrix>& p_cross = std::nullopt);

/// D^{-1/2} A D^{-1/2}
Eigen::MatrixXd normalized_adjacency(const Eigen::MatrixXd& adjacency);

struct GcnParams {
    Eigen::MatrixXd w1;     // kInputDim x hidden
    Eigen::MatrixXd w2;     // hidden x hidden
    Eigen::VectorXd w_out;  // hidden
    double b_out = 0.0;

    static GcnParams zeros(Eigen::Index hidden);
    /// Glorot-uniform weights, zero bias.
    static GcnParams random(Eigen::Index hidden, std::uint64_t seed);

    Eigen::Index hidden() const { return w2.rows(); }
    void validate() const;

    GcnParams& operator+=(const GcnParams& o);
    GcnParams& operator*=(double s);
    double squared_norm() const;

    friend bool operator==(const GcnParams& a, const GcnParams& b) {
        return a.w1 == b.w1 && a.w2 == b.w2 && a.w_out == b.w_out && a.b_out == b.b_out;
    }
};

/// sigmoid(mean_nodes(relu(Â relu(Â X W1) W2) w_out) + b_out)
double gcn_forward(const GcnParams& params, const ConsistencyGraph& graph);

struct ForwardResult {
    double output = 0.0;
    GcnParams grad;  // d BCE / d params
};

/// Exact gradient of the binary cross-entropy against label.
ForwardResult gcn_grad(const GcnParams& params, const ConsistencyGraph& graph, bool label);

double bce(double output, bool label);

struct Example {
    ConsistencyGraph graph;
    bool label = false;
};

struct TrainConfig {
    double lr = 0.05;
    std::size_t epochs = 2000;
    Eigen::Index hidden = 16;
    std::uint64_t seed = 0;
    std::size_t patience = 100;
};

struct TrainResult {
    GcnParams params;
    double val_auroc = 0.5;
    std::size_t epochs_run = 0;
};

/// Mean BCE and its gradient over a batch.
ForwardResult batch_loss(const GcnParams& params, std::span<const Example> batch);

/// Full-batch gradient descent; keeps the parameters with the best
/// validation AUROC and stops after `patience` epochs without improvement.
TrainResult train(std::span<const Example> train_set, std::span<const Example> val_set,
                  const TrainConfig& config);

std::vector<double> predict(const GcnParams& params, std::span<const Example> examples);

struct CeilingResult {
    double auroc = 0.0;
    double aurac = 0.0;
};

/// Shuffles cases with split_seed, splits 60/20/20 into train/val/test,
/// trains, and reports the learned scorer's test AUROC/AURAC.
CeilingResult ceiling_estimate(std::span<const QuestionCase> cases, bool use_cross,
                               std::uint64_t split_seed, const TrainConfig& config = {});

std::string params_to_json(const GcnParams& params);
GcnParams params_from_json(const std::string& text);

}  // namespace crosscheck::gcn
