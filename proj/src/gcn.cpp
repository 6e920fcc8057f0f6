#include "crosscheck/gcn.hpp"

#include "crosscheck/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace crosscheck::gcn {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

ConsistencyGraph build_graph(const EntailmentMatrix& p_self,
                             const std::optional<EntailmentMatrix>& p_cross) {
    const Index m = static_cast<Index>(p_self.size());
    ConsistencyGraph g;
    if (!p_cross) {
        g.adjacency = symmetrize(p_self).values();
        g.features = MatrixXd::Zero(m, kInputDim);
    } else {
        if (p_cross->size() != p_self.size())
            throw ShapeError("p_self and p_cross must have the same size");
        MatrixXd block = MatrixXd::Zero(2 * m, 2 * m);
        block.topLeftCorner(m, m) = p_self.values();
        block.topRightCorner(m, m) = p_cross->values();
        block.bottomLeftCorner(m, m) = p_cross->values().transpose();
        block.bottomRightCorner(m, m) = MatrixXd::Identity(m, m);
        g.adjacency = (block + block.transpose()) / 2.0;
        g.features = MatrixXd::Zero(2 * m, kInputDim);
        g.features.col(2).tail(m).setOnes();
    }
    const double size = static_cast<double>(g.adjacency.rows());
    g.features.col(0).setOnes();
    g.features.col(1) = g.adjacency.rowwise().sum() / size;
    return g;
}

MatrixXd normalized_adjacency(const MatrixXd& adjacency) {
    const VectorXd deg = adjacency.rowwise().sum();
    VectorXd inv_sqrt(deg.size());
    for (Index i = 0; i < deg.size(); ++i) inv_sqrt(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
    return inv_sqrt.asDiagonal() * adjacency * inv_sqrt.asDiagonal();
}

GcnParams GcnParams::zeros(Index hidden) {
    GcnParams p;
    p.w1 = MatrixXd::Zero(kInputDim, hidden);
    p.w2 = MatrixXd::Zero(hidden, hidden);
    p.w_out = VectorXd::Zero(hidden);
    p.b_out = 0.0;
    return p;
}

GcnParams GcnParams::random(Index hidden, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto glorot = [&](Index fan_in, Index fan_out) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> u(-limit, limit);
        MatrixXd w(fan_in, fan_out);
        for (Index r = 0; r < fan_in; ++r)
            for (Index c = 0; c < fan_out; ++c) w(r, c) = u(rng);
        return w;
    };
    GcnParams p;
    p.w1 = glorot(kInputDim, hidden);
    p.w2 = glorot(hidden, hidden);
    p.w_out = glorot(hidden, 1).col(0);
    p.b_out = 0.0;
    return p;
}

void GcnParams::validate() const {
    if (w1.rows() != kInputDim) throw ShapeError("W1 must have 3 input rows");
    if (w2.rows() != w1.cols() || w2.cols() != w1.cols())
        throw ShapeError("W2 must be hidden x hidden");
    if (w_out.size() != w1.cols()) throw ShapeError("readout must have hidden entries");
    if (!w1.allFinite() || !w2.allFinite() || !w_out.allFinite() || !std::isfinite(b_out))
        throw RangeError("GCN parameters must be finite");
}

GcnParams& GcnParams::operator+=(const GcnParams& o) {
    w1 += o.w1;
    w2 += o.w2;
    w_out += o.w_out;
    b_out += o.b_out;
    return *this;
}

GcnParams& GcnParams::operator*=(double s) {
    w1 *= s;
    w2 *= s;
    w_out *= s;
    b_out *= s;
    return *this;
}

double GcnParams::squared_norm() const {
    return w1.squaredNorm() + w2.squaredNorm() + w_out.squaredNorm() + b_out * b_out;
}

namespace {

struct Prepared {
    MatrixXd a_hat;
    MatrixXd ax;  // Â X, fixed per graph
};

Prepared prepare(const ConsistencyGraph& g) {
    if (g.adjacency.rows() != g.adjacency.cols() || g.features.rows() != g.adjacency.rows() ||
        g.features.cols() != kInputDim)
        throw ShapeError("graph adjacency and features disagree");
    Prepared p;
    p.a_hat = normalized_adjacency(g.adjacency);
    p.ax = p.a_hat * g.features;
    return p;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Loss from the logit avoids log(0) when the output saturates.
double bce_from_logit(double z, bool label) {
    const double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    return softplus - (label ? z : 0.0);
}

struct Pass {
    MatrixXd z1, h1, ah1, z2, h2;
    double logit = 0.0;
};

Pass forward_pass(const GcnParams& w, const Prepared& g) {
    Pass f;
    f.z1 = g.ax * w.w1;
    f.h1 = f.z1.cwiseMax(0.0);
    f.ah1 = g.a_hat * f.h1;
    f.z2 = f.ah1 * w.w2;
    f.h2 = f.z2.cwiseMax(0.0);
    f.logit = (f.h2 * w.w_out).mean() + w.b_out;
    return f;
}

ForwardResult backward_pass(const GcnParams& w, const Prepared& g, bool label,
                            double* logit_out = nullptr) {
    const Pass f = forward_pass(w, g);
    if (logit_out) *logit_out = f.logit;
    ForwardResult r;
    r.output = sigmoid(f.logit);
    const double dz = r.output - (label ? 1.0 : 0.0);
    const double n = static_cast<double>(f.h2.rows());

    r.grad.b_out = dz;
    r.grad.w_out = dz * f.h2.colwise().mean().transpose();
    const MatrixXd d_h2 = (dz / n) * VectorXd::Ones(f.h2.rows()) * w.w_out.transpose();
    const MatrixXd d_z2 = d_h2.cwiseProduct((f.z2.array() > 0.0).cast<double>().matrix());
    r.grad.w2 = f.ah1.transpose() * d_z2;
    const MatrixXd d_h1 = g.a_hat.transpose() * (d_z2 * w.w2.transpose());
    const MatrixXd d_z1 = d_h1.cwiseProduct((f.z1.array() > 0.0).cast<double>().matrix());
    r.grad.w1 = g.ax.transpose() * d_z1;
    return r;
}

// Returns the mean gradient; `output` holds the mean loss.
ForwardResult batch_loss_prepared(const GcnParams& params, std::span<const Prepared> graphs,
                                  std::span<const Example> batch) {
    ForwardResult total;
    total.grad = GcnParams::zeros(params.hidden());
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double logit = 0.0;
        const auto r = backward_pass(params, graphs[i], batch[i].label, &logit);
        total.grad += r.grad;
        loss += bce_from_logit(logit, batch[i].label);
    }
    const double inv = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
    total.grad *= inv;
    total.output = loss * inv;
    return total;
}

std::vector<Prepared> prepare_all(std::span<const Example> examples) {
    std::vector<Prepared> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back(prepare(e.graph));
    return out;
}

std::vector<double> predict_prepared(const GcnParams& params, std::span<const Prepared> graphs) {
    std::vector<double> out;
    out.reserve(graphs.size());
    for (const auto& g : graphs) out.push_back(sigmoid(forward_pass(params, g).logit));
    return out;
}

std::vector<bool> labels_of(std::span<const Example> examples) {
    std::vector<bool> labels;
    labels.reserve(examples.size());
    for (const auto& e : examples) labels.push_back(e.label);
    return labels;
}

}  // namespace

double bce(double output, bool label) {
    const double o = std::clamp(output, 1e-15, 1.0 - 1e-15);
    return label ? -std::log(o) : -std::log1p(-o);
}

double gcn_forward(const GcnParams& params, const ConsistencyGraph& graph) {
    params.validate();
    return sigmoid(forward_pass(params, prepare(graph)).logit);
}

ForwardResult gcn_grad(const GcnParams& params, const ConsistencyGraph& graph, bool label) {
    params.validate();
    return backward_pass(params, prepare(graph), label);
}

ForwardResult batch_loss(const GcnParams& params, std::span<const Example> batch) {
    params.validate();
    const auto graphs = prepare_all(batch);
    return batch_loss_prepared(params, graphs, batch);
}

std::vector<double> predict(const GcnParams& params, std::span<const Example> examples) {
    return predict_prepared(params, prepare_all(examples));
}

TrainResult train(std::span<const Example> train_set, std::span<const Example> val_set,
                  const TrainConfig& config) {
    if (train_set.empty()) throw InvalidArgument("empty training set");
    if (!(config.lr > 0.0)) throw InvalidArgument("learning rate must be positive");
    const auto train_graphs = prepare_all(train_set);
    const auto val_graphs = prepare_all(val_set);
    const auto val_labels = labels_of(val_set);

    GcnParams params = GcnParams::random(config.hidden, config.seed);
    auto val_score = [&](const GcnParams& p) {
        if (val_set.empty()) return 0.5;
        const auto scores = predict_prepared(p, val_graphs);
        return auroc(scores, val_labels);
    };

    TrainResult best{params, val_score(params), 0};
    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        ForwardResult step = batch_loss_prepared(params, train_graphs, train_set);
        step.grad *= -config.lr;
        params += step.grad;
        const double score = val_score(params);
        if (score > best.val_auroc) {
            best.params = params;
            best.val_auroc = score;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            best.epochs_run = epoch;
            return best;
        }
        best.epochs_run = epoch;
    }
    return best;
}

CeilingResult ceiling_estimate(std::span<const QuestionCase> cases, bool use_cross,
                               std::uint64_t split_seed, const TrainConfig& config) {
    if (cases.size() < 40) throw InvalidArgument("ceiling estimate needs at least 40 cases");
    std::vector<Example> examples;
    examples.reserve(cases.size());
    for (const auto& c : cases) {
        if (!c.label) throw MissingLabel("case " + c.id + " has no label");
        if (!c.p_self) throw MissingMatrix("case " + c.id + " has no p_self matrix");
        if (use_cross && !c.p_cross) throw MissingMatrix("case " + c.id + " has no p_cross matrix");
        examples.push_back({build_graph(*c.p_self, use_cross ? c.p_cross : std::nullopt), *c.label});
    }
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(split_seed);
    std::shuffle(order.begin(), order.end(), rng);

    const std::size_t n = examples.size();
    const std::size_t n_train = n * 3 / 5;
    const std::size_t n_val = n / 5;
    std::vector<Example> tr, va, te;
    for (std::size_t i = 0; i < n; ++i) {
        auto& dst = i < n_train ? tr : (i < n_train + n_val ? va : te);
        dst.push_back(examples[order[i]]);
    }
    const TrainResult trained = train(tr, va, config);
    const auto scores = predict(trained.params, te);
    const auto labels = labels_of(te);
    return {auroc(scores, labels), aurac(scores, labels)};
}

namespace {

nlohmann::json matrix_json(const MatrixXd& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

MatrixXd matrix_from_json(const nlohmann::json& j, const char* name) {
    const auto shape = j.at("shape").get<std::vector<Index>>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] * shape[1] != static_cast<Index>(data.size()))
        throw ShapeError(std::string("checkpoint field ") + name + " has inconsistent shape");
    MatrixXd m(shape[0], shape[1]);
    for (Index r = 0; r < shape[0]; ++r)
        for (Index c = 0; c < shape[1]; ++c) m(r, c) = data[static_cast<std::size_t>(r * shape[1] + c)];
    return m;
}

}  // namespace

std::string params_to_json(const GcnParams& params) {
    nlohmann::json j;
    j["format"] = "crosscheck-gcn";
    j["version"] = 1;
    j["d_in"] = kInputDim;
    j["d_h"] = params.hidden();
    j["w1"] = matrix_json(params.w1);
    j["w2"] = matrix_json(params.w2);
    std::vector<double> w_out(params.w_out.data(), params.w_out.data() + params.w_out.size());
    j["w_out"] = {{"shape", {params.w_out.size()}}, {"data", w_out}};
    j["b_out"] = params.b_out;
    return j.dump();
}

GcnParams params_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed GCN checkpoint: ") + e.what());
    }
    if (j.value("format", "") != "crosscheck-gcn" || j.value("version", 0) != 1)
        throw InvalidArgument("unsupported GCN checkpoint format");
    GcnParams p;
    p.w1 = matrix_from_json(j.at("w1"), "w1");
    p.w2 = matrix_from_json(j.at("w2"), "w2");
    const auto w_out = j.at("w_out").at("data").get<std::vector<double>>();
    p.w_out = Eigen::Map<const VectorXd>(w_out.data(), static_cast<Index>(w_out.size()));
    p.b_out = j.at("b_out").get<double>();
    if (j.at("d_h").get<Index>() != p.hidden()) throw ShapeError("checkpoint d_h mismatch");
    p.validate();
    return p;
}

}  // namespace crosscheck::gcn
