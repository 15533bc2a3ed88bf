#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfc/graph_ops.hpp"

namespace gridfc {

/// Shape bundle shared by every tensor of one network.
struct GrqnDims {
    int n = 0;            ///< buses
    int f = 1;            ///< input features per bus
    int h = 12;           ///< latent features per bus
    int g = 12;           ///< output features per bus
    int k = 3;            ///< filter taps (hops + 1)
    int d = 64;           ///< hidden width of the value head
    int num_actions = 0;  ///< one value per removable component

    bool operator==(const GrqnDims&) const = default;
};

/// All learnable tensors. Also used as the gradient/moment holder: a gradient
/// is just a GrqnParams with the same dims.
struct GrqnParams {
    GrqnDims dims;
    std::vector<Eigen::MatrixXd> h1;  ///< K × (F×H), input filter
    std::vector<Eigen::MatrixXd> h2;  ///< K × (H×H), recurrence filter
    std::vector<Eigen::MatrixXd> h3;  ///< K × (H×G), output filter
    Eigen::VectorXd b_z;              ///< H
    Eigen::VectorXd b_y;              ///< G
    Eigen::MatrixXd w_hid;            ///< (N·G)×D
    Eigen::VectorXd b_hid;            ///< D
    Eigen::MatrixXd w_out;            ///< D×|U|
    Eigen::VectorXd b_out;            ///< |U|

    static GrqnParams zeros(const GrqnDims& dims);
    /// Uniform ±1/√fan_in per tensor; one fixed draw order.
    static GrqnParams init(const GrqnDims& dims, std::mt19937_64& rng);

    /// Flat views over every tensor in one fixed order (h1…, h2…, h3…, b_z,
    /// b_y, w_hid, b_hid, w_out, b_out) for optimizers and serialization.
    std::vector<Eigen::Map<Eigen::VectorXd>> flat_views();
    std::vector<Eigen::Map<const Eigen::VectorXd>> flat_views() const;
    std::vector<std::string> tensor_names() const;

    std::size_t parameter_count() const;

    std::string to_json() const;
    static GrqnParams from_json(const std::string& text);
};

/// One observation prepared for network consumption: the topology's shift
/// operator plus the node-state matrix.
struct GraphObs {
    std::shared_ptr<const ShiftOperator> shift;  ///< B_i
    Eigen::MatrixXd x;                           ///< N×F
};

/// Per-bus latent memory. The shift operator that produced it rides along
/// because the recurrence re-shifts the latent on the previous topology.
struct LatentState {
    Eigen::MatrixXd z;                           ///< N×H
    std::shared_ptr<const ShiftOperator> shift;  ///< null ⇔ zero initial state

    static LatentState zero(int n, int h);
};

/// Cached intermediates of one stage, enough to run the stage backwards.
struct StageTape {
    GraphObs obs;
    std::shared_ptr<const ShiftOperator> prev_shift;
    std::vector<Eigen::MatrixXd> s1;  ///< B_i^{k−1}·X_i
    std::vector<Eigen::MatrixXd> s2;  ///< B_{i−1}^{k−1}·Z_{i−1}
    std::vector<Eigen::MatrixXd> s3;  ///< B_i^{k−1}·Z_i
    Eigen::MatrixXd z;                ///< N×H
    Eigen::MatrixXd y;                ///< N×G
    Eigen::VectorXd v;                ///< row-major vec(Y), N·G
    Eigen::VectorXd h_pre, h;         ///< D
    Eigen::VectorXd q;                ///< |U|
};

struct ForwardTape {
    std::vector<StageTape> stages;
};

/// Latent update: tanh of input filter + recurrence filter + bias.
LatentState grnn_step(const GraphObs& obs, const LatentState& prev, const GrqnParams& params);

/// Output map: tanh of the latent filtered on its own topology + bias.
Eigen::MatrixXd grnn_output(const LatentState& latent, const GrqnParams& params);

/// Value head over the flattened output map: W_out^T·relu(W_hid^T·vec(Y)+b_hid)+b_out.
Eigen::VectorXd q_head(const Eigen::MatrixXd& y, const GrqnParams& params);

struct SequenceResult {
    std::vector<Eigen::VectorXd> q;  ///< per stage, |U|
    std::vector<Eigen::MatrixXd> y;  ///< per stage, N×G
    LatentState final_latent;
    ForwardTape tape;
};

/// Full unroll over an observation sequence starting from z0.
SequenceResult forward_sequence(const std::vector<GraphObs>& observations,
                                const LatentState& z0, const GrqnParams& params);

/// Same unroll, values only — no tape, no per-stage caches. Used where the
/// result never needs a backward pass (e.g. bootstrap targets).
std::vector<Eigen::VectorXd> forward_q_only(const std::vector<GraphObs>& observations,
                                            const LatentState& z0, const GrqnParams& params);

/// Exact reverse-mode gradients for every tensor given per-stage dL/dq.
/// The initial latent is treated as a constant.
GrqnParams backward(const ForwardTape& tape, const std::vector<Eigen::VectorXd>& dq,
                    const GrqnParams& params);

/// In-place global-norm clip; no-op when max_norm ≤ 0 or the norm is within.
void clip_grad_norm(GrqnParams& grads, double max_norm);

}  // namespace gridfc
