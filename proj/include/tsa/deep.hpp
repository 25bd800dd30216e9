#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace tsa::deep {

enum class ActivationKind { sigmoid, tanh, relu, softplus, linear };

std::string to_string(ActivationKind kind);
ActivationKind activation_from_string(const std::string& name);

/// Elementwise activation and its derivative with respect to the pre-activation.
/// Add a kind by extending both switch statements in deep.cpp.
struct Activation {
    ActivationKind kind = ActivationKind::tanh;

    [[nodiscard]] Eigen::MatrixXd operator()(const Eigen::MatrixXd& a) const;
    [[nodiscard]] Eigen::MatrixXd derivative(const Eigen::MatrixXd& a) const;
};

enum class InitKind { uniform, normal, truncated_normal };

struct Initializer {
    InitKind kind = InitKind::uniform;
    double a = -0.5;  ///< uniform lower bound, or normal mean
    double b = 0.5;   ///< uniform upper bound, or normal standard deviation
    std::uint64_t seed = 42;

    static Initializer uniform(double lo, double hi, std::uint64_t seed = 42) { return {InitKind::uniform, lo, hi, seed}; }
    static Initializer normal(double mean, double stddev, std::uint64_t seed = 42) {
        return {InitKind::normal, mean, stddev, seed};
    }
    /// Redraws until |z - mean| <= 2 stddev.
    static Initializer truncated_normal(double mean, double stddev, std::uint64_t seed = 42) {
        return {InitKind::truncated_normal, mean, stddev, seed};
    }
};

enum class CellKind { simple, lstm, gru };

std::string to_string(CellKind kind);
CellKind cell_from_string(const std::string& name);

/// Number of gate blocks: LSTM {f, i, candidate, o}, GRU {z, r, candidate}, simple {h}.
int gate_count(CellKind kind);

/**
 * @brief Weights of one recurrent cell.
 *
 * Every gate g has W[g] of shape hidden x (hidden + input) acting on the
 * concatenation [h_{t-1}; x_t] and a bias b[g] of length hidden.
 */
struct CellParams {
    CellKind kind = CellKind::lstm;
    int hidden = 1;
    int input = 1;
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> b;

    static CellParams zeros(CellKind kind, int hidden, int input);
};

/// Single steps on column batches (one column per sample).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> lstm_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev,
                                                      const Eigen::MatrixXd& c_prev, const CellParams& params,
                                                      Activation activation = {});
Eigen::MatrixXd gru_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev, const CellParams& params,
                         Activation activation = {});
Eigen::MatrixXd simple_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev, const CellParams& params,
                            Activation activation = {});

struct RnnConfig {
    CellKind cell = CellKind::lstm;
    bool bidirectional = false;
    bool stateful = false;
    int window = 8;
    int hidden = 16;
    Activation activation{};
    Initializer initializer{};
    double learning_rate = 0.01;
    int epochs = 100;
    int batch_size = 32;

    void validate() const;
};

struct RnnModel {
    RnnConfig config;
    CellParams forward_cell;
    CellParams backward_cell;  ///< used only when bidirectional
    Eigen::VectorXd head_w;    ///< hidden, or 2 * hidden when bidirectional
    double head_b = 0.0;
    double mean = 0.0;   ///< standardization of the training series
    double scale = 1.0;

    /// Fresh model with initializer-drawn weights, zero biases and forget-gate bias 1.
    static RnnModel initialize(const RnnConfig& config);

    [[nodiscard]] Eigen::Index parameter_count() const;
    /// All parameters, row-major per matrix: forward cell gates (W then b), backward cell, head w, head b.
    [[nodiscard]] Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& flat);

    [[nodiscard]] double standardize(double v) const { return (v - mean) / scale; }
    [[nodiscard]] double destandardize(double v) const { return mean + scale * v; }
};

/// Recurrent state carried between calls in stateful mode (hidden size x batch).
struct RecurrentState {
    Eigen::MatrixXd h;
    Eigen::MatrixXd c;
};

/// windows: window x batch matrix in model (standardized) units; returns 1 x batch predictions.
Eigen::RowVectorXd forward_batch(const RnnModel& model, const Eigen::MatrixXd& windows, RecurrentState* state = nullptr);
double forward(const RnnModel& model, const Eigen::VectorXd& window);

struct BatchGradients {
    double loss = 0.0;
    Eigen::VectorXd gradient;  ///< same layout as RnnModel::flatten()
    Eigen::RowVectorXd predictions;
};

/// Exact MSE gradients through the full unroll, averaged over the batch.
/// With `state`, starts from and updates the carried state (gradients do not flow into it).
BatchGradients bptt_gradients(const RnnModel& model, const Eigen::MatrixXd& windows, const Eigen::RowVectorXd& targets,
                              RecurrentState* state = nullptr);

/// Mean squared error of a batch without gradients.
double batch_loss(const RnnModel& model, const Eigen::MatrixXd& windows, const Eigen::RowVectorXd& targets);

struct TrainResult {
    RnnModel model;
    std::vector<double> loss_history;  ///< mean training loss per epoch (standardized units)
};

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) over batches in time order. The
/// series is z-scored with its own mean and spread, stored in the model.
TrainResult train(const RnnConfig& config, const Eigen::VectorXd& series);

/// Lag windows of a standardized series: (window x count inputs, 1 x count targets).
std::pair<Eigen::MatrixXd, Eigen::RowVectorXd> make_windows(const Eigen::VectorXd& series, int window);

enum class PredictMode { one_step, recursive };

/// Predictions in series units for the points following `history`.
/// one_step uses the observed `future` values as lags; recursive feeds predictions
/// back and only uses future.size() as the horizon.
Eigen::VectorXd predict_series(const RnnModel& model, const Eigen::VectorXd& history, const Eigen::VectorXd& future,
                               PredictMode mode);
Eigen::VectorXd predict_series(const RnnModel& model, const Eigen::VectorXd& history, Eigen::Index horizon,
                               PredictMode mode = PredictMode::recursive);

/// In-sample one-step predictions for points window .. n-1 of `series` (series units).
Eigen::VectorXd fitted_values(const RnnModel& model, const Eigen::VectorXd& series);

}  // namespace tsa::deep
