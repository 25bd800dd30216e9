#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace tsa {

enum class KernelKind { rbf, polynomial, linear };

struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double gamma = 1.0;  ///< rbf scale
    int degree = 2;      ///< polynomial
    double coef0 = 1.0;  ///< polynomial

    static KernelSpec rbf(double gamma) { return {KernelKind::rbf, gamma, 2, 1.0}; }
    static KernelSpec polynomial(int degree, double coef0 = 1.0) { return {KernelKind::polynomial, 1.0, degree, coef0}; }
    static KernelSpec linear() { return {KernelKind::linear, 1.0, 2, 1.0}; }

    void validate() const;
    [[nodiscard]] std::string to_string() const;
};

/// k(a, b) for two vectors (any Eigen expressions of matching length).
template <class DerivedA, class DerivedB>
double kernel_value(const KernelSpec& kernel, const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    switch (kernel.kind) {
        case KernelKind::rbf: return std::exp(-kernel.gamma * (a - b).squaredNorm());
        case KernelKind::polynomial: return std::pow(a.dot(b) + kernel.coef0, kernel.degree);
        case KernelKind::linear: return a.dot(b);
    }
    return 0.0;
}

/// Gram matrix K(i, j) = k(X.row(i), Y.row(j)); samples are rows.
template <class DerivedX, class DerivedY>
Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& Y) {
    if (X.cols() != Y.cols()) throw std::invalid_argument("gram: input dimensions differ");
    Eigen::MatrixXd K(X.rows(), Y.rows());
    if (kernel.kind == KernelKind::rbf) {
        for (Eigen::Index j = 0; j < K.cols(); ++j) {
            for (Eigen::Index i = 0; i < K.rows(); ++i) {
                K(i, j) = std::exp(-kernel.gamma * (X.row(i) - Y.row(j)).squaredNorm());
            }
        }
        return K;
    }
    K.noalias() = X * Y.transpose();
    if (kernel.kind == KernelKind::polynomial) {
        K = (K.array() + kernel.coef0).pow(static_cast<double>(kernel.degree)).matrix();
    }
    return K;
}

struct EmbeddingSpec {
    int window = 4;
    /// Appends the (raw) target index as an extra feature; standardization scales it.
    bool time_feature = false;
};

struct Embedded {
    Eigen::MatrixXd inputs;  ///< (n - w) x (w [+1])
    Eigen::VectorXd targets;
};

/// Lag-window pairs ([x_{t-w}, ..., x_{t-1}], x_t) for t = w .. n-1, in time order.
Embedded embed(const Eigen::VectorXd& x, const EmbeddingSpec& spec);

struct KrrModel {
    Eigen::VectorXd alpha;
    double lambda = 1.0;
    KernelSpec kernel;
    Eigen::MatrixXd train_inputs;
};

/// Solves (K + lambda I) alpha = y by Cholesky. lambda = 0 fails on a singular gram.
KrrModel krr_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const KernelSpec& kernel);
Eigen::VectorXd krr_predict(const KrrModel& model, const Eigen::MatrixXd& X);

struct SvrModel {
    Eigen::VectorXd beta;  ///< alpha - alpha*, each in [-C, C], summing to 0
    double b = 0.0;
    double C = 1.0;
    double epsilon = 0.1;
    KernelSpec kernel;
    Eigen::MatrixXd train_inputs;
    Eigen::VectorXd xi;       ///< max(0, y - f - eps)
    Eigen::VectorXd xi_star;  ///< max(0, f - y - eps)
    bool converged = false;
    long iterations = 0;
    /// Largest remaining KKT violation gap at termination.
    double kkt_gap = 0.0;
};

struct SvrOptions {
    double tol = 1e-3;
    /// Maximum SMO pair updates; 0 means max(10^6, 100 n).
    long max_iterations = 0;
    /// When set, receives the dual objective after every update.
    std::vector<double>* objective_trace = nullptr;
};

/// epsilon-SVR by SMO on the dual with maximal-violating-pair selection.
/// Returns a partial model with `converged == false` when the iteration cap is hit.
SvrModel svr_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double C, double epsilon,
                 const KernelSpec& kernel, const SvrOptions& options = {});
Eigen::VectorXd svr_predict(const SvrModel& model, const Eigen::MatrixXd& X);

/// Dual objective sum(y beta) - eps sum|beta| - beta' K beta / 2 (maximized by svr_fit).
double svr_dual_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, const Eigen::VectorXd& beta, double epsilon);

/// Per-column z-score fitted on training rows; zero-spread columns keep scale 1.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& X);
    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

enum class KernelFamily { krr, svr };

struct KernelModelConfig {
    KernelFamily family = KernelFamily::krr;
    KernelSpec kernel;
    double lambda = 1e-2;
    double C = 1.0;
    double epsilon = 0.1;
    EmbeddingSpec embedding;
    SvrOptions svr;
};

/**
 * @brief One-step-ahead regressor on lag windows of a series.
 *
 * Inputs are z-scored per column and targets are z-scored with the training
 * target mean and spread; predictions come back in series units.
 */
struct LagRegressor {
    KernelModelConfig config;
    Standardizer input_scaler;
    double target_mean = 0.0;
    double target_scale = 1.0;
    std::variant<KrrModel, SvrModel> model;

    /// `window` holds the w most recent values; `target_index` is the index of
    /// the predicted point in the training numbering (used only by the time feature).
    [[nodiscard]] double predict_one(const Eigen::VectorXd& window, Eigen::Index target_index) const;
};

LagRegressor fit_lag_regressor(const Eigen::VectorXd& series, const KernelModelConfig& config);

/// Feeds each prediction back into the lag window. `predict(window, target_index)`.
template <class OneStep>
Eigen::VectorXd forecast_recursive(const OneStep& predict, const Eigen::VectorXd& history, int horizon, int window) {
    if (horizon < 1) throw std::invalid_argument("forecast horizon must be >= 1");
    if (window < 1 || history.size() < window) throw std::invalid_argument("history shorter than the lag window");
    Eigen::VectorXd buffer(history.size() + horizon);
    buffer.head(history.size()) = history;
    for (Eigen::Index h = 0; h < horizon; ++h) {
        const Eigen::Index t = history.size() + h;
        buffer[t] = predict(Eigen::VectorXd(buffer.segment(t - window, window)), t);
    }
    return buffer.tail(horizon);
}

/// Teacher-forced one-step predictions over `test`, which continues `history`.
template <class OneStep>
Eigen::VectorXd forecast_one_step(const OneStep& predict, const Eigen::VectorXd& history, const Eigen::VectorXd& test,
                                  int window) {
    if (window < 1 || history.size() < window) throw std::invalid_argument("history shorter than the lag window");
    Eigen::VectorXd buffer(history.size() + test.size());
    buffer << history, test;
    Eigen::VectorXd out(test.size());
    for (Eigen::Index h = 0; h < test.size(); ++h) {
        const Eigen::Index t = history.size() + h;
        out[h] = predict(Eigen::VectorXd(buffer.segment(t - window, window)), t);
    }
    return out;
}

Eigen::VectorXd forecast_recursive(const LagRegressor& model, const Eigen::VectorXd& history, int horizon);
Eigen::VectorXd forecast_one_step(const LagRegressor& model, const Eigen::VectorXd& history, const Eigen::VectorXd& test);

/// Default hyperparameter grids for kernel model selection.
std::vector<KernelModelConfig> default_kernel_grid(KernelFamily family, EmbeddingSpec embedding = {});

}  // namespace tsa
