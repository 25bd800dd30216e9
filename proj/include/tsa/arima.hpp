#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tsa/errors.hpp"
#include "tsa/transforms.hpp"

namespace tsa {

/// Orders of a multiplicative seasonal ARIMA (p, d, q)(P, D, Q)_m.
struct ArimaSpec {
    int p = 0;
    int d = 0;
    int q = 0;
    int P = 0;
    int D = 0;
    int Q = 0;
    int m = 1;
    bool with_intercept = true;

    /// Throws std::invalid_argument when orders are negative or a seasonal part has m < 2.
    void validate() const;
    [[nodiscard]] int coefficient_count() const noexcept { return p + q + P + Q; }
    [[nodiscard]] int max_ar_lag() const noexcept { return p + P * m; }
    [[nodiscard]] int max_ma_lag() const noexcept { return q + Q * m; }
    [[nodiscard]] int differencing_loss() const noexcept { return d + D * m; }
    [[nodiscard]] std::string to_string() const;
};

/// Expanded lag polynomials: x_t = sum ar[i-1] x_{t-i} + sum ma[j-1] e_{t-j} + e_t + c.
struct LagPolynomials {
    Eigen::VectorXd ar;  ///< length p + P*m
    Eigen::VectorXd ma;  ///< length q + Q*m
};

/// Multiplies out (1 - sum phi B^i)(1 - sum Phi B^{jm}) and (1 + sum theta B^i)(1 + sum Theta B^{jm}).
LagPolynomials expand_polynomials(const ArimaSpec& spec, const Eigen::VectorXd& phi, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& seasonal_phi, const Eigen::VectorXd& seasonal_theta);

/// Conditional-sum-of-squares innovations with zero presample values.
/// `params` packs intercept | phi | theta | Phi | Theta; `series` is already differenced.
Eigen::VectorXd css_residuals(const Eigen::VectorXd& params, const Eigen::VectorXd& series, const ArimaSpec& spec);

/// True when every root of 1 - sum coeffs[i] z^{i+1} lies strictly outside the unit circle.
bool roots_outside_unit_circle(const Eigen::VectorXd& coeffs);

struct FittedArima {
    ArimaSpec spec;
    Eigen::VectorXd phi;
    Eigen::VectorXd theta;
    Eigen::VectorXd seasonal_phi;
    Eigen::VectorXd seasonal_theta;
    double intercept = 0.0;
    double sigma2 = 0.0;
    double loglik = 0.0;
    double aic = 0.0;
    TransformState diff_state;
    /// Training series after differencing, and its CSS residuals.
    Eigen::VectorXd differenced;
    Eigen::VectorXd residuals;

    [[nodiscard]] Eigen::VectorXd packed_params() const;
    [[nodiscard]] int parameter_count() const noexcept {
        return spec.coefficient_count() + (spec.with_intercept ? 1 : 0) + 1;
    }
};

struct ForecastResult {
    int horizon = 0;
    Eigen::VectorXd values;              ///< original units
    Eigen::VectorXd transformed_values;  ///< differenced units
};

struct ArimaFitOptions {
    double diameter_tol = 1e-6;
    double penalty = 1e6;
};

/// Differencing, then CSS minimization by Nelder-Mead from a zero start and a
/// Yule-Walker start. The intercept is solved in closed form at each step.
FittedArima fit(const ArimaSpec& spec, const Eigen::VectorXd& series, const ArimaFitOptions& options = {});

/// Recursive forecast in differenced space, integrated back to original units.
ForecastResult forecast(const FittedArima& fitted, int horizon);

/// One-step predictions in original units with the fitted coefficients; entry t
/// is x_t - e_t for t >= d + D*m and NaN before that. On the training series the
/// innovations are the stored residuals; a longer series continuing it yields
/// one-step forecasts against the observed values.
Eigen::VectorXd fitted_values(const FittedArima& fitted, const Eigen::VectorXd& series);

struct AutoArimaOptions {
    int max_p = 2;
    int max_q = 2;
    int max_P = 0;
    int max_Q = 0;
    std::vector<int> d_range{0};
    std::vector<int> D_range{0};
    int m = 1;
    bool with_intercept = true;
    unsigned threads = 0;
};

struct AutoArimaCandidate {
    ArimaSpec spec;
    bool ok = false;
    double aic = 0.0;
    std::string error;
};

struct AutoArimaResult {
    FittedArima best;
    std::vector<AutoArimaCandidate> candidates;
};

/// Exhaustive AIC grid search. Failed cells are skipped; ties resolve to the
/// lexicographically smallest (p, q, P, Q, d, D).
AutoArimaResult auto_arima(const Eigen::VectorXd& series, const AutoArimaOptions& options);

}  // namespace tsa
