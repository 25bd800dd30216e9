#pragma once

#include <array>
#include <optional>
#include <stdexcept>

#include <Eigen/Core>

#include "tsa/errors.hpp"

namespace tsa {

struct CorrelogramResult {
    Eigen::VectorXd values;  ///< indexed by lag 0..L
    double band = 0.0;       ///< 1.96 / sqrt(n)
};

/// Sample autocorrelation with the biased (1/n) covariance normalizer.
CorrelogramResult acf(const Eigen::VectorXd& x, int max_lag);
/// Partial autocorrelation by Durbin-Levinson over the sample ACF. Requires max_lag < n / 2.
CorrelogramResult pacf(const Eigen::VectorXd& x, int max_lag);

/// Durbin-Levinson on autocorrelations r[0..L]; returns the AR(L) coefficients
/// and writes the partial autocorrelations r[1..L] into `partial` when given.
Eigen::VectorXd durbin_levinson(const Eigen::VectorXd& r, Eigen::VectorXd* partial = nullptr);

struct OlsResult {
    Eigen::VectorXd beta;
    Eigen::VectorXd std_err;
    double ssr = 0.0;
    Eigen::Index nobs = 0;
    /// Gaussian log-likelihood at the MLE variance ssr / nobs.
    double loglik = 0.0;
    /// -2 loglik + 2 k, k = number of regressors.
    double aic = 0.0;
};

/// Least squares via column-pivoted QR; throws DiagnosticError on a rank-deficient design.
OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct AdfResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int lags_used = 0;
    Eigen::Index n_obs = 0;
    std::array<double, 3> critical_values{};  ///< 1%, 5%, 10%
    bool stationary = false;
};

struct AdfOptions {
    /// Upper bound for the lag search; defaults to floor(12 (n/100)^(1/4)).
    std::optional<int> max_lag;
    /// When false, `max_lag` lags are used as given without the AIC search.
    bool autolag = true;
};

/// Augmented Dickey-Fuller test with a constant and no trend.
AdfResult adf_test(const Eigen::VectorXd& x, const AdfOptions& options = {});

/// MacKinnon (2010) finite-sample critical values for the constant-only case.
std::array<double, 3> adf_critical_values(Eigen::Index n_obs);
/// MacKinnon (1994) approximate p-value for the constant-only case.
double adf_p_value(double statistic);

struct OrderSuggestion {
    int p = 0;
    int q = 0;
};

/// q: largest lag k >= 1 with |acf[k]| above the band; p: same for pacf.
OrderSuggestion suggest_orders(const CorrelogramResult& acf_result, const CorrelogramResult& pacf_result);

}  // namespace tsa
