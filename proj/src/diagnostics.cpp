#include "tsa/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/LU>
#include <Eigen/QR>

namespace tsa {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double horner(std::initializer_list<double> coeffs, double x) {
    // coefficients in increasing power order
    double acc = 0.0;
    for (auto it = std::rbegin(coeffs); it != std::rend(coeffs); ++it) acc = acc * x + *it;
    return acc;
}

}  // namespace

CorrelogramResult acf(const Eigen::VectorXd& x, int max_lag) {
    const auto n = x.size();
    if (max_lag < 0 || max_lag >= n) throw DiagnosticError("acf: max_lag must lie in [0, n)");
    const Eigen::VectorXd centered = x.array() - x.mean();
    const double denom = centered.squaredNorm();
    if (!(denom > 0.0)) throw DiagnosticError("acf: series has zero variance");

    CorrelogramResult out;
    out.values.resize(max_lag + 1);
    for (int k = 0; k <= max_lag; ++k) {
        out.values[k] = centered.head(n - k).dot(centered.tail(n - k)) / denom;
    }
    out.band = 1.96 / std::sqrt(static_cast<double>(n));
    return out;
}

Eigen::VectorXd durbin_levinson(const Eigen::VectorXd& r, Eigen::VectorXd* partial) {
    const auto L = r.size() - 1;
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(L);
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(L);
    if (partial) partial->setZero(L);
    double v = r[0];
    for (Eigen::Index k = 1; k <= L; ++k) {
        double num = r[k];
        for (Eigen::Index j = 1; j < k; ++j) num -= prev[j - 1] * r[k - j];
        if (!(v > 0.0)) throw DiagnosticError("durbin_levinson: non-positive innovation variance");
        const double a = num / v;
        phi[k - 1] = a;
        for (Eigen::Index j = 1; j < k; ++j) phi[j - 1] = prev[j - 1] - a * prev[k - j - 1];
        v *= (1.0 - a * a);
        if (partial) (*partial)[k - 1] = a;
        prev.head(k) = phi.head(k);
    }
    return phi;
}

CorrelogramResult pacf(const Eigen::VectorXd& x, int max_lag) {
    if (max_lag < 0 || 2 * max_lag >= x.size()) throw DiagnosticError("pacf: max_lag must be below n/2");
    const auto r = acf(x, max_lag);
    CorrelogramResult out;
    out.values.resize(max_lag + 1);
    out.values[0] = 1.0;
    if (max_lag > 0) {
        Eigen::VectorXd partial;
        durbin_levinson(r.values, &partial);
        out.values.tail(max_lag) = partial;
    }
    out.band = r.band;
    return out;
}

OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const auto n = X.rows();
    const auto k = X.cols();
    if (n != y.size()) throw DiagnosticError("ols: row count mismatch");
    if (n <= k) throw DiagnosticError("ols: not enough observations");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k) throw DiagnosticError("ols: singular regression matrix");

    OlsResult out;
    out.beta = qr.solve(y);
    out.ssr = (y - X * out.beta).squaredNorm();
    out.nobs = n;
    const double dn = static_cast<double>(n);
    out.loglik = -0.5 * dn * (std::log(2.0 * std::numbers::pi) + std::log(out.ssr / dn) + 1.0);
    out.aic = -2.0 * out.loglik + 2.0 * static_cast<double>(k);

    const double s2 = out.ssr / static_cast<double>(n - k);
    const Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();
    out.std_err = (s2 * xtx_inv.diagonal()).cwiseSqrt();
    return out;
}

std::array<double, 3> adf_critical_values(Eigen::Index n_obs) {
    const double inv = 1.0 / static_cast<double>(n_obs);
    return {horner({-3.43035, -6.5393, -16.786, -79.433}, inv),
            horner({-2.86154, -2.8903, -4.234, -40.040}, inv),
            horner({-2.56677, -1.5384, -2.809, 0.0}, inv)};
}

double adf_p_value(double statistic) {
    constexpr double tau_max = 2.74;
    constexpr double tau_min = -18.83;
    constexpr double tau_star = -1.61;
    if (statistic > tau_max) return 1.0;
    if (statistic < tau_min) return 0.0;
    if (statistic <= tau_star) return normal_cdf(horner({2.1659, 1.4412, 0.038269}, statistic));
    return normal_cdf(horner({1.7339, 0.93202, -0.12745, -0.010368}, statistic));
}

namespace {

struct AdfDesign {
    Eigen::MatrixXd X;  // [y_{t-1}, dy_{t-1}, ..., dy_{t-lags}, 1]
    Eigen::VectorXd y;  // dy_t
};

// Rows cover the last `rows` differences; columns are the level, `lags` lagged
// differences, and a constant.
AdfDesign adf_design(const Eigen::VectorXd& x, int lags, Eigen::Index rows) {
    const auto n = x.size();
    const Eigen::VectorXd dx = x.tail(n - 1) - x.head(n - 1);
    const auto m = dx.size();
    AdfDesign d;
    d.X.resize(rows, lags + 2);
    d.y = dx.tail(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index t = m - rows + r;  // index into dx
        d.X(r, 0) = x[t];                     // level y_{t-1} relative to dx[t] = x[t+1] - x[t]
        for (int i = 1; i <= lags; ++i) d.X(r, i) = dx[t - i];
        d.X(r, lags + 1) = 1.0;
    }
    return d;
}

}  // namespace

AdfResult adf_test(const Eigen::VectorXd& x, const AdfOptions& options) {
    const auto n = x.size();
    if (n < 12) throw DiagnosticError("adf: need at least 12 observations");

    int max_lag = options.max_lag.value_or(
        static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25))));
    max_lag = std::clamp(max_lag, 0, static_cast<int>(n / 2 - 2));

    int lags = max_lag;
    if (options.autolag && max_lag > 0) {
        // Every candidate is fitted on the same trimmed sample so AICs compare.
        const Eigen::Index common_rows = n - 1 - max_lag;
        double best_aic = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= max_lag; ++k) {
            const auto d = adf_design(x, k, common_rows);
            const double aic = ols(d.X, d.y).aic;
            if (aic < best_aic) {
                best_aic = aic;
                lags = k;
            }
        }
    }

    const auto d = adf_design(x, lags, n - 1 - lags);
    const auto fit = ols(d.X, d.y);

    AdfResult out;
    out.statistic = fit.beta[0] / fit.std_err[0];
    out.p_value = adf_p_value(out.statistic);
    out.lags_used = lags;
    out.n_obs = fit.nobs;
    out.critical_values = adf_critical_values(out.n_obs);
    out.stationary = out.statistic < out.critical_values[1];
    return out;
}

OrderSuggestion suggest_orders(const CorrelogramResult& acf_result, const CorrelogramResult& pacf_result) {
    auto last_significant = [](const CorrelogramResult& c) {
        int order = 0;
        for (Eigen::Index k = 1; k < c.values.size(); ++k) {
            if (std::abs(c.values[k]) > c.band) order = static_cast<int>(k);
        }
        return order;
    };
    return {last_significant(pacf_result), last_significant(acf_result)};
}

}  // namespace tsa
