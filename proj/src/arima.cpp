#include "tsa/arima.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "tsa/diagnostics.hpp"
#include "tsa/optimize.hpp"
#include "tsa/parallel.hpp"

namespace tsa {

void ArimaSpec::validate() const {
    if (p < 0 || d < 0 || q < 0 || P < 0 || D < 0 || Q < 0) {
        throw std::invalid_argument("ARIMA orders must be non-negative");
    }
    if (m < 1) throw std::invalid_argument("seasonal period must be >= 1");
    if ((P > 0 || D > 0 || Q > 0) && m < 2) {
        throw std::invalid_argument("seasonal orders require a period m >= 2");
    }
    if (coefficient_count() == 0 && !with_intercept && d + D == 0) {
        throw std::invalid_argument("ARIMA spec estimates nothing: add an order or the intercept");
    }
}

std::string ArimaSpec::to_string() const {
    std::ostringstream os;
    os << "ARIMA(" << p << ',' << d << ',' << q << ')';
    if (P > 0 || D > 0 || Q > 0) os << '(' << P << ',' << D << ',' << Q << ")_" << m;
    return os.str();
}

LagPolynomials expand_polynomials(const ArimaSpec& spec, const Eigen::VectorXd& phi, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& seasonal_phi, const Eigen::VectorXd& seasonal_theta) {
    if (phi.size() != spec.p || theta.size() != spec.q || seasonal_phi.size() != spec.P ||
        seasonal_theta.size() != spec.Q) {
        throw std::invalid_argument("coefficient lengths do not match the ARIMA orders");
    }
    const int m = spec.m;

    // Full polynomials in B with the constant term at index 0.
    auto product = [m](const Eigen::VectorXd& a, const Eigen::VectorXd& s, double sign) {
        Eigen::VectorXd left = Eigen::VectorXd::Zero(a.size() + 1);
        left[0] = 1.0;
        left.tail(a.size()) = sign * a;
        Eigen::VectorXd right = Eigen::VectorXd::Zero(s.size() * m + 1);
        right[0] = 1.0;
        for (Eigen::Index j = 0; j < s.size(); ++j) right[(j + 1) * m] = sign * s[j];
        Eigen::VectorXd out = Eigen::VectorXd::Zero(left.size() + right.size() - 1);
        for (Eigen::Index i = 0; i < left.size(); ++i) {
            for (Eigen::Index j = 0; j < right.size(); ++j) out[i + j] += left[i] * right[j];
        }
        return out;
    };

    const Eigen::VectorXd ar_poly = product(phi, seasonal_phi, -1.0);
    const Eigen::VectorXd ma_poly = product(theta, seasonal_theta, 1.0);
    return {-ar_poly.tail(ar_poly.size() - 1), ma_poly.tail(ma_poly.size() - 1)};
}

namespace {

struct Unpacked {
    double intercept;
    Eigen::VectorXd phi, theta, seasonal_phi, seasonal_theta;
};

Unpacked unpack(const Eigen::VectorXd& params, const ArimaSpec& spec) {
    const auto expected = 1 + spec.coefficient_count();
    if (params.size() != expected) throw std::invalid_argument("parameter vector has the wrong length");
    Eigen::Index at = 1;
    auto take = [&](int count) {
        Eigen::VectorXd v = params.segment(at, count);
        at += count;
        return v;
    };
    Unpacked u;
    u.intercept = params[0];
    u.phi = take(spec.p);
    u.theta = take(spec.q);
    u.seasonal_phi = take(spec.P);
    u.seasonal_theta = take(spec.Q);
    return u;
}

// Innovations with zero presample values; the first `cond` are fixed at 0.
Eigen::VectorXd css_recursion(double intercept, const LagPolynomials& poly, const Eigen::VectorXd& x,
                              Eigen::Index cond = 0) {
    const auto n = x.size();
    const auto np = poly.ar.size();
    const auto nq = poly.ma.size();
    Eigen::VectorXd e(n);
    e.head(std::min(cond, n)).setZero();
    for (Eigen::Index t = cond; t < n; ++t) {
        double v = x[t] - intercept;
        const auto ar_end = std::min<Eigen::Index>(np, t);
        for (Eigen::Index i = 0; i < ar_end; ++i) v -= poly.ar[i] * x[t - 1 - i];
        const auto ma_end = std::min<Eigen::Index>(nq, t);
        for (Eigen::Index j = 0; j < ma_end; ++j) v -= poly.ma[j] * e[t - 1 - j];
        e[t] = v;
    }
    return e;
}

// d lag-1 passes then D lag-m passes, recorded as one state.
std::pair<Eigen::VectorXd, TransformState> difference_for(const ArimaSpec& spec, const Eigen::VectorXd& series) {
    const Date anchor{std::chrono::year{2000}, std::chrono::January, std::chrono::day{1}};
    TimeSeries ts(anchor, 1, series);
    TransformState state;
    state.kind = spec.D > 0 ? TransformKind::seasonal_difference : TransformKind::difference;
    state.order = spec.d;
    state.lag = spec.D > 0 ? spec.m : 0;
    auto run = [&](int d, int lag) {
        auto out = difference(ts, d, lag);
        for (auto& pass : out.state.passes) state.passes.push_back(std::move(pass));
        ts = std::move(out.series);
    };
    if (spec.d > 0) run(spec.d, 0);
    for (int i = 0; i < spec.D; ++i) run(0, spec.m);
    return {ts.values(), std::move(state)};
}

bool admissible(const Unpacked& u) {
    return roots_outside_unit_circle(u.phi) && roots_outside_unit_circle(u.seasonal_phi) &&
           roots_outside_unit_circle(-u.theta) && roots_outside_unit_circle(-u.seasonal_theta);
}

}  // namespace

bool roots_outside_unit_circle(const Eigen::VectorXd& coeffs) {
    const auto k = coeffs.size();
    if (k == 0) return true;
    if (k == 1) return std::abs(coeffs[0]) < 1.0;
    if (!coeffs.allFinite()) return false;
    // Roots of 1 - sum c_i z^i outside the unit circle <=> companion eigenvalues inside.
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k, k);
    companion.row(0) = coeffs.transpose();
    companion.bottomLeftCorner(k - 1, k - 1).setIdentity();
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    return (solver.eigenvalues().array().abs() < 1.0).all();
}

Eigen::VectorXd css_residuals(const Eigen::VectorXd& params, const Eigen::VectorXd& series, const ArimaSpec& spec) {
    const auto u = unpack(params, spec);
    const auto poly = expand_polynomials(spec, u.phi, u.theta, u.seasonal_phi, u.seasonal_theta);
    return css_recursion(u.intercept, poly, series);
}

Eigen::VectorXd FittedArima::packed_params() const {
    Eigen::VectorXd out(1 + spec.coefficient_count());
    out << intercept, phi, theta, seasonal_phi, seasonal_theta;
    return out;
}

FittedArima fit(const ArimaSpec& spec, const Eigen::VectorXd& series, const ArimaFitOptions& options) {
    spec.validate();
    const auto required = spec.max_ar_lag() + spec.max_ma_lag() + spec.differencing_loss();
    if (series.size() <= required) {
        throw ModelError(spec.to_string() + ": series of length " + std::to_string(series.size()) +
                         " is too short (need more than " + std::to_string(required) + ")");
    }
    if (!series.allFinite()) throw ModelError("series contains non-finite values");

    auto [x, diff_state] = difference_for(spec, series);
    const auto n = x.size();
    const int dim = spec.coefficient_count();

    // The first p + P*m innovations only see zero presample values; the sum of
    // squares conditions on those observations, which keeps the fit covariant
    // under a level shift. Their residuals are reported as 0.
    const Eigen::Index cond = std::min<Eigen::Index>(spec.max_ar_lag(), n - 1);
    const Eigen::Index used = n - cond;

    // With fixed ARMA coefficients the residuals are affine in the intercept,
    // e(c) = e(0) - c * g, so the optimal intercept is a scalar projection.
    auto residuals_at = [&](const Eigen::VectorXd& coeffs, double* intercept_out) {
        Eigen::VectorXd params(1 + dim);
        params << 0.0, coeffs;
        const auto u = unpack(params, spec);
        const auto poly = expand_polynomials(spec, u.phi, u.theta, u.seasonal_phi, u.seasonal_theta);
        Eigen::VectorXd e = css_recursion(0.0, poly, x, cond);
        double c = 0.0;
        if (spec.with_intercept) {
            const Eigen::VectorXd g = e - css_recursion(1.0, poly, x, cond);
            const double gg = g.tail(used).squaredNorm();
            if (gg > 0.0) c = g.tail(used).dot(e.tail(used)) / gg;
            e -= c * g;
        }
        if (intercept_out) *intercept_out = c;
        return e;
    };

    auto objective = [&](const Eigen::VectorXd& coeffs) {
        Eigen::VectorXd params(1 + dim);
        params << 0.0, coeffs;
        const double sse = residuals_at(coeffs, nullptr).squaredNorm();
        if (!std::isfinite(sse)) return std::numeric_limits<double>::max();
        return admissible(unpack(params, spec)) ? sse : sse * options.penalty;
    };

    std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Zero(dim)};
    if (spec.p > 0) {
        Eigen::VectorXd warm = Eigen::VectorXd::Zero(dim);
        try {
            const auto r = acf(x, spec.p).values;
            warm.head(spec.p) = durbin_levinson(r);
            starts.push_back(warm);
        } catch (const DiagnosticError&) {
            // constant differenced series: the zero start is all we have
        }
    }

    NelderMeadOptions nm;
    nm.diameter_tol = options.diameter_tol;
    Eigen::VectorXd best_coeffs;
    double best_value = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        const auto result = nelder_mead(objective, start, nm);
        if (result.value < best_value) {
            best_value = result.value;
            best_coeffs = result.x;
        }
    }

    Eigen::VectorXd check(1 + dim);
    check << 0.0, best_coeffs;
    if (!std::isfinite(best_value) || !admissible(unpack(check, spec))) {
        throw ModelError(spec.to_string() + ": optimizer found no stationary, invertible solution");
    }

    FittedArima out;
    out.spec = spec;
    out.residuals = residuals_at(best_coeffs, &out.intercept);
    Eigen::VectorXd params(1 + dim);
    params << out.intercept, best_coeffs;
    const auto u = unpack(params, spec);
    out.phi = u.phi;
    out.theta = u.theta;
    out.seasonal_phi = u.seasonal_phi;
    out.seasonal_theta = u.seasonal_theta;

    // sigma2 comes from the innovations that enter the sum of squares; the
    // likelihood is scaled to all n differenced points so AIC compares models
    // with different conditioning lengths on the same footing.
    out.sigma2 = out.residuals.squaredNorm() / static_cast<double>(used);
    const double dn = static_cast<double>(n);
    if (!(out.sigma2 > 0.0)) {
        throw ModelError(spec.to_string() + ": zero residual variance (series is perfectly predictable)");
    }
    out.loglik = -0.5 * dn * (std::log(2.0 * std::numbers::pi * out.sigma2) + 1.0);
    out.aic = -2.0 * out.loglik + 2.0 * out.parameter_count();
    out.diff_state = std::move(diff_state);
    out.differenced = std::move(x);
    return out;
}

ForecastResult forecast(const FittedArima& fitted, int horizon) {
    if (horizon < 1) throw std::invalid_argument("forecast horizon must be >= 1");
    const auto poly = expand_polynomials(fitted.spec, fitted.phi, fitted.theta, fitted.seasonal_phi,
                                         fitted.seasonal_theta);
    const auto n = fitted.differenced.size();
    Eigen::VectorXd x(n + horizon);
    x.head(n) = fitted.differenced;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n + horizon);
    e.head(n) = fitted.residuals;
    for (Eigen::Index t = n; t < n + horizon; ++t) {
        double v = fitted.intercept;
        for (Eigen::Index i = 0; i < poly.ar.size() && t - 1 - i >= 0; ++i) v += poly.ar[i] * x[t - 1 - i];
        for (Eigen::Index j = 0; j < poly.ma.size() && t - 1 - j >= 0; ++j) v += poly.ma[j] * e[t - 1 - j];
        x[t] = v;
    }

    ForecastResult out;
    out.horizon = horizon;
    out.transformed_values = x.tail(horizon);
    out.values = fitted.diff_state.passes.empty() ? out.transformed_values
                                                  : integrate_forecast(out.transformed_values, fitted.diff_state);
    return out;
}

Eigen::VectorXd fitted_values(const FittedArima& fitted, const Eigen::VectorXd& series) {
    const auto& spec = fitted.spec;
    const auto loss = spec.differencing_loss();
    if (series.size() <= loss) throw std::invalid_argument("fitted_values: series shorter than the differencing");
    const auto x = difference_for(spec, series).first;
    const auto poly = expand_polynomials(spec, fitted.phi, fitted.theta, fitted.seasonal_phi, fitted.seasonal_theta);
    const Eigen::Index cond = std::min<Eigen::Index>(spec.max_ar_lag(), fitted.differenced.size() - 1);
    const Eigen::VectorXd e = css_recursion(fitted.intercept, poly, x, std::min(cond, x.size()));
    Eigen::VectorXd out = Eigen::VectorXd::Constant(series.size(), std::numeric_limits<double>::quiet_NaN());
    out.tail(x.size()) = series.tail(x.size()) - e;
    return out;
}

AutoArimaResult auto_arima(const Eigen::VectorXd& series, const AutoArimaOptions& options) {
    if (options.d_range.empty() || options.D_range.empty()) throw std::invalid_argument("empty differencing range");
    if (options.max_p < 0 || options.max_q < 0 || options.max_P < 0 || options.max_Q < 0) {
        throw std::invalid_argument("negative maximum order");
    }

    std::vector<AutoArimaCandidate> cells;
    for (int p = 0; p <= options.max_p; ++p)
        for (int q = 0; q <= options.max_q; ++q)
            for (int P = 0; P <= options.max_P; ++P)
                for (int Q = 0; Q <= options.max_Q; ++Q)
                    for (int d : options.d_range)
                        for (int D : options.D_range) {
                            ArimaSpec s{p, d, q, P, D, Q, options.m, options.with_intercept};
                            cells.push_back({s, false, 0.0, {}});
                        }
    if (cells.size() > 10000) throw std::invalid_argument("auto_arima grid exceeds 10^4 cells");

    std::vector<std::optional<FittedArima>> fits(cells.size());
    parallel_for(
        cells.size(),
        [&](std::size_t i) {
            try {
                fits[i] = fit(cells[i].spec, series);
                cells[i].ok = true;
                cells[i].aic = fits[i]->aic;
            } catch (const std::exception& ex) {
                cells[i].error = ex.what();
            }
        },
        options.threads);

    auto key = [](const ArimaSpec& s) { return std::make_tuple(s.p, s.q, s.P, s.Q, s.d, s.D); };
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!cells[i].ok) continue;
        if (!best || cells[i].aic < cells[*best].aic ||
            (cells[i].aic == cells[*best].aic && key(cells[i].spec) < key(cells[*best].spec))) {
            best = i;
        }
    }
    if (!best) throw ModelError("auto_arima: every grid cell failed to fit");
    return {std::move(*fits[*best]), std::move(cells)};
}

}  // namespace tsa
