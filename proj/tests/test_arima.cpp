#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "tsa/arima.hpp"

using namespace tsa;

namespace {

Eigen::VectorXd simulate_arma(double phi, double theta, Eigen::Index n, std::uint64_t seed, double mu = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    const Eigen::Index burn = 300;
    Eigen::VectorXd x(n + burn);
    double prev_x = 0.0;
    double prev_e = 0.0;
    for (Eigen::Index t = 0; t < n + burn; ++t) {
        const double e = z(rng);
        prev_x = phi * prev_x + e + theta * prev_e;
        prev_e = e;
        x[t] = prev_x;
    }
    return (x.tail(n).array() + mu).matrix();
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) x[i++] = e;
    return x;
}

}  // namespace

TEST_CASE("spec validation") {
    ArimaSpec s;
    CHECK_NOTHROW(s.validate());
    s.P = 1;
    CHECK_THROWS(s.validate());
    s.m = 12;
    CHECK_NOTHROW(s.validate());
    ArimaSpec neg{-1, 0, 0};
    CHECK_THROWS(neg.validate());
    ArimaSpec empty{0, 0, 0, 0, 0, 0, 1, false};
    CHECK_THROWS(empty.validate());
    ArimaSpec walk{0, 1, 0, 0, 0, 0, 1, false};
    CHECK_NOTHROW(walk.validate());
    CHECK(ArimaSpec{1, 1, 1, 1, 0, 1, 12}.to_string() == "ARIMA(1,1,1)(1,0,1)_12");
}

TEST_CASE("expand_polynomials") {
    ArimaSpec s{1, 0, 0, 1, 0, 0, 12};
    const auto poly = expand_polynomials(s, vec({0.5}), {}, vec({0.3}), {});
    REQUIRE(poly.ar.size() == 13);
    CHECK(poly.ar[0] == doctest::Approx(0.5));
    CHECK(poly.ar[11] == doctest::Approx(0.3));
    CHECK(poly.ar[12] == doctest::Approx(-0.15));
    CHECK(poly.ar.segment(1, 10).isZero());

    ArimaSpec ns{2, 0, 1};
    const auto id = expand_polynomials(ns, vec({0.4, -0.2}), vec({0.7}), {}, {});
    CHECK(id.ar == vec({0.4, -0.2}));
    CHECK(id.ma == vec({0.7}));

    ArimaSpec sm{0, 0, 0, 0, 0, 1, 4};
    const auto ma = expand_polynomials(sm, {}, {}, {}, vec({0.2}));
    REQUIRE(ma.ma.size() == 4);
    CHECK(ma.ma[3] == doctest::Approx(0.2));
    CHECK(ma.ma.head(3).isZero());

    CHECK_THROWS(expand_polynomials(ns, vec({0.4}), vec({0.7}), {}, {}));
}

TEST_CASE("css_residuals") {
    const auto x = vec({3, 5, 4});
    const auto r0 = css_residuals(vec({4.0}), x, ArimaSpec{});
    CHECK(r0 == vec({-1, 1, 0}));

    ArimaSpec ar1{1, 0, 0, 0, 0, 0, 1, false};
    Eigen::VectorXd geo(10);
    for (int t = 0; t < 10; ++t) geo[t] = 8.0 * std::pow(0.5, t);
    const auto r1 = css_residuals(vec({0.0, 0.5}), geo, ar1);
    CHECK(r1[0] == 8.0);
    CHECK(r1.tail(9).cwiseAbs().maxCoeff() < 1e-15);

    ArimaSpec ma1{0, 0, 1, 0, 0, 0, 1, false};
    const auto r2 = css_residuals(vec({0.0, 0.5}), vec({1, 0, 0}), ma1);
    CHECK(r2 == vec({1, -0.5, 0.25}));
}

TEST_CASE("roots check") {
    CHECK(roots_outside_unit_circle(vec({0.5})));
    CHECK_FALSE(roots_outside_unit_circle(vec({1.0})));
    CHECK_FALSE(roots_outside_unit_circle(vec({1.2})));
    CHECK(roots_outside_unit_circle(vec({0.5, 0.3})));
    CHECK_FALSE(roots_outside_unit_circle(vec({0.5, 0.6})));
    CHECK(roots_outside_unit_circle(Eigen::VectorXd()));
}

TEST_CASE("white-noise model fits the sample moments") {
    const auto x = simulate_arma(0, 0, 300, 1, 5.0);
    const auto f = fit(ArimaSpec{}, x);
    CHECK(std::abs(f.intercept - x.mean()) < 1e-8);
    const double var = (x.array() - x.mean()).square().mean();
    CHECK(std::abs(f.sigma2 - var) < 1e-8);
    CHECK(f.aic == doctest::Approx(-2 * f.loglik + 2 * 2));
    CHECK(f.parameter_count() == 2);
}

TEST_CASE("ARMA(1,1) recovery") {
    const auto x = simulate_arma(0.6, 0.3, 2000, 42);
    const auto f = fit(ArimaSpec{1, 0, 1}, x);
    CHECK(std::abs(f.phi[0] - 0.6) < 0.1);
    CHECK(std::abs(f.theta[0] - 0.3) < 0.1);
    CHECK(f.sigma2 > 0);
    CHECK(std::abs(f.residuals.mean()) < 3 * std::sqrt(f.sigma2 / 2000.0));
    CHECK(roots_outside_unit_circle(f.phi));
    CHECK(roots_outside_unit_circle(-f.theta));
}

TEST_CASE("AR(1) estimate matches OLS on the lag") {
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        const auto x = simulate_arma(0.5, 0, 1000, seed);
        const auto f = fit(ArimaSpec{1, 0, 0}, x);
        Eigen::MatrixXd X(999, 2);
        X.col(0) = x.head(999);
        X.col(1).setOnes();
        const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(x.tail(999));
        CHECK(std::abs(f.phi[0] - beta[0]) < 0.02);
    }
}

TEST_CASE("fit is deterministic") {
    const auto x = simulate_arma(0.4, 0.2, 400, 9);
    const auto a = fit(ArimaSpec{1, 0, 1}, x);
    const auto b = fit(ArimaSpec{1, 0, 1}, x);
    CHECK(a.packed_params() == b.packed_params());
    CHECK(a.aic == b.aic);
}

TEST_CASE("translation covariance") {
    const auto x = simulate_arma(0.5, 0.2, 800, 21);
    const Eigen::VectorXd y = (x.array() + 100.0).matrix();
    const auto fx = fit(ArimaSpec{1, 0, 1}, x);
    const auto fy = fit(ArimaSpec{1, 0, 1}, y);
    CHECK(std::abs(fx.phi[0] - fy.phi[0]) < 0.02);
    CHECK(std::abs(fx.theta[0] - fy.theta[0]) < 0.02);
    const auto px = forecast(fx, 5).values;
    const auto py = forecast(fy, 5).values;
    CHECK(((py.array() - px.array()) - 100.0).abs().maxCoeff() < 0.05);
}

TEST_CASE("forecast recursions") {
    const auto x = simulate_arma(0, 0, 50, 2);
    auto walk = fit(ArimaSpec{0, 1, 0, 0, 0, 0, 1, false}, x);
    const auto fw = forecast(walk, 4);
    CHECK((fw.values.array() == x[49]).all());
    CHECK(fw.transformed_values.size() == 4);

    auto two = fit(ArimaSpec{0, 2, 0, 0, 0, 0, 1, false}, x);
    const auto f2 = forecast(two, 5).values;
    const double slope = x[49] - x[48];
    for (int h = 0; h < 5; ++h) CHECK(f2[h] == doctest::Approx(x[49] + slope * (h + 1)));

    FittedArima ar;
    ar.spec = ArimaSpec{1, 0, 0, 0, 0, 0, 1, false};
    ar.phi = vec({0.5});
    ar.differenced = vec({1, 2, 4});
    ar.residuals = vec({0, 0, 0});
    ar.diff_state.kind = TransformKind::difference;
    const auto fa = forecast(ar, 3).values;
    CHECK(fa == vec({2, 1, 0.5}));

    FittedArima ma;
    ma.spec = ArimaSpec{0, 0, 1};
    ma.theta = vec({0.4});
    ma.intercept = 3.0;
    ma.differenced = vec({3, 4, 2});
    ma.residuals = vec({0, 1, -1});
    ma.diff_state.kind = TransformKind::difference;
    const auto fm = forecast(ma, 4).values;
    CHECK(fm[0] == doctest::Approx(3.0 - 0.4));
    for (int h = 1; h < 4; ++h) CHECK(fm[h] == 3.0);
    CHECK_THROWS(forecast(ma, 0));
}

TEST_CASE("fitted values") {
    const auto x = simulate_arma(0.5, 0, 200, 13, 10.0);
    const auto f = fit(ArimaSpec{1, 1, 0}, x);
    const auto fv = fitted_values(f, x);
    REQUIRE(fv.size() == 200);
    CHECK(std::isnan(fv[0]));
    for (Eigen::Index t = 1; t < 200; ++t) CHECK(fv[t] == doctest::Approx(x[t] - f.residuals[t - 1]).epsilon(1e-12));
    CHECK(f.residuals[0] == 0.0);

    const auto ext = simulate_arma(0.5, 0, 230, 13, 10.0);
    const auto head = fit(ArimaSpec{1, 0, 1}, ext.head(200));
    const auto one = fitted_values(head, ext);
    CHECK((one.head(200) - fitted_values(head, ext.head(200))).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(one[200] == doctest::Approx(forecast(head, 1).values[0]).epsilon(1e-12));
}

TEST_CASE("seasonal fit runs and stays admissible") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> z;
    Eigen::VectorXd x(240);
    for (Eigen::Index t = 0; t < 240; ++t) x[t] = 5 * std::sin(2 * 3.14159265358979 * t / 12.0) + 0.02 * t + z(rng);
    const auto f = fit(ArimaSpec{1, 0, 0, 1, 1, 0, 12}, x);
    CHECK(f.seasonal_phi.size() == 1);
    CHECK(roots_outside_unit_circle(f.phi));
    CHECK(roots_outside_unit_circle(f.seasonal_phi));
    const auto fc = forecast(f, 12).values;
    CHECK(fc.size() == 12);
    CHECK(fc.allFinite());
    CHECK_THROWS(fit(ArimaSpec{1, 0, 0, 1, 1, 0, 12}, x.head(20)));
}

TEST_CASE("auto_arima") {
    const auto x = simulate_arma(0.6, 0, 500, 31);
    AutoArimaOptions single;
    single.max_p = 0;
    single.max_q = 0;
    const auto one = auto_arima(x, single);
    REQUIRE(one.candidates.size() == 1);
    CHECK(one.best.spec.p == 0);
    CHECK(one.best.aic == fit(ArimaSpec{}, x).aic);

    AutoArimaOptions grid;
    grid.threads = 4;
    const auto par = auto_arima(x, grid);
    grid.threads = 1;
    const auto seq = auto_arima(x, grid);
    CHECK(par.best.spec.to_string() == seq.best.spec.to_string());
    CHECK(par.best.packed_params() == seq.best.packed_params());
    CHECK(par.candidates.size() == 9);
    for (const auto& c : par.candidates)
        if (c.ok) CHECK(c.aic >= par.best.aic);
}
