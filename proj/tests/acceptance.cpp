#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsa/arima.hpp"
#include "tsa/deep.hpp"
#include "tsa/diagnostics.hpp"
#include "tsa/io.hpp"
#include "tsa/kernels.hpp"
#include "tsa/pipeline.hpp"
#include "tsa/transforms.hpp"
#include "tsa/validation.hpp"

using namespace tsa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& ex) {
        out = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && secs > budget_s) {
        out.pass = false;
        out.detail += " (over the " + std::to_string(static_cast<int>(budget_s)) + " s budget)";
    }
    if (!out.pass) ++failures;
    std::printf("%s  %2d  %-34s %7.2fs  %s\n", out.pass ? "PASS" : "FAIL", id, name.c_str(), secs, out.detail.c_str());
    std::fflush(stdout);
}

std::string num(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

Eigen::VectorXd gaussian(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> z;
    Eigen::VectorXd v(n);
    for (auto& x : v) x = z(rng);
    return v;
}

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    std::normal_distribution<double> z;
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = z(rng);
    return m;
}

Eigen::VectorXd simulate_arma(const std::vector<double>& phi, double theta, Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    const Eigen::Index burn = 500;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n + burn);
    double prev_e = 0.0;
    for (Eigen::Index t = 0; t < n + burn; ++t) {
        const double e = z(rng);
        double v = e + theta * prev_e;
        for (std::size_t i = 0; i < phi.size(); ++i) {
            if (t - 1 - static_cast<Eigen::Index>(i) >= 0) v += phi[i] * x[t - 1 - static_cast<Eigen::Index>(i)];
        }
        x[t] = v;
        prev_e = e;
    }
    return x.tail(n);
}

// Last coefficient of the OLS regression of the demeaned, zero-padded series on its first k lags.
double pacf_oracle(const Eigen::VectorXd& x, int k) {
    const Eigen::VectorXd c = x.array() - x.mean();
    const Eigen::Index rows = c.size() + k;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(rows, k);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);
    y.head(c.size()) = c;
    for (int j = 0; j < k; ++j) X.col(j).segment(j + 1, c.size()) = c;
    return X.colPivHouseholderQr().solve(y)[k - 1];
}

// Projected gradient on the 2n-variable SVR dual; the projection onto the box
// intersected with the equality hyperplane is found by bisection on its multiplier.
Eigen::VectorXd svr_qp_oracle(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double C, double eps) {
    const auto n = K.rows();
    Eigen::VectorXd s(2 * n);
    s << Eigen::VectorXd::Ones(n), -Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd Q(2 * n, 2 * n);
    for (Eigen::Index a = 0; a < 2 * n; ++a)
        for (Eigen::Index b = 0; b < 2 * n; ++b) Q(a, b) = s[a] * s[b] * K(a % n, b % n);
    Eigen::VectorXd p(2 * n);
    p << (eps - y.array()).matrix(), (eps + y.array()).matrix();
    auto project = [&](const Eigen::VectorXd& v) {
        auto at = [&](double mu) { return (v - mu * s).cwiseMax(0.0).cwiseMin(C).eval(); };
        double lo = -1e6;
        double hi = 1e6;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (s.dot(at(mid)) > 0.0 ? lo : hi) = mid;
        }
        return at(0.5 * (lo + hi));
    };
    const double L = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q).eigenvalues().maxCoeff();
    const double step = 1.0 / std::max(L, 1e-12);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * n);
    for (int it = 0; it < 50000; ++it) z = project(z - step * (Q * z + p));
    return z.head(n) - z.tail(n);
}

double worst_gradient_error(deep::RnnModel model, const Eigen::MatrixXd& X, const Eigen::RowVectorXd& y) {
    const auto analytic = deep::bptt_gradients(model, X, y).gradient;
    const auto theta = model.flatten();
    double worst = 0.0;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        auto plus = theta;
        auto minus = theta;
        plus[k] += 1e-5;
        minus[k] -= 1e-5;
        model.unflatten(plus);
        const double lp = deep::batch_loss(model, X, y);
        model.unflatten(minus);
        const double lm = deep::batch_loss(model, X, y);
        const double numeric = (lp - lm) / 2e-5;
        worst = std::max(worst, std::abs(numeric - analytic[k]) /
                                    std::max({std::abs(numeric), std::abs(analytic[k]), 1e-6}));
    }
    return worst;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

const fs::path kSource = TSA_SOURCE_DIR;
const fs::path kScratch = fs::temp_directory_path() / "tsa_acceptance";

}  // namespace

int main() {
    fs::remove_all(kScratch);
    fs::create_directories(kScratch);

    criterion(1, "ADF critical values (n=96)", 1.0, [] {
        const auto cv = adf_critical_values(96);
        const double err = std::max({std::abs(cv[0] + 3.500379), std::abs(cv[1] + 2.892152), std::abs(cv[2] + 2.583100)});
        return Outcome{err < 1e-3, "(" + num(cv[0], 7) + ", " + num(cv[1], 7) + ", " + num(cv[2], 7) +
                                       "), max error " + num(err, 2)};
    });

    criterion(2, "ADF on the crash table", 5.0, [] {
        fs::path path = kSource / "data" / "Airplane_Crashes_and_Fatalities_Since_1908.csv";
        if (const char* env = std::getenv("TSA_CRASH_CSV")) path = env;
        if (!fs::exists(path)) {
            return Outcome{false, "real event table not available (" + path.string() +
                                      "); set TSA_CRASH_CSV to its path"};
        }
        const auto ts = aggregate_events(io::read_event_csv(path), 12);
        const auto level = adf_test(ts.values());
        const auto diffed = adf_test(difference(ts, 1).series.values());
        const bool ok = std::abs(level.statistic + 1.807) <= 0.05 && std::abs(level.p_value - 0.377) <= 0.05 &&
                        diffed.statistic <= -9.0 && diffed.p_value < 1e-10;
        return Outcome{ok, "level " + num(level.statistic) + " (p " + num(level.p_value) + "), differenced " +
                               num(diffed.statistic) + " (p " + num(diffed.p_value, 3) + ")"};
    });

    criterion(3, "transform round trips (1000)", 10.0, [] {
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<int> len(30, 300);
        std::uniform_int_distribution<int> lag(2, 12);
        std::uniform_real_distribution<double> pos(0.0, 100.0);
        const Date start{std::chrono::year{1950}, std::chrono::January, std::chrono::day{1}};
        double worst_diff = 0.0;
        double worst_arcsin = 0.0;
        double worst_log = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            const int n = len(rng);
            Eigen::VectorXd walk = gaussian(rng, n);
            for (int t = 1; t < n; ++t) walk[t] += walk[t - 1];
            walk *= 10.0;
            const TimeSeries ts(start, 1, walk);
            for (const auto& d : {difference(ts, 1), difference(ts, 0, lag(rng)), difference(ts, 1, lag(rng))}) {
                worst_diff = std::max(worst_diff, (undifference(d.series, d.state).values() - walk).cwiseAbs().maxCoeff());
            }
            const auto a = arcsin_transform(ts, 1e-3);
            worst_arcsin = std::max(worst_arcsin, (sin_restore(a.series, a.state).values() - walk).cwiseAbs().maxCoeff());
            Eigen::VectorXd positive(n);
            for (auto& v : positive) v = pos(rng);
            const TimeSeries tp(start, 1, positive);
            const auto l = log_transform(tp);
            worst_log = std::max(worst_log, (exp_restore(l.series, l.state).values() - positive).cwiseAbs().maxCoeff());
        }
        const double worst = std::max({worst_diff, worst_arcsin, worst_log});
        return Outcome{worst < 1e-10, "max error: diff " + num(worst_diff, 2) + ", arcsin " + num(worst_arcsin, 2) +
                                          ", log " + num(worst_log, 2)};
    });

    criterion(4, "correlograms (AR(1), PACF oracle)", 0, [] {
        const auto x = simulate_arma({0.5}, 0.0, 10000, 4);
        const auto a = acf(x, 10);
        const auto p = pacf(x, 10);
        int outside = 0;
        for (int k = 2; k <= 10; ++k) outside += std::abs(p.values[k]) >= p.band;
        double oracle_err = 0.0;
        const auto small = simulate_arma({0.6, -0.2}, 0.0, 500, 40);
        const auto ps = pacf(small, 20);
        for (int k = 1; k <= 20; ++k) oracle_err = std::max(oracle_err, std::abs(pacf_oracle(small, k) - ps.values[k]));
        const bool ok = std::abs(a.values[1] - 0.5) <= 0.03 && outside == 0 && oracle_err < 1e-6;
        return Outcome{ok, "acf(1) " + num(a.values[1]) + ", pacf lags 2..10 outside band: " +
                               std::to_string(outside) + ", oracle error " + num(oracle_err, 2)};
    });

    criterion(5, "ARMA(1,1) recovery (20 seeds)", 60.0, [] {
        std::vector<double> errors;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto f = fit(ArimaSpec{1, 0, 1}, simulate_arma({0.6}, 0.3, 2000, 500 + seed));
            errors.push_back(std::abs(f.phi[0] - 0.6));
            errors.push_back(std::abs(f.theta[0] - 0.3));
        }
        std::sort(errors.begin(), errors.end());
        const double median = 0.5 * (errors[19] + errors[20]);
        const auto wn = simulate_arma({}, 0.0, 300, 7);
        const Eigen::VectorXd shifted = (wn.array() + 5.0).matrix();
        const double mean_err = std::abs(fit(ArimaSpec{}, shifted).intercept - shifted.mean());
        const bool ok = median <= 0.05 && errors.back() <= 0.1 && mean_err < 1e-8;
        return Outcome{ok, "median " + num(median, 3) + ", max " + num(errors.back(), 3) +
                               ", white-noise intercept error " + num(mean_err, 2)};
    });

    criterion(6, "auto_arima order selection", 0, [] {
        AutoArimaOptions grid;
        grid.threads = 0;
        int ar2 = 0;
        int white = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            ar2 += auto_arima(simulate_arma({0.5, -0.3}, 0.0, 500, 600 + seed), grid).best.spec.p == 2;
            const auto best = auto_arima(simulate_arma({}, 0.0, 500, 700 + seed), grid).best.spec;
            white += best.p == 0 && best.q == 0;
        }
        return Outcome{ar2 >= 80 && white >= 80, "AR(2) -> p=2 in " + std::to_string(ar2) +
                                                     "/100, white noise -> (0,0,0) in " + std::to_string(white) + "/100"};
    });

    criterion(7, "KRR interpolation and solve", 0, [] {
        std::mt19937_64 rng(7);
        const auto X = gaussian(rng, 10, 2);
        const auto y = gaussian(rng, 10);
        const auto m = krr_fit(X, y, 1e-12, KernelSpec::rbf(1.0));
        const double train_mse = (krr_predict(m, X) - y).squaredNorm() / 10.0;
        double worst = 0.0;
        std::uniform_int_distribution<int> size(2, 200);
        for (int trial = 0; trial < 30; ++trial) {
            const int n = size(rng);
            const auto Xn = gaussian(rng, n, 3);
            const auto yn = gaussian(rng, n);
            const KernelSpec k = trial % 2 ? KernelSpec::rbf(0.5) : KernelSpec::polynomial(2);
            const double lambda = 0.05 + 0.1 * trial;
            const auto mn = krr_fit(Xn, yn, lambda, k);
            const Eigen::MatrixXd A = gram(k, Xn, Xn) + lambda * Eigen::MatrixXd::Identity(n, n);
            worst = std::max(worst, (A * mn.alpha - yn).norm() / yn.norm());
        }
        return Outcome{train_mse < 1e-8 && worst < 1e-8,
                       "train MSE " + num(train_mse, 2) + ", worst relative residual " + num(worst, 2)};
    });

    criterion(8, "SVR KKT and QP oracle", 0, [] {
        std::mt19937_64 rng(8);
        std::uniform_int_distribution<int> size(3, 50);
        std::uniform_real_distribution<double> cdist(0.1, 10.0);
        std::uniform_real_distribution<double> edist(0.0, 0.5);
        int violations = 0;
        int converged = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const int n = size(rng);
            const auto X = gaussian(rng, n, 3);
            const auto y = gaussian(rng, n);
            const double C = cdist(rng);
            const double eps = edist(rng);
            const auto m = svr_fit(X, y, C, eps, trial % 3 ? KernelSpec::rbf(0.5) : KernelSpec::linear());
            if (!m.converged) continue;
            ++converged;
            bool ok = std::abs(m.beta.sum()) <= 1e-6 && m.beta.cwiseAbs().maxCoeff() <= C;
            const Eigen::VectorXd f = svr_predict(m, X);
            for (int i = 0; i < n; ++i) {
                if (std::abs(f[i] - y[i]) < eps - 1e-3 && m.beta[i] != 0.0) ok = false;
            }
            violations += !ok;
        }
        const auto X6 = gaussian(rng, 6, 2);
        const auto y6 = gaussian(rng, 6);
        SvrOptions opts;
        opts.tol = 1e-9;
        const auto m6 = svr_fit(X6, y6, 1.0, 0.1, KernelSpec::rbf(0.5), opts);
        const auto K = gram(KernelSpec::rbf(0.5), X6, X6);
        const double gap = std::abs(svr_dual_objective(K, y6, m6.beta, 0.1) -
                                    svr_dual_objective(K, y6, svr_qp_oracle(K, y6, 1.0, 0.1), 0.1));
        return Outcome{violations == 0 && converged > 0 && gap < 1e-4,
                       std::to_string(converged) + "/100 converged, " + std::to_string(violations) +
                           " KKT violations, 6-point dual gap " + num(gap, 2)};
    });

    criterion(9, "BPTT vs finite differences", 30.0, [] {
        double worst = 0.0;
        int models = 0;
        for (auto cell : {deep::CellKind::simple, deep::CellKind::lstm, deep::CellKind::gru}) {
            for (bool bi : {false, true}) {
                for (std::uint64_t seed = 0; seed < 10; ++seed) {
                    deep::RnnConfig cfg;
                    cfg.cell = cell;
                    cfg.bidirectional = bi;
                    cfg.window = 4;
                    cfg.hidden = 3;
                    cfg.initializer = deep::Initializer::uniform(-0.8, 0.8, 900 + seed);
                    auto model = deep::RnnModel::initialize(cfg);
                    std::mt19937_64 rng(950 + seed);
                    auto flat = model.flatten();
                    flat += 0.05 * gaussian(rng, flat.size());
                    model.unflatten(flat);
                    const auto X = gaussian(rng, 4, 5);
                    const Eigen::RowVectorXd y = gaussian(rng, 5).transpose();
                    worst = std::max(worst, worst_gradient_error(model, X, y));
                    ++models;
                }
            }
        }
        return Outcome{worst < 1e-4, std::to_string(models) + " models, worst relative error " + num(worst, 2)};
    });

    criterion(10, "LSTM on a sine wave", 120.0, [] {
        Eigen::VectorXd x(500);
        for (int t = 0; t < 500; ++t) x[t] = std::sin(2.0 * 3.14159265358979 * t / 25.0);
        deep::RnnConfig cfg;
        cfg.cell = deep::CellKind::lstm;
        cfg.window = 8;
        cfg.hidden = 16;
        cfg.epochs = 200;
        const auto r = deep::train(cfg, x.head(400));
        const auto pred = deep::predict_series(r.model, x.head(400), x.tail(100), deep::PredictMode::one_step);
        const double test_mse = ((pred - x.tail(100)).array() / r.model.scale).square().mean();
        const double train_mse = r.loss_history.back();
        return Outcome{train_mse < 0.05 && test_mse < 0.1,
                       "train MSE " + num(train_mse, 3) + ", one-step test MSE " + num(test_mse, 3)};
    });

    criterion(11, "expanding-window splitter", 0, [] {
        const auto folds = expanding_splits(8, CvSpec{3, 0});
        const std::vector<Fold> expected{{2, 2, 4}, {4, 4, 6}, {6, 6, 8}};
        bool ok = folds == expected;
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<int> ndist(2, 400);
        int checked = 0;
        while (checked < 1000) {
            const int n = ndist(rng);
            const CvSpec spec{std::uniform_int_distribution<int>(1, 10)(rng), std::uniform_int_distribution<int>(0, 20)(rng)};
            std::vector<Fold> fs;
            try {
                fs = expanding_splits(n, spec);
            } catch (const std::invalid_argument&) {
                continue;
            }
            ++checked;
            for (std::size_t i = 0; i < fs.size(); ++i) {
                ok = ok && fs[i].train_end - 1 + spec.gap < fs[i].test_begin && fs[i].test_end <= n &&
                     fs[i].test_size() == fs[0].test_size();
                if (i > 0) ok = ok && fs[i].train_end > fs[i - 1].train_end;
            }
        }
        return Outcome{ok, "n=8 example " + std::string(folds == expected ? "exact" : "wrong") + ", " +
                               std::to_string(checked) + " random specs checked"};
    });

    criterion(12, "MAPE and grouped MAPE", 0, [] {
        const double m = mape(Eigen::Vector2d(100, 200), Eigen::Vector2d(110, 180)).value;
        std::mt19937_64 rng(12);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const int n = std::uniform_int_distribution<int>(1, 60)(rng);
            const Eigen::VectorXd y = (gaussian(rng, n).array() + 3.0).matrix();
            const Eigen::VectorXd p = y + gaussian(rng, n);
            worst = std::max(worst, std::abs(grouped_mape(y, p, 1).value - mape(y, p).value));
        }
        return Outcome{m == 10.0 && worst == 0.0, "mape " + num(m, 17) + ", grouped(g=1) max difference " + num(worst)};
    });

    const std::vector<std::string> families{"arima", "auto_arima", "krr", "svr", "rnn", "lstm", "bilstm", "gru"};
    std::vector<std::string> completed;

    criterion(13, "cmd_run determinism per family", 0, [&] {
        std::string differing;
        for (const auto& f : families) {
            const auto config = load_pipeline_config(kSource / "configs" / (f + "_12m.ini"));
            std::ostringstream log;
            const auto a = kScratch / (f + "_12m");
            const auto b = kScratch / (f + "_12m_again");
            cmd_run(config, a, log);
            cmd_run(config, b, log);
            completed.push_back(f + "_12m");
            for (const auto& entry : fs::directory_iterator(a)) {
                if (slurp(entry.path()) != slurp(b / entry.path().filename())) {
                    differing += " " + f + "/" + entry.path().filename().string();
                }
            }
        }
        return Outcome{differing.empty(), differing.empty() ? "8 families byte-identical" : "differs:" + differing};
    });

    criterion(14, "all families on 6/10/12-month data", 0, [&] {
        std::string failed;
        int ok = 0;
        for (const auto& f : families) {
            for (const char* step : {"6m", "10m", "12m"}) {
                const auto name = f + "_" + step;
                const auto dir = kScratch / name;
                try {
                    if (std::find(completed.begin(), completed.end(), name) == completed.end()) {
                        std::ostringstream log;
                        cmd_run(load_pipeline_config(kSource / "configs" / (name + ".ini")), dir, log);
                    }
                    bool files = true;
                    for (const auto* file : {"fit.csv", "forecast.csv", "metrics.json"}) files = files && fs::exists(dir / file);
                    if (!files) throw std::runtime_error("missing outputs");
                    ++ok;
                } catch (const std::exception& ex) {
                    failed += " " + name + " (" + ex.what() + ")";
                }
            }
        }
        return Outcome{failed.empty(), std::to_string(ok) + "/24 runs complete" + (failed.empty() ? "" : ";" + failed)};
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
