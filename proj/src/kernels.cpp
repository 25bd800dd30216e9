#include "tsa/kernels.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>

namespace tsa {

void KernelSpec::validate() const {
    switch (kind) {
        case KernelKind::rbf:
            if (!(gamma > 0.0)) throw std::invalid_argument("rbf kernel needs gamma > 0");
            break;
        case KernelKind::polynomial:
            if (degree < 1) throw std::invalid_argument("polynomial kernel needs degree >= 1");
            break;
        case KernelKind::linear: break;
    }
}

std::string KernelSpec::to_string() const {
    std::ostringstream os;
    switch (kind) {
        case KernelKind::rbf: os << "rbf(gamma=" << gamma << ')'; break;
        case KernelKind::polynomial: os << "poly(degree=" << degree << ",coef0=" << coef0 << ')'; break;
        case KernelKind::linear: os << "linear"; break;
    }
    return os.str();
}

Embedded embed(const Eigen::VectorXd& x, const EmbeddingSpec& spec) {
    const int w = spec.window;
    if (w < 1) throw std::invalid_argument("embedding window must be >= 1");
    if (x.size() <= w) throw std::invalid_argument("series must be longer than the embedding window");
    const auto rows = x.size() - w;
    Embedded out;
    out.inputs.resize(rows, w + (spec.time_feature ? 1 : 0));
    out.targets = x.tail(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        out.inputs.row(r).head(w) = x.segment(r, w).transpose();
        if (spec.time_feature) out.inputs(r, w) = static_cast<double>(r + w);
    }
    return out;
}

KrrModel krr_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const KernelSpec& kernel) {
    kernel.validate();
    if (X.rows() != y.size() || X.rows() == 0) throw std::invalid_argument("krr_fit: need one target per input row");
    if (!(lambda >= 0.0)) throw std::invalid_argument("krr_fit: lambda must be non-negative");

    Eigen::MatrixXd A = gram(kernel, X, X);
    A.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("krr_fit: kernel system is not positive definite (increase lambda)");
    }
    KrrModel model;
    model.alpha = llt.solve(y);
    if (!model.alpha.allFinite()) throw std::runtime_error("krr_fit: singular kernel system");
    model.lambda = lambda;
    model.kernel = kernel;
    model.train_inputs = X;
    return model;
}

Eigen::VectorXd krr_predict(const KrrModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.train_inputs.cols()) throw std::invalid_argument("krr_predict: dimension mismatch");
    return gram(model.kernel, X, model.train_inputs) * model.alpha;
}

double svr_dual_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                          double epsilon) {
    return y.dot(beta) - epsilon * beta.lpNorm<1>() - 0.5 * beta.dot(K * beta);
}

SvrModel svr_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double C, double epsilon,
                 const KernelSpec& kernel, const SvrOptions& options) {
    kernel.validate();
    if (!(C > 0.0)) throw std::invalid_argument("svr_fit: C must be positive");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("svr_fit: epsilon must be non-negative");
    if (X.rows() != y.size() || X.rows() == 0) throw std::invalid_argument("svr_fit: need one target per input row");

    const auto n = X.rows();
    const auto l = 2 * n;
    const Eigen::MatrixXd K = gram(kernel, X, X);

    // Variables z = [alpha; alpha*] with signs s = [+1; -1]:
    // minimize z'Qz/2 + p'z, Q_ij = s_i s_j K, p = [eps - y; eps + y], s'z = 0, 0 <= z <= C.
    auto sign = [n](Eigen::Index t) { return t < n ? 1.0 : -1.0; };
    auto Q = [&](Eigen::Index a, Eigen::Index b) { return sign(a) * sign(b) * K(a % n, b % n); };

    Eigen::VectorXd z = Eigen::VectorXd::Zero(l);
    Eigen::VectorXd G(l);
    G.head(n) = epsilon - y.array();
    G.tail(n) = epsilon + y.array();

    constexpr double tau = 1e-12;
    const long max_iter = options.max_iterations > 0 ? options.max_iterations : std::max<long>(1000000, 100 * n);
    auto in_up = [&](Eigen::Index t) { return sign(t) > 0 ? z[t] < C : z[t] > 0.0; };
    auto in_low = [&](Eigen::Index t) { return sign(t) > 0 ? z[t] > 0.0 : z[t] < C; };

    SvrModel model;
    long iter = 0;
    double gap = 0.0;
    while (true) {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        Eigen::Index i = -1;
        Eigen::Index j = -1;
        for (Eigen::Index t = 0; t < l; ++t) {
            const double v = -sign(t) * G[t];
            if (in_up(t) && v > gmax) {
                gmax = v;
                i = t;
            }
            if (in_low(t) && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        gap = (i < 0 || j < 0) ? 0.0 : gmax - gmin;
        if (gap < options.tol) {
            model.converged = true;
            break;
        }
        if (iter >= max_iter) break;
        ++iter;

        const double old_i = z[i];
        const double old_j = z[j];
        if (sign(i) != sign(j)) {
            double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
            if (quad <= 0.0) quad = tau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = z[i] - z[j];
            z[i] += delta;
            z[j] += delta;
            if (diff > 0.0) {
                if (z[j] < 0.0) {
                    z[j] = 0.0;
                    z[i] = diff;
                }
            } else if (z[i] < 0.0) {
                z[i] = 0.0;
                z[j] = -diff;
            }
            if (diff > 0.0) {
                if (z[i] > C) {
                    z[i] = C;
                    z[j] = C - diff;
                }
            } else if (z[j] > C) {
                z[j] = C;
                z[i] = C + diff;
            }
        } else {
            double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
            if (quad <= 0.0) quad = tau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = z[i] + z[j];
            z[i] -= delta;
            z[j] += delta;
            if (sum > C) {
                if (z[i] > C) {
                    z[i] = C;
                    z[j] = sum - C;
                }
            } else if (z[j] < 0.0) {
                z[j] = 0.0;
                z[i] = sum;
            }
            if (sum > C) {
                if (z[j] > C) {
                    z[j] = C;
                    z[i] = sum - C;
                }
            } else if (z[i] < 0.0) {
                z[i] = 0.0;
                z[j] = sum;
            }
        }

        const double di = z[i] - old_i;
        const double dj = z[j] - old_j;
        for (Eigen::Index t = 0; t < l; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;

        if (options.objective_trace) {
            const Eigen::VectorXd beta = z.head(n) - z.tail(n);
            options.objective_trace->push_back(svr_dual_objective(K, y, beta, epsilon));
        }
    }

    // Offset from free variables, or the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int free_count = 0;
    for (Eigen::Index t = 0; t < l; ++t) {
        const double yg = sign(t) * G[t];
        if (z[t] >= C) {
            if (sign(t) < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (z[t] <= 0.0) {
            if (sign(t) > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++free_count;
            sum_free += yg;
        }
    }
    const double rho = free_count > 0 ? sum_free / free_count : 0.5 * (ub + lb);

    model.beta = z.head(n) - z.tail(n);
    model.b = -rho;
    model.C = C;
    model.epsilon = epsilon;
    model.kernel = kernel;
    model.train_inputs = X;
    model.iterations = iter;
    model.kkt_gap = gap;
    const Eigen::VectorXd f = K * model.beta + Eigen::VectorXd::Constant(n, model.b);
    model.xi = (y - f).array() - epsilon;
    model.xi = model.xi.cwiseMax(0.0);
    model.xi_star = (f - y).array() - epsilon;
    model.xi_star = model.xi_star.cwiseMax(0.0);
    return model;
}

Eigen::VectorXd svr_predict(const SvrModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.train_inputs.cols()) throw std::invalid_argument("svr_predict: dimension mismatch");
    return (gram(model.kernel, X, model.train_inputs) * model.beta).array() + model.b;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
    Standardizer s;
    s.mean = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - s.mean;
    s.scale = (centered.colwise().squaredNorm() / static_cast<double>(X.rows())).cwiseSqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
        if (!(s.scale[j] > 0.0)) s.scale[j] = 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    return (X.rowwise() - mean).array().rowwise() / scale.array();
}

double LagRegressor::predict_one(const Eigen::VectorXd& window, Eigen::Index target_index) const {
    const int w = config.embedding.window;
    if (window.size() != w) throw std::invalid_argument("predict_one: window length mismatch");
    Eigen::MatrixXd row(1, w + (config.embedding.time_feature ? 1 : 0));
    row.row(0).head(w) = window.transpose();
    if (config.embedding.time_feature) row(0, w) = static_cast<double>(target_index);
    const Eigen::MatrixXd z = input_scaler.apply(row);
    const double scaled = std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, KrrModel>) return krr_predict(m, z)[0];
            else return svr_predict(m, z)[0];
        },
        model);
    return target_mean + target_scale * scaled;
}

LagRegressor fit_lag_regressor(const Eigen::VectorXd& series, const KernelModelConfig& config) {
    const auto data = embed(series, config.embedding);
    LagRegressor reg;
    reg.config = config;
    reg.input_scaler = Standardizer::fit(data.inputs);
    reg.target_mean = data.targets.mean();
    const double spread = std::sqrt((data.targets.array() - reg.target_mean).square().mean());
    reg.target_scale = spread > 0.0 ? spread : 1.0;

    const Eigen::MatrixXd X = reg.input_scaler.apply(data.inputs);
    const Eigen::VectorXd y = (data.targets.array() - reg.target_mean) / reg.target_scale;
    if (config.family == KernelFamily::krr) {
        reg.model = krr_fit(X, y, config.lambda, config.kernel);
    } else {
        reg.model = svr_fit(X, y, config.C, config.epsilon, config.kernel, config.svr);
    }
    return reg;
}

Eigen::VectorXd forecast_recursive(const LagRegressor& model, const Eigen::VectorXd& history, int horizon) {
    return forecast_recursive([&](const Eigen::VectorXd& w, Eigen::Index t) { return model.predict_one(w, t); },
                              history, horizon, model.config.embedding.window);
}

Eigen::VectorXd forecast_one_step(const LagRegressor& model, const Eigen::VectorXd& history, const Eigen::VectorXd& test) {
    return forecast_one_step([&](const Eigen::VectorXd& w, Eigen::Index t) { return model.predict_one(w, t); },
                             history, test, model.config.embedding.window);
}

std::vector<KernelModelConfig> default_kernel_grid(KernelFamily family, EmbeddingSpec embedding) {
    std::vector<KernelSpec> kernels;
    for (double g : {0.01, 0.1, 1.0, 10.0}) kernels.push_back(KernelSpec::rbf(g));
    kernels.push_back(KernelSpec::polynomial(2));
    kernels.push_back(KernelSpec::polynomial(3));
    kernels.push_back(KernelSpec::linear());

    std::vector<KernelModelConfig> grid;
    for (const auto& k : kernels) {
        if (family == KernelFamily::krr) {
            for (double lambda : {1e-4, 1e-2, 1.0, 10.0}) {
                KernelModelConfig c;
                c.family = family;
                c.kernel = k;
                c.lambda = lambda;
                c.embedding = embedding;
                grid.push_back(c);
            }
        } else {
            for (double C : {0.1, 1.0, 10.0, 100.0}) {
                for (double eps : {0.01, 0.05, 0.1, 0.5}) {
                    KernelModelConfig c;
                    c.family = family;
                    c.kernel = k;
                    c.C = C;
                    c.epsilon = eps;
                    c.embedding = embedding;
                    grid.push_back(c);
                }
            }
        }
    }
    return grid;
}

}  // namespace tsa
