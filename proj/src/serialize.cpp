#include "tsa/serialize.hpp"

#include <fstream>

#include "tsa/io.hpp"

namespace tsa {

namespace {

Json vector_json(const Eigen::VectorXd& v) {
    Json out = Json::array();
    for (double x : v) out.push_back(x);
    return out;
}

Eigen::VectorXd vector_from(const Json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

// Row-major nested arrays.
Json matrix_json(const Eigen::MatrixXd& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
    return out;
}

Eigen::MatrixXd matrix_from(const Json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw InputError("ragged matrix in model file");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

std::string kernel_kind_name(KernelKind k) {
    switch (k) {
        case KernelKind::rbf: return "rbf";
        case KernelKind::polynomial: return "polynomial";
        case KernelKind::linear: return "linear";
    }
    return "rbf";
}

KernelKind kernel_kind_from(const std::string& s) {
    if (s == "rbf") return KernelKind::rbf;
    if (s == "polynomial" || s == "poly") return KernelKind::polynomial;
    if (s == "linear") return KernelKind::linear;
    throw InputError("unknown kernel kind '" + s + "'");
}

std::string init_name(deep::InitKind k) {
    switch (k) {
        case deep::InitKind::uniform: return "uniform";
        case deep::InitKind::normal: return "normal";
        case deep::InitKind::truncated_normal: return "truncated_normal";
    }
    return "uniform";
}

deep::InitKind init_from(const std::string& s) {
    if (s == "uniform") return deep::InitKind::uniform;
    if (s == "normal") return deep::InitKind::normal;
    if (s == "truncated_normal") return deep::InitKind::truncated_normal;
    throw InputError("unknown initializer '" + s + "'");
}

}  // namespace

Json to_json(const TransformState& state) {
    Json j;
    j["kind"] = to_string(state.kind);
    switch (state.kind) {
        case TransformKind::difference:
        case TransformKind::seasonal_difference: {
            Json passes = Json::array();
            for (const auto& p : state.passes) {
                passes.push_back({{"lag", p.lag}, {"head", vector_json(p.head)}, {"tail", vector_json(p.tail)}});
            }
            j["passes"] = std::move(passes);
            break;
        }
        case TransformKind::arcsin_minmax:
            j["min"] = state.min;
            j["max"] = state.max;
            j["margin"] = state.margin;
            break;
        case TransformKind::log: break;
        case TransformKind::moving_average: j["window"] = state.window; break;
        case TransformKind::ewma: j["alpha"] = state.alpha; break;
    }
    j["order"] = state.order;
    j["lag"] = state.lag;
    return j;
}

TransformState transform_state_from_json(const Json& j) {
    TransformState s;
    s.kind = transform_kind_from_string(j.at("kind").get<std::string>());
    s.order = j.value("order", 0);
    s.lag = j.value("lag", 0);
    if (j.contains("passes")) {
        for (const auto& p : j.at("passes")) {
            s.passes.push_back({p.at("lag").get<int>(), vector_from(p.at("head")), vector_from(p.at("tail"))});
        }
    }
    s.min = j.value("min", 0.0);
    s.max = j.value("max", 0.0);
    s.margin = j.value("margin", 0.0);
    s.window = j.value("window", 0);
    s.alpha = j.value("alpha", 0.0);
    return s;
}

Json to_json(const ArimaSpec& spec) {
    return {{"p", spec.p}, {"d", spec.d}, {"q", spec.q}, {"P", spec.P},
            {"D", spec.D}, {"Q", spec.Q}, {"m", spec.m}, {"with_intercept", spec.with_intercept}};
}

ArimaSpec arima_spec_from_json(const Json& j) {
    ArimaSpec s{j.at("p").get<int>(), j.at("d").get<int>(), j.at("q").get<int>(), j.at("P").get<int>(),
                j.at("D").get<int>(), j.at("Q").get<int>(), j.at("m").get<int>(), j.at("with_intercept").get<bool>()};
    s.validate();
    return s;
}

Json to_json(const FittedArima& model) {
    Json j;
    j["family"] = "arima";
    j["spec"] = to_json(model.spec);
    j["phi"] = vector_json(model.phi);
    j["theta"] = vector_json(model.theta);
    j["seasonal_phi"] = vector_json(model.seasonal_phi);
    j["seasonal_theta"] = vector_json(model.seasonal_theta);
    j["intercept"] = model.intercept;
    j["sigma2"] = model.sigma2;
    j["loglik"] = model.loglik;
    j["aic"] = model.aic;
    j["diff_state"] = to_json(model.diff_state);
    j["differenced"] = vector_json(model.differenced);
    j["residuals"] = vector_json(model.residuals);
    return j;
}

FittedArima arima_from_json(const Json& j) {
    FittedArima m;
    m.spec = arima_spec_from_json(j.at("spec"));
    m.phi = vector_from(j.at("phi"));
    m.theta = vector_from(j.at("theta"));
    m.seasonal_phi = vector_from(j.at("seasonal_phi"));
    m.seasonal_theta = vector_from(j.at("seasonal_theta"));
    if (m.phi.size() != m.spec.p || m.theta.size() != m.spec.q || m.seasonal_phi.size() != m.spec.P ||
        m.seasonal_theta.size() != m.spec.Q) {
        throw InputError("ARIMA model file: coefficient counts do not match the spec");
    }
    m.intercept = j.at("intercept").get<double>();
    m.sigma2 = j.at("sigma2").get<double>();
    m.loglik = j.at("loglik").get<double>();
    m.aic = j.at("aic").get<double>();
    m.diff_state = transform_state_from_json(j.at("diff_state"));
    m.differenced = vector_from(j.at("differenced"));
    m.residuals = vector_from(j.at("residuals"));
    return m;
}

Json to_json(const KernelSpec& kernel) {
    Json j{{"kind", kernel_kind_name(kernel.kind)}};
    if (kernel.kind == KernelKind::rbf) j["gamma"] = kernel.gamma;
    if (kernel.kind == KernelKind::polynomial) {
        j["degree"] = kernel.degree;
        j["coef0"] = kernel.coef0;
    }
    return j;
}

KernelSpec kernel_spec_from_json(const Json& j) {
    KernelSpec k;
    k.kind = kernel_kind_from(j.at("kind").get<std::string>());
    k.gamma = j.value("gamma", 1.0);
    k.degree = j.value("degree", 2);
    k.coef0 = j.value("coef0", 1.0);
    k.validate();
    return k;
}

Json to_json(const KernelModelConfig& config) {
    Json j;
    j["family"] = config.family == KernelFamily::krr ? "krr" : "svr";
    j["kernel"] = to_json(config.kernel);
    if (config.family == KernelFamily::krr) {
        j["lambda"] = config.lambda;
    } else {
        j["C"] = config.C;
        j["epsilon"] = config.epsilon;
        j["tol"] = config.svr.tol;
    }
    j["window"] = config.embedding.window;
    j["time_feature"] = config.embedding.time_feature;
    return j;
}

KernelModelConfig kernel_config_from_json(const Json& j) {
    KernelModelConfig c;
    const auto family = j.at("family").get<std::string>();
    if (family != "krr" && family != "svr") throw InputError("unknown kernel family '" + family + "'");
    c.family = family == "krr" ? KernelFamily::krr : KernelFamily::svr;
    c.kernel = kernel_spec_from_json(j.at("kernel"));
    c.lambda = j.value("lambda", c.lambda);
    c.C = j.value("C", c.C);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.svr.tol = j.value("tol", c.svr.tol);
    c.embedding.window = j.at("window").get<int>();
    c.embedding.time_feature = j.value("time_feature", false);
    return c;
}

Json to_json(const LagRegressor& model) {
    Json j = to_json(model.config);
    j["input_mean"] = vector_json(model.input_scaler.mean.transpose());
    j["input_scale"] = vector_json(model.input_scaler.scale.transpose());
    j["target_mean"] = model.target_mean;
    j["target_scale"] = model.target_scale;
    if (const auto* krr = std::get_if<KrrModel>(&model.model)) {
        j["alpha"] = vector_json(krr->alpha);
        j["train_inputs"] = matrix_json(krr->train_inputs);
    } else {
        const auto& svr = std::get<SvrModel>(model.model);
        j["beta"] = vector_json(svr.beta);
        j["b"] = svr.b;
        j["converged"] = svr.converged;
        j["iterations"] = svr.iterations;
        j["kkt_gap"] = svr.kkt_gap;
        j["xi"] = vector_json(svr.xi);
        j["xi_star"] = vector_json(svr.xi_star);
        j["train_inputs"] = matrix_json(svr.train_inputs);
    }
    return j;
}

LagRegressor lag_regressor_from_json(const Json& j) {
    LagRegressor m;
    m.config = kernel_config_from_json(j);
    m.input_scaler.mean = vector_from(j.at("input_mean")).transpose();
    m.input_scaler.scale = vector_from(j.at("input_scale")).transpose();
    m.target_mean = j.at("target_mean").get<double>();
    m.target_scale = j.at("target_scale").get<double>();
    const auto inputs = matrix_from(j.at("train_inputs"));
    if (m.config.family == KernelFamily::krr) {
        KrrModel k;
        k.alpha = vector_from(j.at("alpha"));
        k.lambda = m.config.lambda;
        k.kernel = m.config.kernel;
        k.train_inputs = inputs;
        if (k.alpha.size() != inputs.rows()) throw InputError("KRR model file: alpha and inputs differ in length");
        m.model = std::move(k);
    } else {
        SvrModel s;
        s.beta = vector_from(j.at("beta"));
        s.b = j.at("b").get<double>();
        s.C = m.config.C;
        s.epsilon = m.config.epsilon;
        s.kernel = m.config.kernel;
        s.train_inputs = inputs;
        s.converged = j.value("converged", true);
        s.iterations = j.value("iterations", 0L);
        s.kkt_gap = j.value("kkt_gap", 0.0);
        s.xi = vector_from(j.at("xi"));
        s.xi_star = vector_from(j.at("xi_star"));
        if (s.beta.size() != inputs.rows()) throw InputError("SVR model file: beta and inputs differ in length");
        m.model = std::move(s);
    }
    return m;
}

Json to_json(const deep::RnnConfig& config) {
    return {{"cell", deep::to_string(config.cell)},
            {"bidirectional", config.bidirectional},
            {"stateful", config.stateful},
            {"window", config.window},
            {"hidden", config.hidden},
            {"activation", deep::to_string(config.activation.kind)},
            {"initializer",
             {{"kind", init_name(config.initializer.kind)},
              {"a", config.initializer.a},
              {"b", config.initializer.b},
              {"seed", config.initializer.seed}}},
            {"learning_rate", config.learning_rate},
            {"epochs", config.epochs},
            {"batch_size", config.batch_size}};
}

deep::RnnConfig rnn_config_from_json(const Json& j) {
    deep::RnnConfig c;
    c.cell = deep::cell_from_string(j.at("cell").get<std::string>());
    c.bidirectional = j.at("bidirectional").get<bool>();
    c.stateful = j.at("stateful").get<bool>();
    c.window = j.at("window").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.activation.kind = deep::activation_from_string(j.at("activation").get<std::string>());
    const auto& init = j.at("initializer");
    c.initializer.kind = init_from(init.at("kind").get<std::string>());
    c.initializer.a = init.at("a").get<double>();
    c.initializer.b = init.at("b").get<double>();
    c.initializer.seed = init.at("seed").get<std::uint64_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.validate();
    return c;
}

Json to_json(const deep::RnnModel& model) {
    Json j;
    j["family"] = "rnn";
    j["config"] = to_json(model.config);
    j["shapes"] = {{"hidden", model.forward_cell.hidden},
                   {"input", model.forward_cell.input},
                   {"gates", deep::gate_count(model.config.cell)},
                   {"directions", model.config.bidirectional ? 2 : 1}};
    j["parameters"] = vector_json(model.flatten());
    j["mean"] = model.mean;
    j["scale"] = model.scale;
    return j;
}

deep::RnnModel rnn_from_json(const Json& j) {
    auto model = deep::RnnModel::initialize(rnn_config_from_json(j.at("config")));
    const auto flat = vector_from(j.at("parameters"));
    if (flat.size() != model.parameter_count()) throw InputError("RNN model file: parameter count does not match config");
    model.unflatten(flat);
    model.mean = j.at("mean").get<double>();
    model.scale = j.at("scale").get<double>();
    return model;
}

void write_loss_history(const std::filesystem::path& path, const std::vector<double>& losses) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) out << (i + 1) << ',' << io::format_double(losses[i]) << '\n';
}

}  // namespace tsa
