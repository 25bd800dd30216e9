#include "tsa/pipeline.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <type_traits>

#include "tsa/decompose.hpp"
#include "tsa/diagnostics.hpp"
#include "tsa/io.hpp"
#include "tsa/validation.hpp"

namespace tsa {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    return out;
}

void write_json(const fs::path& path, const Json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

std::string cell(double v) { return std::isfinite(v) ? io::format_double(v) : std::string(); }

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json to_json_array(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v[i]));
    return a;
}

/// Writes `index,timestamp,actual,<column>` rows for original indices [first, first + actual.size()).
void write_comparison_csv(const fs::path& path, const TimeSeries& grid, Eigen::Index first,
                          const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted, const std::string& column) {
    auto out = open_output(path);
    out << "index,timestamp,actual," << column << '\n';
    for (Eigen::Index k = 0; k < actual.size(); ++k) {
        const auto t = first + k;
        out << t << ',' << format_iso(grid.time_at(t)) << ',' << cell(actual[k]) << ',' << cell(predicted[k]) << '\n';
    }
}

void write_masked_csv(const fs::path& path, const TimeSeries& ts, const MaskedValues& values) {
    auto out = open_output(path);
    out << "timestamp,value\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        out << format_iso(ts.time_at(static_cast<Eigen::Index>(i))) << ',';
        if (values[i]) out << io::format_double(*values[i]);
        out << '\n';
    }
}

int default_period(int step_months) {
    return std::max(1, static_cast<int>(std::lround(12.0 / step_months)));
}

// ---------------------------------------------------------------------------
// Model plan

using Assignment = std::map<std::string, std::string>;

template <class T>
T parse_value(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    T value{};
    in >> value;
    if (in.fail() || !in.eof()) throw ConfigError("model." + key + ": '" + text + "' is not a valid value");
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("model." + key + ": expected true or false, got '" + text + "'");
}

template <class T>
T get_or(const Assignment& a, const std::string& key, T fallback) {
    const auto it = a.find(key);
    if (it == a.end()) return fallback;
    if constexpr (std::is_same_v<T, bool>) {
        return parse_bool(key, it->second);
    } else if constexpr (std::is_same_v<T, std::string>) {
        return it->second;
    } else {
        return parse_value<T>(key, it->second);
    }
}

const std::set<std::string>& family_keys(ModelFamily family) {
    static const std::set<std::string> arima{"p", "d", "q", "P", "D", "Q", "m", "intercept", "predict_mode"};
    static const std::set<std::string> auto_arima{"max_p", "max_q", "max_P", "max_Q", "d", "D", "m", "intercept",
                                                  "predict_mode"};
    static const std::set<std::string> krr{"kernel", "gamma", "degree", "coef0", "lambda", "window",
                                           "time_feature", "search", "predict_mode"};
    static const std::set<std::string> svr{"kernel", "gamma",  "degree", "coef0",        "C",      "epsilon",
                                           "tol",    "window", "time_feature", "search", "predict_mode"};
    static const std::set<std::string> rnn{"window",     "hidden",      "epochs", "batch_size", "learning_rate",
                                           "activation", "initializer", "init_a", "init_b",     "stateful",
                                           "predict_mode"};
    switch (family) {
        case ModelFamily::arima: return arima;
        case ModelFamily::auto_arima: return auto_arima;
        case ModelFamily::krr: return krr;
        case ModelFamily::svr: return svr;
        default: return rnn;
    }
}

bool is_kernel(ModelFamily f) { return f == ModelFamily::krr || f == ModelFamily::svr; }

std::vector<Assignment> cartesian(const std::map<std::string, std::vector<std::string>>& lists) {
    std::vector<Assignment> out{Assignment{}};
    for (const auto& [key, values] : lists) {
        std::vector<Assignment> next;
        for (const auto& partial : out) {
            for (const auto& v : values) {
                auto a = partial;
                a[key] = v;
                next.push_back(std::move(a));
            }
        }
        out = std::move(next);
    }
    return out;
}

std::string fmt(double v) { return io::format_double(v); }

ArimaSpec arima_candidate(const Assignment& a, int period) {
    ArimaSpec s;
    s.p = get_or(a, "p", 0);
    s.d = get_or(a, "d", 0);
    s.q = get_or(a, "q", 0);
    s.P = get_or(a, "P", 0);
    s.D = get_or(a, "D", 0);
    s.Q = get_or(a, "Q", 0);
    s.m = get_or(a, "m", period);
    if (s.P == 0 && s.D == 0 && s.Q == 0 && !a.count("m")) s.m = 1;
    s.with_intercept = get_or(a, "intercept", s.d + s.D == 0);
    s.validate();
    return s;
}

KernelSpec kernel_candidate(const Assignment& a) {
    const auto kind = get_or<std::string>(a, "kernel", "rbf");
    KernelSpec k;
    if (kind == "rbf") {
        k = KernelSpec::rbf(get_or(a, "gamma", 0.1));
    } else if (kind == "polynomial" || kind == "poly") {
        k = KernelSpec::polynomial(get_or(a, "degree", 2), get_or(a, "coef0", 1.0));
    } else if (kind == "linear") {
        k = KernelSpec::linear();
    } else {
        throw ConfigError("unknown kernel '" + kind + "'");
    }
    k.validate();
    return k;
}

std::string kernel_label(const KernelModelConfig& c) {
    std::string s = (c.family == KernelFamily::krr ? "krr " : "svr ") + c.kernel.to_string();
    if (c.family == KernelFamily::krr) {
        s += " lambda=" + fmt(c.lambda);
    } else {
        s += " C=" + fmt(c.C) + " epsilon=" + fmt(c.epsilon);
    }
    s += " window=" + std::to_string(c.embedding.window);
    if (c.embedding.time_feature) s += " time";
    return s;
}

deep::Initializer initializer_candidate(const Assignment& a, std::uint64_t seed) {
    const auto kind = get_or<std::string>(a, "initializer", "uniform");
    if (kind == "uniform") return deep::Initializer::uniform(get_or(a, "init_a", -0.5), get_or(a, "init_b", 0.5), seed);
    if (kind == "normal") return deep::Initializer::normal(get_or(a, "init_a", 0.0), get_or(a, "init_b", 0.1), seed);
    if (kind == "truncated_normal") {
        return deep::Initializer::truncated_normal(get_or(a, "init_a", 0.0), get_or(a, "init_b", 0.1), seed);
    }
    throw ConfigError("unknown initializer '" + kind + "'");
}

std::string rnn_label(const deep::RnnConfig& c) {
    std::string s = c.bidirectional ? "bilstm" : deep::to_string(c.cell);
    s += " hidden=" + std::to_string(c.hidden) + " window=" + std::to_string(c.window) +
         " epochs=" + std::to_string(c.epochs) + " batch=" + std::to_string(c.batch_size) +
         " lr=" + fmt(c.learning_rate) + " activation=" + deep::to_string(c.activation.kind);
    if (c.stateful) s += " stateful";
    return s;
}

// ---------------------------------------------------------------------------
// Fitting in transformed units

/// A fitted model of any family plus what it produced on the training data.
struct FittedModel {
    Json model_json;
    Eigen::VectorXd in_sample;  ///< one-step predictions aligned with the training series, NaN where undefined
    std::vector<double> loss_history;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& future, deep::PredictMode mode)> predict;
};

FittedModel fit_candidate(const ModelCandidate& candidate, const Eigen::VectorXd& y) {
    FittedModel out;
    const auto n = y.size();
    out.in_sample = Eigen::VectorXd::Constant(n, kNaN);
    std::visit(
        [&](const auto& c) {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, ArimaSpec> || std::is_same_v<C, AutoArimaOptions>) {
                FittedArima m;
                if constexpr (std::is_same_v<C, ArimaSpec>) {
                    m = fit(c, y);
                } else {
                    m = auto_arima(y, c).best;
                }
                out.in_sample = fitted_values(m, y);
                const auto conditioned =
                    std::min<Eigen::Index>(n, m.spec.differencing_loss() + m.spec.max_ar_lag());
                out.in_sample.head(conditioned).setConstant(kNaN);
                out.model_json = to_json(m);
                out.predict = [m, y](const Eigen::VectorXd& future, deep::PredictMode mode) -> Eigen::VectorXd {
                    if (mode == deep::PredictMode::recursive) {
                        return forecast(m, static_cast<int>(future.size())).values;
                    }
                    Eigen::VectorXd all(y.size() + future.size());
                    all << y, future;
                    return fitted_values(m, all).tail(future.size());
                };
            } else if constexpr (std::is_same_v<C, KernelModelConfig>) {
                auto m = fit_lag_regressor(y, c);
                const int w = c.embedding.window;
                out.in_sample.tail(n - w) = forecast_one_step(m, y.head(w), y.tail(n - w));
                out.model_json = to_json(m);
                out.predict = [m, y](const Eigen::VectorXd& future, deep::PredictMode mode) -> Eigen::VectorXd {
                    if (mode == deep::PredictMode::recursive) {
                        return forecast_recursive(m, y, static_cast<int>(future.size()));
                    }
                    return forecast_one_step(m, y, future);
                };
            } else {
                auto trained = deep::train(c, y);
                out.in_sample.tail(n - c.window) = deep::fitted_values(trained.model, y);
                out.loss_history = trained.loss_history;
                out.model_json = to_json(trained.model);
                out.predict = [m = std::move(trained.model), y](const Eigen::VectorXd& future,
                                                                deep::PredictMode mode) -> Eigen::VectorXd {
                    return deep::predict_series(m, y, future, mode);
                };
            }
        },
        candidate);
    return out;
}

/// Fold score: MSE of the test slice predictions in transformed units.
double score_fold(const ModelCandidate& candidate, const Eigen::VectorXd& y, const Fold& fold, deep::PredictMode mode) {
    const auto fitted = fit_candidate(candidate, y.head(fold.train_end));
    // Observed gap values extend the history without entering training.
    const Eigen::VectorXd gap = y.segment(fold.train_end, fold.test_begin - fold.train_end);
    const Eigen::VectorXd test = y.segment(fold.test_begin, fold.test_size());
    Eigen::VectorXd future(gap.size() + test.size());
    future << gap, test;
    const Eigen::VectorXd pred = fitted.predict(future, mode).tail(test.size());
    if (!pred.allFinite()) throw ModelError("non-finite predictions");
    return mse(test, pred);
}

Json cv_report(const PipelineConfig& config, const CvSpec& cv, const ModelPlan& plan, const GridSearchResult& r) {
    Json folds = Json::array();
    for (const auto& f : r.folds) {
        folds.push_back({{"train_end", f.train_end}, {"test_begin", f.test_begin}, {"test_end", f.test_end}});
    }
    Json candidates = Json::array();
    for (const auto& s : r.scores) {
        Json c{{"index", s.index}, {"label", plan.labels[s.index]}, {"ok", s.ok}};
        c["fold_scores"] = s.fold_scores;
        c["mean_score"] = number_or_null(s.mean_score);
        if (!s.ok) c["error"] = s.error;
        candidates.push_back(std::move(c));
    }
    return Json{{"family", to_string(config.family)},
                {"score", "mse (transformed units)"},
                {"n_splits", cv.n_splits},
                {"gap", cv.gap},
                {"folds", std::move(folds)},
                {"candidates", std::move(candidates)},
                {"winner", {{"index", r.best}, {"label", plan.labels[r.best]}}}};
}

/// Everything up to the transformed training series.
struct Prepared {
    TimeSeries full;
    TimeSeries train;
    TimeSeries test;
    TransformChain chain;
    std::vector<TransformState> smoothing;
    ModelPlan plan;
};

Prepared prepare(const PipelineConfig& config, std::ostream& log) {
    if (!config.input) throw ConfigError("no input series: set [data] input or pass --input");
    TimeSeries full = load_series(*config.input, config.step_months, config.origin);
    std::vector<TransformState> smoothing;
    for (const auto& s : config.smoothing) {
        try {
            auto out = s.kind == TransformKind::ewma ? ewma(full, s.param) : moving_average(full, static_cast<int>(s.param));
            full = out.series;
            smoothing.push_back(out.state);
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(std::string("smoothing: ") + ex.what());
        }
    }
    std::pair<TimeSeries, TimeSeries> parts{full, full};
    try {
        parts = train_test_split(full, SplitSpec{config.test_fraction});
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("split: ") + ex.what());
    }
    TransformChain chain;
    try {
        chain = TransformChain::fit(config.transforms, parts.first);
    } catch (const std::invalid_argument& ex) {
        throw InputError(std::string("transform: ") + ex.what());
    }
    log << "series: " << full.size() << " points from " << format_iso(full.start()) << ", step "
        << full.step_months() << " months; train " << parts.first.size() << ", test " << parts.second.size() << '\n';
    return {full, parts.first, parts.second, std::move(chain), std::move(smoothing),
            build_model_plan(config, full.step_months())};
}

std::optional<GridSearchResult> search(const PipelineConfig& config, const ModelPlan& plan, const Eigen::VectorXd& y,
                                       bool force) {
    if (plan.candidates.size() < 2 && !force) return std::nullopt;
    const CvSpec cv = config.cv.value_or(CvSpec{});
    try {
        return grid_search(
            plan.candidates, [&](const ModelCandidate& c, const Fold& f) { return score_fold(c, y, f, plan.mode); },
            cv, y.size(), config.threads);
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("cv: ") + ex.what());
    }
}

}  // namespace

TimeSeries load_series(const fs::path& path, int step_months, const std::optional<Date>& origin, bool check_step) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    if (header.rfind("timestamp", 0) == 0) {
        auto ts = io::read_series_csv(path);
        if (check_step && ts.size() > 1 && ts.step_months() != step_months) {
            throw ConfigError("series step is " + std::to_string(ts.step_months()) + " months but step_months is " +
                              std::to_string(step_months));
        }
        return ts;
    }
    const auto events = io::read_event_csv(path);
    return origin ? aggregate_events(events, step_months, *origin) : aggregate_events(events, step_months);
}

TimeSeries cmd_ingest(const IngestOptions& options, std::ostream& log) {
    if (options.step_months < 1) throw ConfigError("step_months must be >= 1");
    const auto events = io::read_event_csv(options.input);
    const auto ts = options.origin ? aggregate_events(events, options.step_months, *options.origin)
                                   : aggregate_events(events, options.step_months);
    io::write_series_csv(options.output, ts);
    log << "n=" << ts.size() << " sum=" << io::format_double(ts.values().sum()) << " span=" << format_iso(ts.start())
        << ".." << format_iso(ts.end()) << '\n';
    return ts;
}

Json cmd_diagnose(const DiagnoseOptions& options, std::ostream& log) {
    TimeSeries ts = load_series(options.input, options.step_months, std::nullopt, false);
    if (options.difference) ts = difference(ts, 1).series;
    const auto& x = ts.values();
    if (x.size() < 2 || (x.array() == x[0]).all()) throw DiagnosticError("series has zero variance");

    const auto adf = adf_test(x);
    const auto n = x.size();
    int lags = options.max_lag.value_or(static_cast<int>(std::floor(10.0 * std::log10(static_cast<double>(n)))));
    lags = std::min<int>(lags, static_cast<int>(n / 2 - 1));
    if (lags < 1) throw DiagnosticError("series too short for correlograms");
    const auto a = acf(x, lags);
    const auto p = pacf(x, lags);
    const auto orders = suggest_orders(a, p);

    const Json report{
        {"series", {{"n", n}, {"start", format_iso(ts.start())}, {"step_months", ts.step_months()},
                    {"differenced", options.difference}}},
        {"adf",
         {{"statistic", adf.statistic},
          {"pvalue", adf.p_value},
          {"lags", adf.lags_used},
          {"nobs", adf.n_obs},
          {"critical_values",
           {{"1%", adf.critical_values[0]}, {"5%", adf.critical_values[1]}, {"10%", adf.critical_values[2]}}}}},
        {"hypothesis", adf.stationary ? "Reject the null hypothesis" : "Fail to reject the null hypothesis"},
        {"verdict", adf.stationary ? "Data is stationary" : "Data is non-stationary"},
        {"acf", to_json_array(a.values)},
        {"pacf", to_json_array(p.values)},
        {"band", a.band},
        {"suggested_orders", {{"p", orders.p}, {"q", orders.q}}}};
    fs::create_directories(options.output_dir);
    write_json(options.output_dir / "diagnose.json", report);

    const int period = options.period.value_or(default_period(ts.step_months()));
    if (options.period || period >= 2) {
        if (period < 2 || n < 2 * period) {
            throw DiagnosticError("series too short for decomposition period " + std::to_string(period));
        }
        const auto dec = decompose(ts, period);
        write_masked_csv(options.output_dir / "trend.csv", ts, dec.trend);
        MaskedValues seasonal(dec.seasonal.begin(), dec.seasonal.end());
        write_masked_csv(options.output_dir / "seasonal.csv", ts, seasonal);
        write_masked_csv(options.output_dir / "residual.csv", ts, dec.residual);
    }
    log << "ADF statistic " << io::format_double(adf.statistic) << ", p-value " << io::format_double(adf.p_value)
        << ": " << report["verdict"].get<std::string>() << '\n';
    return report;
}

ModelPlan build_model_plan(const PipelineConfig& config, int step_months) {
    ModelPlan plan;
    plan.family = config.family;
    const auto& allowed = family_keys(config.family);
    auto lists = config.model;
    for (const auto& [key, values] : lists) {
        if (!allowed.count(key)) {
            throw ConfigError("model." + key + " does not apply to family " + to_string(config.family));
        }
    }

    plan.mode = config.family == ModelFamily::arima || config.family == ModelFamily::auto_arima
                    ? deep::PredictMode::recursive
                    : deep::PredictMode::one_step;
    if (const auto it = lists.find("predict_mode"); it != lists.end()) {
        if (it->second.size() != 1) throw ConfigError("model.predict_mode takes one value");
        const auto& m = it->second.front();
        if (m == "one_step") {
            plan.mode = deep::PredictMode::one_step;
        } else if (m == "recursive") {
            plan.mode = deep::PredictMode::recursive;
        } else {
            throw ConfigError("model.predict_mode must be one_step or recursive");
        }
        lists.erase(it);
    }
    const int period = default_period(step_months);

    try {
        if (config.family == ModelFamily::auto_arima) {
            AutoArimaOptions o;
            Assignment a;
            for (const auto& [key, values] : lists) {
                if (key == "d" || key == "D") continue;
                if (values.size() != 1) throw ConfigError("model." + key + " takes one value for auto_arima");
                a[key] = values.front();
            }
            o.max_p = get_or(a, "max_p", 2);
            o.max_q = get_or(a, "max_q", 2);
            o.max_P = get_or(a, "max_P", 0);
            o.max_Q = get_or(a, "max_Q", 0);
            o.d_range.clear();
            o.D_range.clear();
            for (const auto& v : lists.count("d") ? lists.at("d") : std::vector<std::string>{"0"}) {
                o.d_range.push_back(parse_value<int>("d", v));
            }
            for (const auto& v : lists.count("D") ? lists.at("D") : std::vector<std::string>{"0"}) {
                o.D_range.push_back(parse_value<int>("D", v));
            }
            const bool seasonal = o.max_P > 0 || o.max_Q > 0 ||
                                  std::any_of(o.D_range.begin(), o.D_range.end(), [](int D) { return D > 0; });
            o.m = get_or(a, "m", seasonal ? period : 1);
            o.with_intercept = get_or(a, "intercept", true);
            o.threads = config.threads;
            plan.candidates.emplace_back(o);
            plan.labels.push_back("auto_arima(max_p=" + std::to_string(o.max_p) + ",max_q=" + std::to_string(o.max_q) +
                                  ",max_P=" + std::to_string(o.max_P) + ",max_Q=" + std::to_string(o.max_Q) +
                                  ",m=" + std::to_string(o.m) + ")");
            return plan;
        }

        if (is_kernel(config.family)) {
            const auto family = config.family == ModelFamily::krr ? KernelFamily::krr : KernelFamily::svr;
            const bool use_default = lists.count("search") && lists.at("search") == std::vector<std::string>{"default"};
            if (lists.count("search") && !use_default) throw ConfigError("model.search supports only 'default'");
            lists.erase("search");
            if (use_default) {
                for (const auto& key : {"kernel", "gamma", "degree", "coef0", "lambda", "C", "epsilon"}) {
                    if (lists.count(key)) {
                        throw ConfigError(std::string("model.") + key + " conflicts with search = default");
                    }
                }
            }
            std::set<std::string> seen;
            for (const auto& a : cartesian(lists)) {
                EmbeddingSpec emb;
                emb.window = get_or(a, "window", 4);
                emb.time_feature = get_or(a, "time_feature", false);
                std::vector<KernelModelConfig> configs;
                if (use_default) {
                    configs = default_kernel_grid(family, emb);
                } else {
                    KernelModelConfig c;
                    c.family = family;
                    c.kernel = kernel_candidate(a);
                    c.lambda = get_or(a, "lambda", 1e-2);
                    c.C = get_or(a, "C", 1.0);
                    c.epsilon = get_or(a, "epsilon", 0.1);
                    c.embedding = emb;
                    configs.push_back(c);
                }
                for (auto& c : configs) {
                    c.svr.tol = get_or(a, "tol", 1e-3);
                    if (emb.window < 1) throw ConfigError("model.window must be >= 1");
                    if (!(c.lambda >= 0.0) || !(c.C > 0.0) || !(c.epsilon >= 0.0)) {
                        throw ConfigError("kernel hyperparameters out of range in " + kernel_label(c));
                    }
                    auto label = kernel_label(c);
                    if (!seen.insert(label).second) continue;
                    plan.candidates.emplace_back(c);
                    plan.labels.push_back(std::move(label));
                }
            }
            return plan;
        }

        std::set<std::string> seen;
        for (const auto& a : cartesian(lists)) {
            if (config.family == ModelFamily::arima) {
                auto s = arima_candidate(a, period);
                auto label = s.to_string();
                if (!seen.insert(label).second) continue;
                plan.candidates.emplace_back(s);
                plan.labels.push_back(std::move(label));
                continue;
            }
            deep::RnnConfig c;
            c.cell = config.family == ModelFamily::gru    ? deep::CellKind::gru
                     : config.family == ModelFamily::rnn ? deep::CellKind::simple
                                                          : deep::CellKind::lstm;
            c.bidirectional = config.family == ModelFamily::bilstm;
            c.window = get_or(a, "window", 8);
            c.hidden = get_or(a, "hidden", 16);
            c.epochs = get_or(a, "epochs", 100);
            c.batch_size = get_or(a, "batch_size", 32);
            c.learning_rate = get_or(a, "learning_rate", 0.01);
            c.stateful = get_or(a, "stateful", false);
            c.activation.kind = deep::activation_from_string(get_or<std::string>(a, "activation", "tanh"));
            c.initializer = initializer_candidate(a, config.seed);
            c.validate();
            auto label = rnn_label(c);
            if (!seen.insert(label).second) continue;
            plan.candidates.emplace_back(c);
            plan.labels.push_back(std::move(label));
        }
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("model: ") + ex.what());
    }
    return plan;
}

RunResult cmd_run(const PipelineConfig& config, const fs::path& output_dir, std::ostream& log) {
    config.validate();
    auto prep = prepare(config, log);
    const auto& plan = prep.plan;
    const auto& chain = prep.chain;
    const Eigen::VectorXd y = chain.transformed_train().values();
    const Eigen::Index n_train = prep.train.size();
    const Eigen::Index horizon = prep.test.size();
    const Eigen::Index offset = chain.offset();

    RunResult result;
    std::size_t chosen = 0;
    if (auto grid = search(config, plan, y, false)) {
        chosen = grid->best;
        result.cv_report = cv_report(config, config.cv.value_or(CvSpec{}), plan, *grid);
        log << "grid search over " << plan.candidates.size() << " candidates: " << plan.labels[chosen] << '\n';
    }
    result.label = plan.labels[chosen];

    FittedModel fitted;
    Eigen::VectorXd predicted;
    Eigen::VectorXd fitted_orig = Eigen::VectorXd::Constant(n_train, kNaN);
    try {
        fitted = fit_candidate(plan.candidates[chosen], y);
        const Eigen::VectorXd future = chain.apply(prep.full).values().tail(horizon);
        const Eigen::VectorXd top = fitted.predict(future, plan.mode);
        predicted = plan.mode == deep::PredictMode::one_step ? chain.restore_one_step(top, prep.full, n_train)
                                                             : chain.restore_continuation(top);
        Eigen::Index k0 = 0;
        while (k0 < y.size() && !std::isfinite(fitted.in_sample[k0])) ++k0;
        if (k0 < y.size()) {
            fitted_orig.tail(y.size() - k0) =
                chain.restore_one_step(fitted.in_sample.tail(y.size() - k0), prep.train, offset + k0);
        }
    } catch (const std::invalid_argument& ex) {
        throw ModelError(result.label + ": " + ex.what());
    } catch (const ModelError& ex) {
        throw ModelError(result.label + ": " + ex.what());
    }
    if (!predicted.allFinite()) throw ModelError(result.label + ": non-finite forecast");

    const Eigen::VectorXd& actual = prep.test.values();
    Json metrics{{"family", to_string(config.family)},
                 {"model", result.label},
                 {"predict_mode", plan.mode == deep::PredictMode::one_step ? "one_step" : "recursive"},
                 {"n_train", n_train},
                 {"n_test", horizon}};
    try {
        const auto m = mape(actual, predicted);
        metrics["mape"] = {{"value", m.value}, {"excluded", m.excluded}};
    } catch (const std::invalid_argument&) {
        metrics["mape"] = {{"value", nullptr}, {"excluded", horizon}};
    }
    if (config.group_size) {
        try {
            const auto g = grouped_mape(actual, predicted, *config.group_size);
            metrics["grouped_mape"] = {{"group_size", *config.group_size}, {"value", g.value}, {"excluded", g.excluded}};
        } catch (const std::invalid_argument&) {
            metrics["grouped_mape"] = {{"group_size", *config.group_size}, {"value", nullptr}};
        }
    }
    metrics["mse"] = mse(actual, predicted);
    metrics["rmse"] = rmse(actual, predicted);
    metrics["mae"] = mae(actual, predicted);

    fs::create_directories(output_dir);
    write_comparison_csv(output_dir / "fit.csv", prep.full, 0, prep.train.values(), fitted_orig, "fitted");
    write_comparison_csv(output_dir / "forecast.csv", prep.full, n_train, actual, predicted, "predicted");
    write_json(output_dir / "metrics.json", metrics);

    Json transforms = Json::array();
    for (const auto& s : prep.smoothing) transforms.push_back(to_json(s));
    for (const auto& s : chain.states()) transforms.push_back(to_json(s));
    write_json(output_dir / "model.json", Json{{"family", to_string(config.family)},
                                               {"label", result.label},
                                               {"seed", config.seed},
                                               {"transforms", std::move(transforms)},
                                               {"model", fitted.model_json}});
    if (!fitted.loss_history.empty()) write_loss_history(output_dir / "loss.csv", fitted.loss_history);
    if (result.cv_report) write_json(output_dir / "cv.json", *result.cv_report);

    log << result.label << ": MAPE ";
    if (metrics["mape"]["value"].is_null()) {
        log << "undefined";
    } else {
        log << io::format_double(metrics["mape"]["value"].get<double>()) << '%';
    }
    log << ", RMSE " << io::format_double(metrics["rmse"].get<double>()) << '\n';
    result.metrics = std::move(metrics);
    return result;
}

Json cmd_cv(const PipelineConfig& config, const fs::path& output_dir, std::ostream& log) {
    config.validate();
    const auto prep = prepare(config, log);
    if (config.family == ModelFamily::auto_arima) throw ConfigError("cv does not apply to auto_arima (AIC selection)");
    const Eigen::VectorXd y = prep.chain.transformed_train().values();
    const auto grid = search(config, prep.plan, y, true);
    auto report = cv_report(config, config.cv.value_or(CvSpec{}), prep.plan, *grid);
    fs::create_directories(output_dir);
    write_json(output_dir / "cv.json", report);
    log << "best of " << prep.plan.candidates.size() << ": " << prep.plan.labels[grid->best] << " (mean MSE "
        << io::format_double(grid->scores[grid->best].mean_score) << ")\n";
    return report;
}

int exit_code_for(const std::exception& ex) noexcept {
    if (dynamic_cast<const InputError*>(&ex)) return 2;
    if (dynamic_cast<const DiagnosticError*>(&ex)) return 3;
    if (dynamic_cast<const ModelError*>(&ex)) return 4;
    if (dynamic_cast<const ConfigError*>(&ex)) return 5;
    return 1;
}

}  // namespace tsa
