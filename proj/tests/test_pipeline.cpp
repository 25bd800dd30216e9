#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tsa/io.hpp"
#include "tsa/pipeline.hpp"

using namespace tsa;
namespace fs = std::filesystem;

namespace {

const fs::path kEvents = fs::path(TSA_SOURCE_DIR) / "data" / "crashes_synthetic.csv";

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "tsa_pipeline_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

IniDocument ini(const std::string& text) {
    std::istringstream in(text);
    return IniDocument::parse(in);
}

PipelineConfig config_for(const std::string& model_section, const std::string& chain = "",
                          const std::string& extra = "") {
    return parse_pipeline_config(ini("seed = 3\n[data]\ninput = " + kEvents.string() +
                                     "\nstep_months = 12\ntest_fraction = 0.2\n[transform]\nchain = " + chain +
                                     "\n[model]\n" + model_section + "\n" + extra));
}

int run_cli(const std::string& args) {
    const auto log = fs::temp_directory_path() / "tsa_pipeline_test" / "cli.log";
    fs::create_directories(log.parent_path());
    const int status = std::system((std::string(TSA_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t data_rows(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::size_t rows = 0;
    std::getline(in, line);
    while (std::getline(in, line)) rows += !line.empty();
    return rows;
}

}  // namespace

TEST_CASE("ini grammar") {
    const auto doc = ini("# comment\n top = 1 \n; other comment\n[a]\nx = hello world\n  y=2\n\n[b]\nx = 3\n");
    CHECK(doc.get("", "top") == "1");
    CHECK(doc.get("a", "x") == "hello world");
    CHECK(doc.get("a", "y") == "2");
    CHECK(doc.get("b", "x") == "3");
    CHECK_FALSE(doc.has("b", "y"));
    CHECK_THROWS_AS(ini("[a]\nx = 1\nx = 2\n"), ConfigError);
    CHECK_THROWS_AS(ini("[a\n"), ConfigError);
    CHECK_THROWS_AS(ini("[a]\njust text\n"), ConfigError);
    CHECK_THROWS_AS(ini("[a]\n = 4\n"), ConfigError);
}

TEST_CASE("pipeline config parsing and validation") {
    const auto cfg = config_for("family = krr\nlambda = 0.1, 1\nwindow = 3", "ma:3, log, diff:1, arcsin:0.01",
                                "[cv]\nn_splits = 4\ngap = 1\n[metrics]\ngroup_size = 2\n");
    CHECK(cfg.seed == 3);
    CHECK(cfg.family == ModelFamily::krr);
    REQUIRE(cfg.smoothing.size() == 1);
    CHECK(cfg.smoothing[0].param == 3.0);
    REQUIRE(cfg.transforms.size() == 3);
    CHECK(cfg.transforms[0].kind == TransformKind::log);
    CHECK(cfg.transforms[1].kind == TransformKind::difference);
    CHECK(cfg.transforms[2].param == 0.01);
    CHECK(cfg.model.at("lambda") == std::vector<std::string>{"0.1", "1"});
    CHECK(cfg.cv->n_splits == 4);
    CHECK(cfg.cv->gap == 1);
    CHECK(cfg.group_size == 2);

    CHECK_THROWS_AS(config_for("family = krr", "arcsin, arcsin"), ConfigError);
    CHECK_THROWS_AS(config_for("family = krr", "log, diff, log"), ConfigError);
    CHECK_THROWS_AS(config_for("family = arima", "diff:1"), ConfigError);
    CHECK_THROWS_AS(config_for("family = auto_arima", "sdiff:12"), ConfigError);
    CHECK_THROWS_AS(config_for("family = krr", "log, ma:3"), ConfigError);
    CHECK_THROWS_AS(config_for("family = krr", "sdiff"), ConfigError);
    CHECK_THROWS_AS(config_for("family = krr", "wavelet"), ConfigError);
    CHECK_THROWS_AS(config_for("family = transformer"), ConfigError);
    CHECK_THROWS_AS(config_for("family = krr\nfoo = 1"), ConfigError);
    CHECK_THROWS_AS(config_for("family = krr", "", "[extra]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(config_for("family = krr", "", "[cv]\nn_splits = three\n"), ConfigError);
    CHECK_THROWS_AS(parse_pipeline_config(ini("[data]\nstep_months = 12\n")), ConfigError);
    CHECK_THROWS_AS(parse_pipeline_config(ini("[data]\ntest_fraction = 1.5\n[model]\nfamily = krr\n")), ConfigError);
    CHECK_THROWS_AS(parse_pipeline_config(ini("[data]\norigin = 1990-13-01\n[model]\nfamily = krr\n")), ConfigError);
}

TEST_CASE("model plan expansion") {
    const auto arima = build_model_plan(config_for("family = arima\np = 0, 1, 2\nd = 1\nq = 0, 1"), 12);
    CHECK(arima.candidates.size() == 6);
    CHECK(arima.mode == deep::PredictMode::recursive);
    CHECK(arima.labels.front() == "ARIMA(0,1,0)");

    const auto seasonal = build_model_plan(config_for("family = arima\np = 1\nP = 1"), 6);
    CHECK(std::get<ArimaSpec>(seasonal.candidates.front()).m == 2);
    CHECK_THROWS_AS(build_model_plan(config_for("family = arima\nP = 1"), 12), ConfigError);

    CHECK(build_model_plan(config_for("family = krr\nsearch = default"), 12).candidates.size() == 28);
    CHECK(build_model_plan(config_for("family = svr\nsearch = default"), 12).candidates.size() == 112);
    CHECK_THROWS_AS(build_model_plan(config_for("family = krr\nsearch = default\ngamma = 1"), 12), ConfigError);
    CHECK_THROWS_AS(build_model_plan(config_for("family = krr\nhidden = 4"), 12), ConfigError);
    CHECK_THROWS_AS(build_model_plan(config_for("family = lstm\nhidden = 0"), 12), ConfigError);
    CHECK_THROWS_AS(build_model_plan(config_for("family = lstm\npredict_mode = sideways"), 12), ConfigError);

    // Kernel kinds ignore parameters of other kinds, so duplicates collapse.
    const auto kernels = build_model_plan(config_for("family = krr\nkernel = rbf, linear\ngamma = 0.1, 1"), 12);
    CHECK(kernels.candidates.size() == 3);

    const auto bilstm = build_model_plan(config_for("family = bilstm\nhidden = 2, 3"), 12);
    REQUIRE(bilstm.candidates.size() == 2);
    const auto& c = std::get<deep::RnnConfig>(bilstm.candidates.front());
    CHECK(c.bidirectional);
    CHECK(c.cell == deep::CellKind::lstm);
    CHECK(c.initializer.seed == 3);
    CHECK(bilstm.mode == deep::PredictMode::one_step);
}

TEST_CASE("ingest counts every event row") {
    const auto dir = scratch("ingest");
    std::ostringstream log;
    const auto s12 = cmd_ingest({kEvents, dir / "s12.csv", 12, std::nullopt}, log);
    const auto s6 = cmd_ingest({kEvents, dir / "s6.csv", 6, std::nullopt}, log);
    CHECK(s12.values().sum() == static_cast<double>(data_rows(kEvents)));
    CHECK(s6.values().sum() == static_cast<double>(data_rows(kEvents)));
    CHECK(std::abs(s6.size() - 2 * s12.size()) <= 1);
    CHECK(io::read_series_csv(dir / "s12.csv").values() == s12.values());
    CHECK(log.str().find("n=" + std::to_string(s12.size())) != std::string::npos);

    write_text(dir / "nodate.csv", "When,Where\n01/01/2000,x\n");
    CHECK_THROWS_AS(cmd_ingest({dir / "nodate.csv", dir / "out.csv", 12, std::nullopt}, log), InputError);
}

TEST_CASE("diagnose report") {
    const auto dir = scratch("diagnose");
    std::ostringstream log;
    cmd_ingest({kEvents, dir / "s12.csv", 12, std::nullopt}, log);

    DiagnoseOptions o;
    o.input = dir / "s12.csv";
    o.output_dir = dir / "level";
    o.period = 4;
    const auto level = cmd_diagnose(o, log);
    for (const auto* key : {"statistic", "pvalue", "lags", "nobs", "critical_values"}) CHECK(level["adf"].contains(key));
    CHECK(level["acf"].size() == level["pacf"].size());
    CHECK(level["acf"][0].get<double>() == 1.0);
    CHECK(level.contains("band"));
    CHECK(level["suggested_orders"].contains("p"));
    for (const auto* f : {"diagnose.json", "trend.csv", "seasonal.csv", "residual.csv"}) CHECK(fs::exists(o.output_dir / f));
    // Missing trend slots are empty fields, never NaN text.
    const auto trend = slurp(o.output_dir / "trend.csv");
    CHECK(trend.find("nan") == std::string::npos);
    CHECK(trend.find(",\n") != std::string::npos);

    // Differenced white noise around a level is clearly stationary.
    std::string text = "timestamp,value\n";
    double walk = 0.0;
    unsigned state = 12345;
    for (int i = 0; i < 120; ++i) {
        state = state * 1103515245u + 12345u;
        walk += static_cast<double>((state >> 16) % 1000) / 100.0 - 5.0;
        text += std::to_string(1900 + i) + "-01-01," + io::format_double(walk) + "\n";
    }
    write_text(dir / "walk.csv", text);
    o.input = dir / "walk.csv";
    o.output_dir = dir / "diff";
    o.period.reset();
    o.difference = true;
    CHECK(cmd_diagnose(o, log)["verdict"] == "Data is stationary");

    write_text(dir / "const.csv", "timestamp,value\n2000-01-01,3\n2001-01-01,3\n2002-01-01,3\n2003-01-01,3\n");
    o.input = dir / "const.csv";
    o.difference = false;
    CHECK_THROWS_AS(cmd_diagnose(o, log), DiagnosticError);

    o.input = dir / "s12.csv";
    o.period = 80;
    CHECK_THROWS_AS(cmd_diagnose(o, log), DiagnosticError);
}

TEST_CASE("run writes aligned outputs in original units") {
    const auto dir = scratch("run_arima");
    std::ostringstream log;
    const auto cfg = config_for("family = arima\np = 1\nd = 1\nq = 1", "log", "[metrics]\ngroup_size = 1\n");
    const auto result = cmd_run(cfg, dir, log);
    for (const auto* f : {"fit.csv", "forecast.csv", "metrics.json", "model.json"}) CHECK(fs::exists(dir / f));
    CHECK_FALSE(fs::exists(dir / "cv.json"));

    const auto full = load_series(kEvents, 12);
    const auto fit_rows = io::parse_csv(*std::make_unique<std::ifstream>(dir / "fit.csv"));
    const auto fc_rows = io::parse_csv(*std::make_unique<std::ifstream>(dir / "forecast.csv"));
    const auto n_train = result.metrics["n_train"].get<Eigen::Index>();
    const auto n_test = result.metrics["n_test"].get<Eigen::Index>();
    CHECK(n_train + n_test == full.size());
    REQUIRE(static_cast<Eigen::Index>(fit_rows.size()) == n_train + 1);
    REQUIRE(static_cast<Eigen::Index>(fc_rows.size()) == n_test + 1);
    CHECK(fc_rows[0] == io::Row{"index", "timestamp", "actual", "predicted"});

    // Forecast timestamps continue the training grid; actuals are raw counts.
    double abs_pct = 0.0;
    Eigen::Index used = 0;
    for (Eigen::Index k = 0; k < n_test; ++k) {
        const auto& row = fc_rows[k + 1];
        CHECK(std::stol(row[0]) == n_train + k);
        CHECK(row[1] == format_iso(add_months(full.start(), 12 * (n_train + k))));
        const double actual = std::stod(row[2]);
        CHECK(actual == full[n_train + k]);
        if (actual != 0.0) {
            abs_pct += std::abs(actual - std::stod(row[3])) / actual;
            ++used;
        }
    }
    CHECK(result.metrics["mape"]["value"].get<double>() == doctest::Approx(100.0 * abs_pct / used).epsilon(1e-12));
    CHECK(result.metrics["grouped_mape"]["value"].get<double>() ==
          doctest::Approx(result.metrics["mape"]["value"].get<double>()).epsilon(1e-12));
    CHECK(result.metrics["rmse"].get<double>() ==
          doctest::Approx(std::sqrt(result.metrics["mse"].get<double>())).epsilon(1e-12));
}

TEST_CASE("kernel run with arcsin chain reports original-unit metrics") {
    const auto dir = scratch("run_krr");
    std::ostringstream log;
    const auto cfg = config_for("family = krr\nlambda = 0.01, 1\nwindow = 3", "diff:1, arcsin:0.01",
                                "[cv]\nn_splits = 3\n");
    const auto result = cmd_run(cfg, dir, log);
    CHECK(result.cv_report.has_value());
    CHECK(fs::exists(dir / "cv.json"));
    CHECK((*result.cv_report)["candidates"].size() == 2);
    CHECK((*result.cv_report)["folds"].size() == 3);

    const auto full = load_series(kEvents, 12);
    const auto rows = io::parse_csv(*std::make_unique<std::ifstream>(dir / "forecast.csv"));
    Eigen::VectorXd actual(rows.size() - 1);
    Eigen::VectorXd predicted(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        actual[i - 1] = std::stod(rows[i][2]);
        predicted[i - 1] = std::stod(rows[i][3]);
    }
    CHECK(actual == full.values().tail(actual.size()));
    // Counts are tens per year: transformed-unit errors would be orders of magnitude smaller.
    CHECK(result.metrics["mae"].get<double>() == doctest::Approx((actual - predicted).cwiseAbs().mean()).epsilon(1e-9));
    CHECK(result.metrics["mae"].get<double>() > 1.0);
}

TEST_CASE("recurrent run is byte-for-byte reproducible") {
    const auto a = scratch("rnn_a");
    const auto b = scratch("rnn_b");
    std::ostringstream log;
    const auto cfg = config_for("family = gru\nwindow = 4\nhidden = 3\nepochs = 5\nbatch_size = 8", "log");
    cmd_run(cfg, a, log);
    cmd_run(cfg, b, log);
    for (const auto* f : {"fit.csv", "forecast.csv", "metrics.json", "model.json", "loss.csv"}) {
        CHECK(slurp(a / f) == slurp(b / f));
    }
    auto other = cfg;
    other.seed = 4;
    cmd_run(other, b, log);
    CHECK(slurp(a / "forecast.csv") != slurp(b / "forecast.csv"));
}

TEST_CASE("cli exit codes") {
    const auto dir = scratch("cli");
    write_text(dir / "nodate.csv", "When\n01/01/2000\n");
    CHECK(run_cli("ingest --input " + (dir / "nodate.csv").string() + " --output-dir " + dir.string()) == 2);
    CHECK(run_cli("ingest --input " + kEvents.string() + " --step 12 --output " + (dir / "s.csv").string()) == 0);
    CHECK(fs::exists(dir / "s.csv"));

    write_text(dir / "const.csv", "timestamp,value\n2000-01-01,1\n2001-01-01,1\n2002-01-01,1\n");
    CHECK(run_cli("diagnose --input " + (dir / "const.csv").string() + " --output-dir " + dir.string()) == 3);

    write_text(dir / "bad.ini", "[model]\nfamily = arima\n[transform]\nchain = diff:1\n");
    CHECK(run_cli("run --config " + (dir / "bad.ini").string() + " --input " + kEvents.string()) == 5);

    write_text(dir / "big.ini", "[data]\nstep_months = 12\n[model]\nfamily = lstm\nwindow = 500\nepochs = 1\n");
    CHECK(run_cli("run --config " + (dir / "big.ini").string() + " --input " + kEvents.string() + " --output-dir " +
                  (dir / "big").string()) == 4);

    write_text(dir / "ok.ini", "[data]\nstep_months = 12\n[model]\nfamily = arima\np = 1\n");
    CHECK(run_cli("run --config " + (dir / "ok.ini").string() + " --input " + kEvents.string() + " --seed 5" +
                  " --output-dir " + (dir / "ok").string()) == 0);
    CHECK(fs::exists(dir / "ok" / "forecast.csv"));
    CHECK(run_cli("cv --config " + (dir / "ok.ini").string() + " --input " + kEvents.string() + " --output-dir " +
                  (dir / "okcv").string()) == 0);
    CHECK(fs::exists(dir / "okcv" / "cv.json"));
}
