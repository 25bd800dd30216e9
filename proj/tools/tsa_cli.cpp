#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tsa/pipeline.hpp"

namespace {

tsa::PipelineConfig load_config(const std::string& path, const std::string& input, std::optional<std::uint64_t> seed) {
    if (path.empty()) throw tsa::ConfigError("--config is required");
    auto config = tsa::load_pipeline_config(path);
    if (!input.empty()) config.input = input;
    if (seed) config.seed = *seed;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-series diagnostics and forecasting"};
    app.require_subcommand(1);

    std::string input;
    std::string output_dir = ".";
    std::string config_path;
    std::optional<std::uint64_t> seed;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--input", input, "Event CSV (Date column) or series CSV (timestamp,value)");
        cmd->add_option("--output-dir", output_dir, "Directory for output files");
        cmd->add_option("--seed", seed, "Seed for weight initialization (overrides the config)");
        cmd->add_option("--config", config_path, "Pipeline configuration file");
    };

    int step_months = 12;
    std::string origin;
    std::string output;
    auto* ingest = app.add_subcommand("ingest", "Aggregate an event CSV into a series CSV");
    add_common(ingest);
    ingest->add_option("--step", step_months, "Months per interval")->check(CLI::PositiveNumber);
    ingest->add_option("--origin", origin, "First interval start, YYYY-MM-DD");
    ingest->add_option("--output", output, "Series CSV path (default <output-dir>/series.csv)");

    std::optional<int> period;
    std::optional<int> max_lag;
    bool differenced = false;
    auto* diagnose = app.add_subcommand("diagnose", "ADF test, ACF/PACF and decomposition");
    add_common(diagnose);
    diagnose->add_option("--step", step_months, "Months per interval when --input is an event CSV")
        ->check(CLI::PositiveNumber);
    diagnose->add_option("--period", period, "Decomposition period (default 12 / step when >= 2)");
    diagnose->add_option("--max-lag", max_lag, "Correlogram lags");
    diagnose->add_flag("--difference", differenced, "Apply one differencing pass first");

    auto* run = app.add_subcommand("run", "Fit, forecast the test split and write metrics");
    add_common(run);
    auto* cv = app.add_subcommand("cv", "Cross-validate the configured candidates");
    add_common(cv);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            if (input.empty()) throw tsa::InputError("--input is required");
            tsa::IngestOptions o;
            o.input = input;
            o.step_months = step_months;
            if (!origin.empty()) {
                try {
                    o.origin = tsa::parse_iso(origin);
                } catch (const tsa::InputError& ex) {
                    throw tsa::ConfigError(std::string("--origin: ") + ex.what());
                }
            }
            o.output = output.empty() ? std::filesystem::path(output_dir) / "series.csv" : std::filesystem::path(output);
            tsa::cmd_ingest(o, std::cout);
        } else if (diagnose->parsed()) {
            if (input.empty()) throw tsa::InputError("--input is required");
            tsa::DiagnoseOptions o;
            o.input = input;
            o.output_dir = output_dir;
            o.step_months = step_months;
            o.period = period;
            o.max_lag = max_lag;
            o.difference = differenced;
            tsa::cmd_diagnose(o, std::cout);
        } else if (run->parsed()) {
            tsa::cmd_run(load_config(config_path, input, seed), output_dir, std::cout);
        } else if (cv->parsed()) {
            tsa::cmd_cv(load_config(config_path, input, seed), output_dir, std::cout);
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return tsa::exit_code_for(ex);
    }
    return 0;
}
