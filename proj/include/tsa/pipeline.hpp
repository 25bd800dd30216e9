#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tsa/arima.hpp"
#include "tsa/config.hpp"
#include "tsa/deep.hpp"
#include "tsa/kernels.hpp"
#include "tsa/serialize.hpp"

namespace tsa {

/// Reads a `timestamp,value` series CSV, or aggregates an event CSV with a `Date` column.
/// With `check_step`, a series CSV on a different grid than `step_months` is a ConfigError.
TimeSeries load_series(const std::filesystem::path& path, int step_months, const std::optional<Date>& origin = {},
                       bool check_step = true);

struct IngestOptions {
    std::filesystem::path input;
    std::filesystem::path output;
    int step_months = 12;
    std::optional<Date> origin;
};

/// Event CSV to series CSV. Prints the length, total count and date span to `log`.
TimeSeries cmd_ingest(const IngestOptions& options, std::ostream& log);

struct DiagnoseOptions {
    std::filesystem::path input;
    std::filesystem::path output_dir;
    int step_months = 12;  ///< used only when the input is an event CSV
    std::optional<int> period;
    bool difference = false;
    std::optional<int> max_lag;
};

/**
 * @brief ADF, correlograms and decomposition of one series.
 *
 * Writes diagnose.json and, when a period >= 2 applies, trend.csv,
 * seasonal.csv and residual.csv. A constant series is a DiagnosticError.
 */
Json cmd_diagnose(const DiagnoseOptions& options, std::ostream& log);

using ModelCandidate = std::variant<ArimaSpec, AutoArimaOptions, KernelModelConfig, deep::RnnConfig>;

struct ModelPlan {
    ModelFamily family = ModelFamily::arima;
    std::vector<ModelCandidate> candidates;
    std::vector<std::string> labels;
    deep::PredictMode mode = deep::PredictMode::recursive;
};

/// Expands the `[model]` section into candidates (cartesian product of list values).
/// `step_months` sets the default seasonal period. Throws ConfigError.
ModelPlan build_model_plan(const PipelineConfig& config, int step_months);

struct RunResult {
    std::string label;
    Json metrics;
    std::optional<Json> cv_report;
};

/// Split, transforms, fit or grid search, forecast, restore, metrics. Writes
/// fit.csv, forecast.csv, metrics.json and model.json (loss.csv for recurrent
/// models, cv.json after a grid search) into `output_dir`.
RunResult cmd_run(const PipelineConfig& config, const std::filesystem::path& output_dir, std::ostream& log);

/// Cross-validates every candidate on the training portion and writes cv.json.
Json cmd_cv(const PipelineConfig& config, const std::filesystem::path& output_dir, std::ostream& log);

/// Process exit code for an exception: 2 input, 3 diagnostic, 4 model, 5 config, 1 otherwise.
int exit_code_for(const std::exception& ex) noexcept;

}  // namespace tsa
