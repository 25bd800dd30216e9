#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsa/errors.hpp"
#include "tsa/series.hpp"
#include "tsa/transforms.hpp"
#include "tsa/validation.hpp"

namespace tsa {

/**
 * @brief Sectioned `key = value` text.
 *
 * Lines are `[section]`, `key = value`, blank, or comments starting with `#`
 * or `;`. Keys before the first section belong to the unnamed section "".
 * Repeated keys within a section are an error.
 */
class IniDocument {
public:
    static IniDocument parse(std::istream& in);
    static IniDocument load(const std::filesystem::path& path);

    [[nodiscard]] bool has(const std::string& section, const std::string& key) const;
    [[nodiscard]] std::optional<std::string> get(const std::string& section, const std::string& key) const;
    [[nodiscard]] const std::map<std::string, std::map<std::string, std::string>>& sections() const { return data_; }

private:
    std::map<std::string, std::map<std::string, std::string>> data_;
};

enum class ModelFamily { arima, auto_arima, krr, svr, rnn, lstm, bilstm, gru };

std::string to_string(ModelFamily family);
ModelFamily model_family_from_string(const std::string& name);

/// Causal smoothing applied before everything else; it cannot be undone, so
/// the smoothed series becomes the evaluation target.
struct SmoothingStep {
    TransformKind kind = TransformKind::moving_average;
    double param = 0.0;  ///< window or alpha
};

struct PipelineConfig {
    std::optional<std::filesystem::path> input;
    int step_months = 12;
    std::optional<Date> origin;
    double test_fraction = 0.2;

    std::vector<SmoothingStep> smoothing;
    std::vector<TransformStep> transforms;

    ModelFamily family = ModelFamily::arima;
    /// Raw `[model]` entries; comma-separated values form a search grid.
    std::map<std::string, std::vector<std::string>> model;

    std::optional<CvSpec> cv;
    std::optional<int> group_size;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    /// Throws ConfigError when the combination is inconsistent.
    void validate() const;
};

/// Reads and validates a pipeline configuration. Unknown sections or keys are errors.
PipelineConfig parse_pipeline_config(const IniDocument& doc);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

}  // namespace tsa
