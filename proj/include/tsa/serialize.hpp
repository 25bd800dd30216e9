#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"

#include "tsa/arima.hpp"
#include "tsa/deep.hpp"
#include "tsa/kernels.hpp"

namespace tsa {

using Json = nlohmann::ordered_json;

Json to_json(const TransformState& state);
TransformState transform_state_from_json(const Json& j);

Json to_json(const ArimaSpec& spec);
ArimaSpec arima_spec_from_json(const Json& j);
/// Spec, coefficient arrays, sigma2, loglik, aic and the differencing seeds.
Json to_json(const FittedArima& model);
FittedArima arima_from_json(const Json& j);

Json to_json(const KernelSpec& kernel);
KernelSpec kernel_spec_from_json(const Json& j);
Json to_json(const KernelModelConfig& config);
KernelModelConfig kernel_config_from_json(const Json& j);
/// Kernel spec, hyperparameters, dual coefficients, standardization and training inputs.
Json to_json(const LagRegressor& model);
LagRegressor lag_regressor_from_json(const Json& j);

Json to_json(const deep::RnnConfig& config);
deep::RnnConfig rnn_config_from_json(const Json& j);
/// Config, cell shapes, flattened parameters (row-major) and standardization.
Json to_json(const deep::RnnModel& model);
deep::RnnModel rnn_from_json(const Json& j);

/// `epoch,loss` with epochs numbered from 1.
void write_loss_history(const std::filesystem::path& path, const std::vector<double>& losses);

}  // namespace tsa
