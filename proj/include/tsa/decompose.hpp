#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "tsa/series.hpp"

namespace tsa {

/// Series component with explicitly missing slots (std::nullopt), no NaN sentinels.
using MaskedValues = std::vector<std::optional<double>>;

struct Decomposition {
    MaskedValues trend;
    Eigen::VectorXd seasonal;  ///< one period of zero-mean phase effects, tiled over the series
    MaskedValues residual;
    int period = 0;
};

/**
 * @brief Classical additive decomposition x = trend + seasonal + residual.
 *
 * Trend is the centered moving average over one period (a 2 x m average for
 * even m). The first and last floor(m/2) trend and residual slots are missing.
 */
Decomposition decompose(const TimeSeries& ts, int period);

}  // namespace tsa
