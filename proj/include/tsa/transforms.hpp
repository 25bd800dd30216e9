#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tsa/series.hpp"

namespace tsa {

enum class TransformKind { difference, seasonal_difference, arcsin_minmax, log, ewma, moving_average };

std::string to_string(TransformKind kind);
TransformKind transform_kind_from_string(const std::string& name);

/// One lag-k differencing pass: the first and last `lag` values of its input.
struct DiffPass {
    int lag = 1;
    Eigen::VectorXd head;
    Eigen::VectorXd tail;
};

/**
 * @brief Everything needed to undo a forward transform.
 *
 * Differencing keeps one DiffPass per pass in application order. The arcsin
 * map keeps the (min, max, margin) of the data it was fitted on. Smoothing
 * kinds carry their parameters only and cannot be inverted.
 */
struct TransformState {
    TransformKind kind = TransformKind::difference;
    std::vector<DiffPass> passes;
    double min = 0.0;
    double max = 0.0;
    double margin = 0.0;
    int order = 0;
    int lag = 0;
    int window = 0;
    double alpha = 0.0;

    [[nodiscard]] bool invertible() const noexcept {
        return kind != TransformKind::ewma && kind != TransformKind::moving_average;
    }
    /// Points consumed at the front of the series (differencing and trailing MA).
    [[nodiscard]] Eigen::Index consumed() const noexcept;
};

struct Transformed {
    TimeSeries series;
    TransformState state;
};

/// `d` lag-1 passes followed by one lag-`seasonal_lag` pass (skipped when 0).
Transformed difference(const TimeSeries& ts, int d, int seasonal_lag = 0);
/// Rebuilds the undifferenced series from the stored leading seeds.
TimeSeries undifference(const TimeSeries& diffed, const TransformState& state);
/// Integrates values that continue the differenced series past its end,
/// seeded by the trailing values of each pass. Returns original-unit values.
Eigen::VectorXd integrate_forecast(const Eigen::VectorXd& diffed_forecast, const TransformState& state);

/// Affine min-max onto [-1 + margin, 1 - margin], then arcsin.
Transformed arcsin_transform(const TimeSeries& ts, double margin = 1e-3);
/// Applies an already fitted arcsin map to new data; affine values outside [-1, 1] are clamped.
TimeSeries arcsin_apply(const TimeSeries& ts, const TransformState& state);
/// Inverse of the arcsin map. Inputs are clamped to [-pi/2, pi/2] before sin.
TimeSeries sin_restore(const TimeSeries& ts, const TransformState& state);

/// log(1 + x); every value must exceed -1.
Transformed log_transform(const TimeSeries& ts);
TimeSeries exp_restore(const TimeSeries& ts, const TransformState& state);

/// Trailing window mean, length n - w + 1. Not invertible.
Transformed moving_average(const TimeSeries& ts, int window);
/// y0 = x0, y_t = alpha x_t + (1 - alpha) y_{t-1}. Not invertible.
Transformed ewma(const TimeSeries& ts, double alpha);

/// Dispatches to the inverse matching `state.kind`.
TimeSeries restore(const TimeSeries& ts, const TransformState& state);

/// Pointwise inverse of a single value for log/arcsin kinds.
double restore_value(double y, const TransformState& state);

/// One element of a configured transform chain.
struct TransformStep {
    TransformKind kind = TransformKind::log;
    double param = 0.0;  ///< order d, seasonal lag, or arcsin margin
};

/**
 * @brief Ordered chain of invertible transforms fitted on a training series.
 *
 * Parameters that depend on data (arcsin bounds) are fitted once on the
 * training series and reused on any later series on the same grid. Forecasts
 * are restored either as a continuation of the training series or one step at
 * a time against observed history.
 */
class TransformChain {
public:
    TransformChain() = default;

    /// Fits every step on `train`; throws std::invalid_argument for smoothing kinds.
    static TransformChain fit(const std::vector<TransformStep>& steps, const TimeSeries& train);

    /// Transformed training series.
    [[nodiscard]] const TimeSeries& transformed_train() const { return levels_.back(); }
    /// Index in the original series of element 0 of any transformed series.
    [[nodiscard]] Eigen::Index offset() const noexcept;
    [[nodiscard]] const std::vector<TransformState>& states() const noexcept { return states_; }
    [[nodiscard]] bool empty() const noexcept { return states_.empty(); }

    /// Applies the fitted chain to a series that starts where the training series starts.
    [[nodiscard]] TimeSeries apply(const TimeSeries& full) const;
    /// Restores values that continue the transformed training series.
    [[nodiscard]] Eigen::VectorXd restore_continuation(const Eigen::VectorXd& top) const;
    /// `top[k]` predicts the transformed value at original index `first + k`;
    /// lower levels use the observed values of `full` before that index.
    [[nodiscard]] Eigen::VectorXd restore_one_step(const Eigen::VectorXd& top, const TimeSeries& full,
                                                   Eigen::Index first) const;

private:
    std::vector<TransformStep> steps_;
    std::vector<TransformState> states_;
    std::vector<TimeSeries> levels_;  // levels_[0] = train, levels_[j] = after step j
};

}  // namespace tsa
