#include "tsa/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace tsa {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

void require_kind(const TransformState& state, std::initializer_list<TransformKind> kinds, const char* what) {
    for (auto k : kinds) {
        if (state.kind == k) return;
    }
    throw std::invalid_argument(std::string(what) + ": transform state has kind " + to_string(state.kind));
}

// Integrates x into `out` after the seeds already in out.head(lag): out[t] = out[t - lag] + x[t - lag].
// Each of the lag chains keeps a Neumaier running sum so rounding does not drift over long series.
void integrate_chains(const Eigen::VectorXd& x, int lag, Eigen::Ref<Eigen::VectorXd> out) {
    std::vector<double> sum(out.data(), out.data() + lag);
    std::vector<double> carry(lag, 0.0);
    for (Eigen::Index t = lag; t < out.size(); ++t) {
        const auto k = static_cast<std::size_t>(t % lag);
        const double term = x[t - lag];
        const double s = sum[k] + term;
        carry[k] += std::abs(sum[k]) >= std::abs(term) ? (sum[k] - s) + term : (term - s) + sum[k];
        sum[k] = s;
        out[t] = s + carry[k];
    }
}

Eigen::VectorXd lag_difference(const Eigen::VectorXd& x, int lag) {
    const auto n = x.size();
    return x.tail(n - lag) - x.head(n - lag);
}

}  // namespace

std::string to_string(TransformKind kind) {
    switch (kind) {
        case TransformKind::difference: return "difference";
        case TransformKind::seasonal_difference: return "seasonal_difference";
        case TransformKind::arcsin_minmax: return "arcsin";
        case TransformKind::log: return "log";
        case TransformKind::ewma: return "ewma";
        case TransformKind::moving_average: return "moving_average";
    }
    return "unknown";
}

TransformKind transform_kind_from_string(const std::string& name) {
    if (name == "difference" || name == "diff") return TransformKind::difference;
    if (name == "seasonal_difference" || name == "sdiff") return TransformKind::seasonal_difference;
    if (name == "arcsin" || name == "arcsin_minmax") return TransformKind::arcsin_minmax;
    if (name == "log") return TransformKind::log;
    if (name == "ewma") return TransformKind::ewma;
    if (name == "moving_average" || name == "ma") return TransformKind::moving_average;
    throw std::invalid_argument("unknown transform '" + name + "'");
}

Eigen::Index TransformState::consumed() const noexcept {
    switch (kind) {
        case TransformKind::difference:
        case TransformKind::seasonal_difference: {
            Eigen::Index total = 0;
            for (const auto& p : passes) total += p.lag;
            return total;
        }
        case TransformKind::moving_average: return window - 1;
        default: return 0;
    }
}

Transformed difference(const TimeSeries& ts, int d, int seasonal_lag) {
    if (d < 0 || seasonal_lag < 0) throw std::invalid_argument("differencing orders must be non-negative");
    if (ts.size() <= d + seasonal_lag) throw std::invalid_argument("series too short to difference");

    TransformState state;
    state.kind = seasonal_lag > 0 ? TransformKind::seasonal_difference : TransformKind::difference;
    state.order = d;
    state.lag = seasonal_lag;

    Eigen::VectorXd x = ts.values();
    auto pass = [&](int lag) {
        state.passes.push_back(DiffPass{lag, x.head(lag), x.tail(lag)});
        x = lag_difference(x, lag);
    };
    for (int i = 0; i < d; ++i) pass(1);
    if (seasonal_lag > 0) pass(seasonal_lag);

    const auto offset = ts.size() - x.size();
    return {ts.with_values(std::move(x), offset), std::move(state)};
}

TimeSeries undifference(const TimeSeries& diffed, const TransformState& state) {
    require_kind(state, {TransformKind::difference, TransformKind::seasonal_difference}, "undifference");
    Eigen::VectorXd x = diffed.values();
    for (auto it = state.passes.rbegin(); it != state.passes.rend(); ++it) {
        const int lag = it->lag;
        if (it->head.size() != lag) throw std::invalid_argument("undifference: missing seed values");
        Eigen::VectorXd up(x.size() + lag);
        up.head(lag) = it->head;
        integrate_chains(x, lag, up);
        x = std::move(up);
    }
    return diffed.with_values(std::move(x), -state.consumed());
}

Eigen::VectorXd integrate_forecast(const Eigen::VectorXd& diffed_forecast, const TransformState& state) {
    require_kind(state, {TransformKind::difference, TransformKind::seasonal_difference}, "integrate_forecast");
    Eigen::VectorXd x = diffed_forecast;
    for (auto it = state.passes.rbegin(); it != state.passes.rend(); ++it) {
        const int lag = it->lag;
        if (it->tail.size() != lag) throw std::invalid_argument("integrate_forecast: missing seed values");
        Eigen::VectorXd ext(lag + x.size());
        ext.head(lag) = it->tail;
        integrate_chains(x, lag, ext);
        x = ext.tail(x.size());
    }
    return x;
}

Transformed arcsin_transform(const TimeSeries& ts, double margin) {
    if (ts.size() < 2) throw std::invalid_argument("arcsin transform needs at least 2 points");
    if (!(margin >= 0.0 && margin < 1.0)) throw std::invalid_argument("arcsin margin must lie in [0, 1)");
    TransformState state;
    state.kind = TransformKind::arcsin_minmax;
    state.min = ts.values().minCoeff();
    state.max = ts.values().maxCoeff();
    state.margin = margin;
    if (!(state.max > state.min)) throw std::invalid_argument("arcsin transform of a constant series");
    return {arcsin_apply(ts, state), state};
}

TimeSeries arcsin_apply(const TimeSeries& ts, const TransformState& state) {
    require_kind(state, {TransformKind::arcsin_minmax}, "arcsin_apply");
    const double half = 1.0 - state.margin;
    const double mid = 0.5 * (state.max + state.min);
    const double radius = 0.5 * (state.max - state.min);
    Eigen::VectorXd y = ts.values().unaryExpr([&](double v) {
        return std::asin(std::clamp(half * (v - mid) / radius, -1.0, 1.0));
    });
    return ts.with_values(std::move(y));
}

double restore_value(double y, const TransformState& state) {
    switch (state.kind) {
        case TransformKind::arcsin_minmax: {
            const double half = 1.0 - state.margin;
            const double mid = 0.5 * (state.max + state.min);
            const double radius = 0.5 * (state.max - state.min);
            return mid + radius * std::sin(std::clamp(y, -kHalfPi, kHalfPi)) / half;
        }
        case TransformKind::log: return std::expm1(y);
        default: throw std::invalid_argument("restore_value: not a pointwise transform (" + to_string(state.kind) + ")");
    }
}

TimeSeries sin_restore(const TimeSeries& ts, const TransformState& state) {
    require_kind(state, {TransformKind::arcsin_minmax}, "sin_restore");
    return ts.with_values(ts.values().unaryExpr([&](double y) { return restore_value(y, state); }));
}

Transformed log_transform(const TimeSeries& ts) {
    if ((ts.values().array() <= -1.0).any()) throw std::invalid_argument("log transform requires values > -1");
    TransformState state;
    state.kind = TransformKind::log;
    return {ts.with_values(ts.values().unaryExpr([](double v) { return std::log1p(v); })), state};
}

TimeSeries exp_restore(const TimeSeries& ts, const TransformState& state) {
    require_kind(state, {TransformKind::log}, "exp_restore");
    return ts.with_values(ts.values().unaryExpr([](double y) { return std::expm1(y); }));
}

Transformed moving_average(const TimeSeries& ts, int window) {
    const auto n = ts.size();
    if (window < 1 || window > n) throw std::invalid_argument("moving average window must lie in [1, n]");
    Eigen::VectorXd y(n - window + 1);
    for (Eigen::Index t = 0; t < y.size(); ++t) y[t] = ts.values().segment(t, window).mean();
    TransformState state;
    state.kind = TransformKind::moving_average;
    state.window = window;
    return {ts.with_values(std::move(y), window - 1), state};
}

Transformed ewma(const TimeSeries& ts, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("ewma alpha must lie in (0, 1]");
    const auto& x = ts.values();
    Eigen::VectorXd y(x.size());
    y[0] = x[0];
    for (Eigen::Index t = 1; t < x.size(); ++t) y[t] = alpha * x[t] + (1.0 - alpha) * y[t - 1];
    TransformState state;
    state.kind = TransformKind::ewma;
    state.alpha = alpha;
    return {ts.with_values(std::move(y)), state};
}

TimeSeries restore(const TimeSeries& ts, const TransformState& state) {
    switch (state.kind) {
        case TransformKind::difference:
        case TransformKind::seasonal_difference: return undifference(ts, state);
        case TransformKind::arcsin_minmax: return sin_restore(ts, state);
        case TransformKind::log: return exp_restore(ts, state);
        default: throw std::invalid_argument("cannot restore a smoothed series (" + to_string(state.kind) + ")");
    }
}

// ---------------------------------------------------------------------------
// TransformChain

namespace {

Transformed fit_step(const TransformStep& step, const TimeSeries& x) {
    switch (step.kind) {
        case TransformKind::difference: return difference(x, static_cast<int>(step.param), 0);
        case TransformKind::seasonal_difference: return difference(x, 0, static_cast<int>(step.param));
        case TransformKind::arcsin_minmax: return arcsin_transform(x, step.param);
        case TransformKind::log: return log_transform(x);
        default: throw std::invalid_argument("transform chain cannot contain " + to_string(step.kind));
    }
}

}  // namespace

TransformChain TransformChain::fit(const std::vector<TransformStep>& steps, const TimeSeries& train) {
    TransformChain chain;
    chain.steps_ = steps;
    chain.levels_.push_back(train);
    for (const auto& step : steps) {
        auto out = fit_step(step, chain.levels_.back());
        chain.states_.push_back(std::move(out.state));
        chain.levels_.push_back(std::move(out.series));
    }
    return chain;
}

Eigen::Index TransformChain::offset() const noexcept {
    Eigen::Index total = 0;
    for (const auto& s : states_) total += s.consumed();
    return total;
}

TimeSeries TransformChain::apply(const TimeSeries& full) const {
    TimeSeries x = full;
    for (const auto& state : states_) {
        switch (state.kind) {
            case TransformKind::difference:
            case TransformKind::seasonal_difference: x = difference(x, state.order, state.lag).series; break;
            case TransformKind::arcsin_minmax: x = arcsin_apply(x, state); break;
            case TransformKind::log: x = log_transform(x).series; break;
            default: throw std::logic_error("unexpected transform in chain");
        }
    }
    return x;
}

Eigen::VectorXd TransformChain::restore_continuation(const Eigen::VectorXd& top) const {
    Eigen::VectorXd x = top;
    for (auto it = states_.rbegin(); it != states_.rend(); ++it) {
        if (it->kind == TransformKind::difference || it->kind == TransformKind::seasonal_difference) {
            x = integrate_forecast(x, *it);
        } else {
            x = x.unaryExpr([&](double v) { return restore_value(v, *it); });
        }
    }
    return x;
}

Eigen::VectorXd TransformChain::restore_one_step(const Eigen::VectorXd& top, const TimeSeries& full,
                                                 Eigen::Index first) const {
    // Observed levels of the full series, each indexed in original time.
    std::vector<Eigen::VectorXd> observed{full.values()};
    std::vector<Eigen::Index> level_offset{0};
    {
        TimeSeries x = full;
        for (const auto& state : states_) {
            switch (state.kind) {
                case TransformKind::difference:
                case TransformKind::seasonal_difference: x = difference(x, state.order, state.lag).series; break;
                case TransformKind::arcsin_minmax: x = arcsin_apply(x, state); break;
                case TransformKind::log: x = log_transform(x).series; break;
                default: throw std::logic_error("unexpected transform in chain");
            }
            observed.push_back(x.values());
            level_offset.push_back(level_offset.back() + state.consumed());
        }
    }
    if (first < offset()) throw std::invalid_argument("one-step restore before the first transformed index");

    Eigen::VectorXd out(top.size());
    for (Eigen::Index k = 0; k < top.size(); ++k) {
        const Eigen::Index t = first + k;
        double v = top[k];
        for (std::size_t j = states_.size(); j-- > 0;) {
            const auto& state = states_[j];
            if (state.kind == TransformKind::difference || state.kind == TransformKind::seasonal_difference) {
                // Undo each pass of this step, innermost first, using observed lower values.
                std::vector<Eigen::VectorXd> inner{observed[j]};
                for (std::size_t p = 0; p + 1 < state.passes.size(); ++p) {
                    inner.push_back(lag_difference(inner.back(), state.passes[p].lag));
                }
                Eigen::Index inner_offset = level_offset[j];
                std::vector<Eigen::Index> offsets;
                for (std::size_t p = 0; p < state.passes.size(); ++p) {
                    offsets.push_back(inner_offset);
                    inner_offset += state.passes[p].lag;
                }
                for (std::size_t p = state.passes.size(); p-- > 0;) {
                    const int lag = state.passes[p].lag;
                    v += inner[p][t - lag - offsets[p]];
                }
            } else {
                v = restore_value(v, state);
            }
        }
        out[k] = v;
    }
    return out;
}

}  // namespace tsa
