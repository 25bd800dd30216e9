#include "tsa/decompose.hpp"

#include <stdexcept>

namespace tsa {

Decomposition decompose(const TimeSeries& ts, int period) {
    const int m = period;
    const auto n = ts.size();
    if (m < 2) throw std::invalid_argument("decomposition period must be at least 2");
    if (n < 2 * m) throw std::invalid_argument("series shorter than two periods");

    const auto& x = ts.values();
    const int half = m / 2;

    // Centered filter weights: m ones for odd m; 0.5, 1, ..., 1, 0.5 for even m.
    Eigen::VectorXd weights = Eigen::VectorXd::Ones(2 * half + 1);
    if (m % 2 == 0) {
        weights[0] = 0.5;
        weights[2 * half] = 0.5;
    }
    weights /= static_cast<double>(m);

    Decomposition out;
    out.period = m;
    out.trend.assign(static_cast<std::size_t>(n), std::nullopt);
    out.residual.assign(static_cast<std::size_t>(n), std::nullopt);
    for (Eigen::Index t = half; t < n - half; ++t) {
        out.trend[t] = weights.dot(x.segment(t - half, 2 * half + 1));
    }

    Eigen::VectorXd phase_sum = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd phase_count = Eigen::VectorXd::Zero(m);
    for (Eigen::Index t = 0; t < n; ++t) {
        if (!out.trend[t]) continue;
        phase_sum[t % m] += x[t] - *out.trend[t];
        phase_count[t % m] += 1.0;
    }
    Eigen::VectorXd phase = phase_sum.cwiseQuotient(phase_count);
    phase.array() -= phase.mean();

    out.seasonal.resize(n);
    for (Eigen::Index t = 0; t < n; ++t) out.seasonal[t] = phase[t % m];
    for (Eigen::Index t = 0; t < n; ++t) {
        if (out.trend[t]) out.residual[t] = x[t] - *out.trend[t] - out.seasonal[t];
    }
    return out;
}

}  // namespace tsa
