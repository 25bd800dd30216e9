#include "tsa/optimize.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace tsa {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options) {
    const auto dim = x0.size();
    NelderMeadResult result;
    const int max_evals = options.max_evaluations > 0 ? options.max_evaluations : 2000 * static_cast<int>(dim);

    auto eval = [&](const Eigen::VectorXd& x) {
        ++result.evaluations;
        return f(x);
    };

    if (dim == 0) {
        result.x = x0;
        result.value = eval(x0);
        result.converged = true;
        return result;
    }

    std::vector<Eigen::VectorXd> simplex(dim + 1, x0);
    std::vector<double> values(dim + 1);
    for (Eigen::Index i = 0; i < dim; ++i) simplex[i + 1][i] += options.initial_step;
    for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(dim + 1);
    while (true) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const auto best = order.front();
        const auto worst = order.back();
        const auto second_worst = order[dim - 1];

        double diameter = 0.0;
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            diameter = std::max(diameter, (simplex[i] - simplex[best]).lpNorm<Eigen::Infinity>());
        }
        if (diameter < options.diameter_tol) {
            result.converged = true;
            break;
        }
        if (result.evaluations >= max_evals) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i != worst) centroid += simplex[i];
        }
        centroid /= static_cast<double>(dim);

        const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
        const double fr = eval(reflected);
        if (fr < values[best]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = eval(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second_worst]) {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }

        // Contraction, outside when the reflection improved on the worst point.
        const bool outside = fr < values[worst];
        const Eigen::VectorXd contracted =
            outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                    : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
        const double fc = eval(contracted);
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }

        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i == best) continue;
            simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
            values[i] = eval(simplex[i]);
        }
    }

    const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    result.x = simplex[best];
    result.value = values[best];
    return result;
}

}  // namespace tsa
