#pragma once

#include <functional>

#include <Eigen/Core>

namespace tsa {

struct NelderMeadOptions {
    double initial_step = 0.1;
    /// Stop once every vertex lies within this distance of the best one.
    double diameter_tol = 1e-6;
    /// 0 means 2000 * dimension.
    int max_evaluations = 0;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Derivative-free simplex minimization (standard reflection/expansion/contraction/shrink).
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options = {});

}  // namespace tsa
