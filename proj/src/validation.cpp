#include "tsa/validation.hpp"

#include <cmath>

namespace tsa {

std::vector<Fold> expanding_splits(Eigen::Index n, const CvSpec& spec) {
    if (spec.n_splits < 1) throw std::invalid_argument("n_splits must be >= 1");
    if (spec.gap < 0) throw std::invalid_argument("gap must be non-negative");
    const Eigen::Index test_size = n / (spec.n_splits + 1);
    if (test_size < 1) throw std::invalid_argument("series too short for this many splits");
    if (n - spec.gap < 2 * test_size) throw std::invalid_argument("gap leaves no room for a train and test window");

    std::vector<Fold> folds;
    for (int i = 1; i <= spec.n_splits; ++i) {
        Fold f;
        f.train_end = i * test_size;
        f.test_begin = f.train_end + spec.gap;
        f.test_end = f.test_begin + test_size;
        if (f.test_end > n) break;
        folds.push_back(f);
    }
    if (folds.empty()) throw std::invalid_argument("no feasible fold for this spec");
    return folds;
}

namespace {

void check_lengths(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    if (y.size() != yhat.size() || y.size() == 0) throw std::invalid_argument("metrics need equal, non-empty inputs");
}

}  // namespace

MapeResult mape(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    check_lengths(y, yhat);
    MapeResult out;
    double sum = 0.0;
    Eigen::Index used = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) {
            ++out.excluded;
            continue;
        }
        sum += std::abs(y[i] - yhat[i]) / std::abs(y[i]);
        ++used;
    }
    if (used == 0) throw std::invalid_argument("MAPE is undefined when every target is zero");
    out.value = 100.0 * sum / static_cast<double>(used);
    return out;
}

double mse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    check_lengths(y, yhat);
    return (y - yhat).squaredNorm() / static_cast<double>(y.size());
}

double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) { return std::sqrt(mse(y, yhat)); }

double mae(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    check_lengths(y, yhat);
    return (y - yhat).cwiseAbs().mean();
}

MapeResult grouped_mape(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat, int group_size) {
    check_lengths(y, yhat);
    if (group_size < 1) throw std::invalid_argument("group size must be >= 1");
    const auto n = y.size();
    const auto groups = (n + group_size - 1) / group_size;
    Eigen::VectorXd gy(groups);
    Eigen::VectorXd gp(groups);
    for (Eigen::Index g = 0; g < groups; ++g) {
        const auto first = g * group_size;
        const auto count = std::min<Eigen::Index>(group_size, n - first);
        gy[g] = y.segment(first, count).mean();
        gp[g] = yhat.segment(first, count).mean();
    }
    return mape(gy, gp);
}

}  // namespace tsa
