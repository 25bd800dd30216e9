#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tsa/errors.hpp"
#include "tsa/parallel.hpp"

namespace tsa {

struct CvSpec {
    int n_splits = 3;
    int gap = 0;
};

/// Half-open index ranges: train [0, train_end), test [test_begin, test_end).
struct Fold {
    Eigen::Index train_end = 0;
    Eigen::Index test_begin = 0;
    Eigen::Index test_end = 0;

    [[nodiscard]] Eigen::Index test_size() const noexcept { return test_end - test_begin; }
    bool operator==(const Fold&) const = default;
};

/**
 * @brief Expanding-window folds.
 *
 * With test_size = floor(n / (n_splits + 1)), fold i trains on
 * [0, i * test_size) and tests on the test_size points starting gap later.
 * A fold whose test window would run past n is dropped, so every fold keeps
 * the same test size. Throws std::invalid_argument when no fold fits.
 */
std::vector<Fold> expanding_splits(Eigen::Index n, const CvSpec& spec);

struct MapeResult {
    double value = 0.0;     ///< percent
    std::size_t excluded = 0;  ///< points with a zero target
};

/// 100 * mean(|y - yhat| / |y|) over points with y != 0. Throws when every target is zero.
MapeResult mape(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);
double mse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);
double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);
double mae(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

/// MAPE between the means of consecutive groups of `group_size` points (last group may be short).
MapeResult grouped_mape(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat, int group_size);

struct CandidateScore {
    std::size_t index = 0;
    bool ok = false;
    double mean_score = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> fold_scores;
    std::string error;
};

struct GridSearchResult {
    std::size_t best = 0;
    std::vector<Fold> folds;
    std::vector<CandidateScore> scores;
};

/**
 * @brief Scores every candidate on every fold and keeps the lowest mean.
 *
 * `evaluate(candidate, fold)` returns a score to minimize. A candidate whose
 * evaluation throws on any fold is excluded and its error kept. Ties go to the
 * earlier candidate. Cells run on `threads` workers; the reduction is sequential.
 */
template <class Candidate, class Evaluate>
GridSearchResult grid_search(const std::vector<Candidate>& candidates, Evaluate&& evaluate, const CvSpec& cv,
                             Eigen::Index series_length, unsigned threads = 1) {
    if (candidates.empty()) throw std::invalid_argument("grid_search: no candidates");
    GridSearchResult result;
    result.folds = expanding_splits(series_length, cv);
    const auto nf = result.folds.size();

    std::vector<double> cell(candidates.size() * nf, 0.0);
    std::vector<std::string> cell_error(candidates.size() * nf);
    std::vector<char> cell_ok(candidates.size() * nf, 0);
    parallel_for(
        cell.size(),
        [&](std::size_t k) {
            const auto c = k / nf;
            const auto f = k % nf;
            try {
                cell[k] = evaluate(candidates[c], result.folds[f]);
                cell_ok[k] = std::isfinite(cell[k]) ? 1 : 0;
                if (!cell_ok[k]) cell_error[k] = "non-finite score";
            } catch (const std::exception& ex) {
                cell_error[k] = ex.what();
            }
        },
        threads);

    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        CandidateScore s;
        s.index = c;
        s.ok = true;
        double sum = 0.0;
        for (std::size_t f = 0; f < nf; ++f) {
            const auto k = c * nf + f;
            if (!cell_ok[k]) {
                s.ok = false;
                s.error = "fold " + std::to_string(f) + ": " + cell_error[k];
                break;
            }
            s.fold_scores.push_back(cell[k]);
            sum += cell[k];
        }
        if (s.ok) {
            s.mean_score = sum / static_cast<double>(nf);
            if (!best || s.mean_score < result.scores[*best].mean_score) best = c;
        }
        result.scores.push_back(std::move(s));
    }
    if (!best) throw ModelError("grid_search: every candidate failed");
    result.best = *best;
    return result;
}

}  // namespace tsa
