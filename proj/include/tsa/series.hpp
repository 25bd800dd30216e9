#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tsa/errors.hpp"

namespace tsa {

using Date = std::chrono::year_month_day;

/// Parses `MM/DD/YYYY` (the event-log format). Throws InputError.
Date parse_mdy(std::string_view text);
/// Parses `YYYY-MM-DD`. Throws InputError.
Date parse_iso(std::string_view text);
std::string format_iso(const Date& date);

/// Calendar-aware month shift. Days past the end of the target month clamp to
/// its last day (Jan 31 + 1 month = Feb 28/29).
Date add_months(const Date& date, long months);
Date month_start(const Date& date);

/**
 * @brief Sorted list of event dates (day resolution, UTC).
 *
 * Construction sorts the timestamps and rejects anything outside the declared
 * range, which catches two-digit years and similar parsing accidents.
 */
class EventLog {
public:
    static constexpr Date kDefaultMin{std::chrono::year{1800}, std::chrono::January, std::chrono::day{1}};
    static constexpr Date kDefaultMax{std::chrono::year{2200}, std::chrono::December, std::chrono::day{31}};

    explicit EventLog(std::vector<Date> timestamps, Date min = kDefaultMin, Date max = kDefaultMax);

    [[nodiscard]] const std::vector<Date>& timestamps() const noexcept { return timestamps_; }
    [[nodiscard]] std::size_t size() const noexcept { return timestamps_.size(); }
    [[nodiscard]] bool empty() const noexcept { return timestamps_.empty(); }
    [[nodiscard]] const Date& front() const { return timestamps_.front(); }
    [[nodiscard]] const Date& back() const { return timestamps_.back(); }

private:
    std::vector<Date> timestamps_;
};

/**
 * @brief Regularly spaced real-valued series.
 *
 * The spacing is a whole number of calendar months; point k sits at
 * `start + k * step_months`. Values are never empty.
 */
class TimeSeries {
public:
    TimeSeries(Date start, int step_months, Eigen::VectorXd values);

    [[nodiscard]] const Date& start() const noexcept { return start_; }
    [[nodiscard]] int step_months() const noexcept { return step_; }
    [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return values_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return values_.size(); }
    [[nodiscard]] double operator[](Eigen::Index i) const { return values_[i]; }

    /// Timestamp of point i (i may lie past the end, for forecasts).
    [[nodiscard]] Date time_at(Eigen::Index i) const;
    /// Timestamp of the last observed point.
    [[nodiscard]] Date end() const { return time_at(size() - 1); }

    /// Same grid, new values; `offset` shifts the start by that many steps.
    [[nodiscard]] TimeSeries with_values(Eigen::VectorXd values, Eigen::Index offset = 0) const;
    /// Contiguous slice [first, first + count).
    [[nodiscard]] TimeSeries slice(Eigen::Index first, Eigen::Index count) const;

private:
    Date start_;
    int step_;
    Eigen::VectorXd values_;
};

/// Counts events per interval [origin + k*step, origin + (k+1)*step).
/// Empty intervals are zeros; the series ends with the interval holding the last event.
TimeSeries aggregate_events(const EventLog& events, int step_months, const Date& origin);
/// Origin defaults to the first day of the first event's month.
TimeSeries aggregate_events(const EventLog& events, int step_months);

struct SplitSpec {
    double test_fraction = 0.2;
};

/// Chronological split: train gets ceil(n * (1 - f)) points. Train must keep at
/// least 2 points and test at least 1.
std::pair<TimeSeries, TimeSeries> train_test_split(const TimeSeries& ts, SplitSpec spec);

/// Number of whole-month steps between two dates on a monthly grid.
long months_between(const Date& from, const Date& to);

}  // namespace tsa
