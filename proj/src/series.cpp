#include "tsa/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace tsa {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || text.empty()) {
        throw InputError("unparseable date '" + std::string(whole) + "'");
    }
    return value;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

Date make_date(int y, int m, int d, std::string_view whole) {
    Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
              std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) throw InputError("invalid calendar date '" + std::string(whole) + "'");
    return date;
}

}  // namespace

Date parse_mdy(std::string_view text) {
    const auto s = trim(text);
    const auto a = s.find('/');
    const auto b = a == std::string_view::npos ? a : s.find('/', a + 1);
    if (a == std::string_view::npos || b == std::string_view::npos) {
        throw InputError("expected MM/DD/YYYY, got '" + std::string(text) + "'");
    }
    const int m = parse_int(s.substr(0, a), text);
    const int d = parse_int(s.substr(a + 1, b - a - 1), text);
    const auto year_part = s.substr(b + 1);
    if (year_part.size() != 4) throw InputError("expected four-digit year in '" + std::string(text) + "'");
    return make_date(parse_int(year_part, text), m, d, text);
}

Date parse_iso(std::string_view text) {
    const auto s = trim(text);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        throw InputError("expected YYYY-MM-DD, got '" + std::string(text) + "'");
    }
    return make_date(parse_int(s.substr(0, 4), text), parse_int(s.substr(5, 2), text),
                     parse_int(s.substr(8, 2), text), text);
}

std::string format_iso(const Date& date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

Date add_months(const Date& date, long months) {
    const auto shifted = std::chrono::year_month{date.year(), date.month()} + std::chrono::months{months};
    const Date candidate{shifted.year(), shifted.month(), date.day()};
    if (candidate.ok()) return candidate;
    return Date{std::chrono::year_month_day_last{shifted.year(), std::chrono::month_day_last{shifted.month()}}};
}

Date month_start(const Date& date) { return Date{date.year(), date.month(), std::chrono::day{1}}; }

long months_between(const Date& from, const Date& to) {
    return (static_cast<int>(to.year()) - static_cast<int>(from.year())) * 12L +
           (static_cast<long>(static_cast<unsigned>(to.month())) - static_cast<unsigned>(from.month()));
}

EventLog::EventLog(std::vector<Date> timestamps, Date min, Date max) : timestamps_(std::move(timestamps)) {
    for (const auto& t : timestamps_) {
        if (!t.ok()) throw InputError("invalid event date");
        if (t < min || t > max) throw InputError("event date " + format_iso(t) + " outside the accepted range");
    }
    std::sort(timestamps_.begin(), timestamps_.end());
}

TimeSeries::TimeSeries(Date start, int step_months, Eigen::VectorXd values)
    : start_(start), step_(step_months), values_(std::move(values)) {
    if (step_ < 1) throw std::invalid_argument("step must be at least one month");
    if (values_.size() == 0) throw std::invalid_argument("time series must be non-empty");
}

Date TimeSeries::time_at(Eigen::Index i) const { return add_months(start_, static_cast<long>(i) * step_); }

TimeSeries TimeSeries::with_values(Eigen::VectorXd values, Eigen::Index offset) const {
    return TimeSeries(time_at(offset), step_, std::move(values));
}

TimeSeries TimeSeries::slice(Eigen::Index first, Eigen::Index count) const {
    if (first < 0 || count < 1 || first + count > size()) throw std::out_of_range("series slice out of range");
    return TimeSeries(time_at(first), step_, values_.segment(first, count));
}

TimeSeries aggregate_events(const EventLog& events, int step_months, const Date& origin) {
    if (events.empty()) throw InputError("empty event log");
    if (step_months < 1) throw std::invalid_argument("step_months must be >= 1");
    if (events.front() < origin) throw std::invalid_argument("origin must not be after the first event");

    auto slot_of = [&](const Date& t) {
        long k = months_between(origin, t) / step_months;
        while (k > 0 && add_months(origin, k * step_months) > t) --k;
        while (add_months(origin, (k + 1) * step_months) <= t) ++k;
        return k;
    };

    const long slots = slot_of(events.back()) + 1;
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(slots);
    for (const auto& t : events.timestamps()) counts[slot_of(t)] += 1.0;
    return TimeSeries(origin, step_months, std::move(counts));
}

TimeSeries aggregate_events(const EventLog& events, int step_months) {
    if (events.empty()) throw InputError("empty event log");
    return aggregate_events(events, step_months, month_start(events.front()));
}

std::pair<TimeSeries, TimeSeries> train_test_split(const TimeSeries& ts, SplitSpec spec) {
    const double f = spec.test_fraction;
    if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("test fraction must lie in (0, 1)");
    const auto n = ts.size();
    // The small slack keeps exact products such as 10 * 0.8 from rounding up.
    const auto train = static_cast<Eigen::Index>(std::ceil(static_cast<double>(n) * (1.0 - f) - 1e-9));
    if (train < 2) throw std::invalid_argument("train split would have fewer than 2 points");
    if (n - train < 1) throw std::invalid_argument("test split would be empty");
    return {ts.slice(0, train), ts.slice(train, n - train)};
}

}  // namespace tsa
