#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tsa/series.hpp"

namespace tsa::io {

using Row = std::vector<std::string>;

/// RFC 4180 style reader: quoted fields may contain commas, doubled quotes and newlines.
std::vector<Row> parse_csv(std::istream& in);

/// Reads the `Date` column (MM/DD/YYYY) of an event table; other columns are ignored.
/// Blank dates are an error, as is a missing column (InputError).
EventLog read_event_csv(const std::filesystem::path& path);
EventLog read_event_csv(std::istream& in);

/// `timestamp,value` with ISO dates on a regular monthly grid.
TimeSeries read_series_csv(const std::filesystem::path& path);
TimeSeries read_series_csv(std::istream& in);
void write_series_csv(const std::filesystem::path& path, const TimeSeries& ts);
void write_series_csv(std::ostream& out, const TimeSeries& ts);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace tsa::io
