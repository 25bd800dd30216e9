#include "tsa/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

namespace tsa::io {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return in;
}

std::string strip(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    // Byte-order mark on the first header cell.
    if (s.size() >= 3 && s.compare(0, 3, "\xEF\xBB\xBF") == 0) s.erase(0, 3);
    return s;
}

double parse_value(const std::string& text) {
    double v = 0.0;
    const auto s = strip(text);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw InputError("unparseable value '" + text + "'");
    }
    return v;
}

}  // namespace

std::vector<Row> parse_csv(std::istream& in) {
    std::vector<Row> rows;
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    Row row;
    std::string field;
    bool quoted = false;
    bool row_has_content = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                row_has_content = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                row_has_content = true;
                break;
            case '\r': break;
            case '\n':
                if (row_has_content || !field.empty()) {
                    row.push_back(std::move(field));
                    rows.push_back(std::move(row));
                }
                row.clear();
                field.clear();
                row_has_content = false;
                break;
            default:
                field.push_back(c);
                row_has_content = true;
        }
    }
    if (quoted) throw InputError("unterminated quoted field");
    if (row_has_content || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

EventLog read_event_csv(std::istream& in) {
    const auto rows = parse_csv(in);
    if (rows.empty()) throw InputError("event table is empty");
    const auto& header = rows.front();
    std::size_t column = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (strip(header[j]) == "Date") column = j;
    }
    if (column == header.size()) throw InputError("event table has no 'Date' column");

    std::vector<Date> dates;
    dates.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (column >= rows[i].size()) throw InputError("row " + std::to_string(i + 1) + " has no Date field");
        dates.push_back(parse_mdy(rows[i][column]));
    }
    if (dates.empty()) throw InputError("empty event log");
    return EventLog(std::move(dates));
}

EventLog read_event_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_event_csv(in);
}

TimeSeries read_series_csv(std::istream& in) {
    const auto rows = parse_csv(in);
    if (rows.size() < 2) throw InputError("series table needs a header and at least one row");
    const auto& header = rows.front();
    if (header.size() < 2 || strip(header[0]) != "timestamp" || strip(header[1]) != "value") {
        throw InputError("series table header must be 'timestamp,value'");
    }
    std::vector<Date> stamps;
    Eigen::VectorXd values(static_cast<Eigen::Index>(rows.size() - 1));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 2) throw InputError("row " + std::to_string(i + 1) + " is incomplete");
        stamps.push_back(parse_iso(rows[i][0]));
        values[static_cast<Eigen::Index>(i - 1)] = parse_value(rows[i][1]);
    }
    int step = 1;
    if (stamps.size() >= 2) {
        const long diff = months_between(stamps[0], stamps[1]);
        if (diff < 1) throw InputError("series timestamps must increase by whole months");
        step = static_cast<int>(diff);
    }
    TimeSeries ts(stamps.front(), step, std::move(values));
    for (std::size_t i = 0; i < stamps.size(); ++i) {
        if (ts.time_at(static_cast<Eigen::Index>(i)) != stamps[i]) {
            throw InputError("irregular timestamp " + format_iso(stamps[i]) + " at row " + std::to_string(i + 2));
        }
    }
    return ts;
}

TimeSeries read_series_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_series_csv(in);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_series_csv(std::ostream& out, const TimeSeries& ts) {
    out << "timestamp,value\n";
    for (Eigen::Index i = 0; i < ts.size(); ++i) {
        out << format_iso(ts.time_at(i)) << ',' << format_double(ts[i]) << '\n';
    }
}

void write_series_csv(const std::filesystem::path& path, const TimeSeries& ts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    write_series_csv(out, ts);
}

}  // namespace tsa::io
