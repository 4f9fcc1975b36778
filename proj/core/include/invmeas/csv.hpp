#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace invmeas {

/// Shortest round-trip-safe text for a double ("%.17g"; inf, -inf, nan spelled out).
std::string format_double(double x);

/// RFC 4180 writer: comma separated, CRLF-free, fields quoted when needed.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::vector<std::string>& header);

    CsvWriter& cell(const std::string& s);
    CsvWriter& cell(double x);
    CsvWriter& cell(long long x);
    CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
    CsvWriter& cell(std::size_t x) { return cell(static_cast<long long>(x)); }
    CsvWriter& cell(bool b) { return cell(std::string(b ? "true" : "false")); }
    CsvWriter& cell(const char* s) { return cell(std::string(s)); }
    /// Ends the current row; throws if its width differs from the header.
    void end_row();

private:
    void put(const std::string& s);

    std::ostream& os_;
    std::size_t columns_;
    std::size_t filled_ = 0;
};

} // namespace invmeas
