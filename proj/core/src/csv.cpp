#include "invmeas/csv.hpp"

#include "invmeas/error.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace invmeas {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os), columns_(header.size()) {
    for (const auto& h : header) cell(h);
    end_row();
}

void CsvWriter::put(const std::string& s) {
    if (filled_ > 0) os_ << ',';
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        os_ << s;
    } else {
        os_ << '"';
        for (char c : s) {
            if (c == '"') os_ << '"';
            os_ << c;
        }
        os_ << '"';
    }
    ++filled_;
}

CsvWriter& CsvWriter::cell(const std::string& s) {
    put(s);
    return *this;
}

CsvWriter& CsvWriter::cell(double x) {
    put(format_double(x));
    return *this;
}

CsvWriter& CsvWriter::cell(long long x) {
    put(std::to_string(x));
    return *this;
}

void CsvWriter::end_row() {
    if (filled_ != columns_)
        throw Error("CsvWriter: row has " + std::to_string(filled_) + " fields, header has " + std::to_string(columns_));
    os_ << '\n';
    filled_ = 0;
}

} // namespace invmeas
