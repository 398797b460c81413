#include "cascadelab/table.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cascadelab/error.hpp"

namespace cascadelab {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0";  // folds -0
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

Table::Row& Table::Row::add(double value) {
    cells_.push_back(format_number(value));
    return *this;
}

Table::Row& Table::Row::add(long long value) {
    cells_.push_back(std::to_string(value));
    return *this;
}

Table::Row& Table::Row::add(const std::string& text) {
    if (text.find_first_of(",\n\"") != std::string::npos) {
        std::string quoted = "\"";
        for (char ch : text) {
            if (ch == '"') quoted += '"';
            quoted += ch;
        }
        cells_.push_back(quoted + "\"");
    } else {
        cells_.push_back(text);
    }
    return *this;
}

Table::Row& Table::row() {
    rows_.emplace_back();
    return rows_.back();
}

void Table::write(std::ostream& out) const {
    for (std::size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
    out << '\n';
    for (const auto& row : rows_) {
        if (row.cells_.size() != header_.size())
            throw Error(ErrorKind::InvalidArgument, "table row width does not match its header");
        for (std::size_t i = 0; i < row.cells_.size(); ++i) out << (i ? "," : "") << row.cells_[i];
        out << '\n';
    }
}

std::string Table::str() const {
    std::ostringstream ss;
    write(ss);
    return ss.str();
}

}  // namespace cascadelab
