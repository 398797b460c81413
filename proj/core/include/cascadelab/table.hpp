#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cascadelab {

// Fixed 9-significant-digit rendering used by every exported table.
std::string format_number(double value);

// Comma-separated table with a header row. Cells are stored preformatted so
// writing is byte-stable.
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    class Row {
    public:
        Row& add(double value);
        Row& add(long long value);
        Row& add(std::size_t value) { return add(static_cast<long long>(value)); }
        Row& add(int value) { return add(static_cast<long long>(value)); }
        Row& add(const std::string& text);
        Row& add(const char* text) { return add(std::string(text)); }

    private:
        friend class Table;
        std::vector<std::string> cells_;
    };

    Row& row();
    [[nodiscard]] const std::vector<std::string>& header() const noexcept { return header_; }
    [[nodiscard]] std::size_t rows() const noexcept { return rows_.size(); }
    [[nodiscard]] const std::string& cell(std::size_t row, std::size_t col) const { return rows_.at(row).cells_.at(col); }

    void write(std::ostream& out) const;
    [[nodiscard]] std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<Row> rows_;
};

}  // namespace cascadelab
