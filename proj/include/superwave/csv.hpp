#pragma once

// Fixed-column CSV tables with 12-significant-digit numbers, so identical
// inputs give byte-identical files.

#include <string>
#include <variant>
#include <vector>

namespace superwave {

using CsvCell = std::variant<double, long long, std::string>;

std::string format_number(double value);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);

    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t rows() const { return rows_.size(); }

    // Throws ValidationError when the cell count does not match the header.
    void add_row(std::vector<CsvCell> cells);

    std::string str() const;
    // Writes through a temporary file and renames it into place.
    void write(const std::string& path) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<CsvCell>> rows_;
};

}  // namespace superwave
