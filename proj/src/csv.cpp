#include "superwave/csv.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "superwave/errors.hpp"

namespace superwave {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0";  // folds -0
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) throw ValidationError("CSV table needs at least one column");
}

void CsvTable::add_row(std::vector<CsvCell> cells) {
    if (cells.size() != columns_.size())
        throw ValidationError("CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(columns_.size()));
    rows_.push_back(std::move(cells));
}

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

struct CellText {
    std::string operator()(double v) const { return format_number(v); }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(const std::string& v) const { return quote(v); }
};

}  // namespace

std::string CsvTable::str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << quote(columns_[i]);
    os << '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << std::visit(CellText{}, row[i]);
        os << '\n';
    }
    return os.str();
}

void CsvTable::write(const std::string& path) const {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + tmp);
        f << str();
        if (!f) throw Error("failed writing " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace superwave
