#include "mcsim/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mcsim {

std::string format_double(double v) {
    char buf[40];
    // %.17g round-trips every double; trim to the shortest form that still
    // round-trips so logs stay readable.
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) break;
    }
    return std::string(buf);
}

CsvTable::CsvTable(std::vector<std::string> header) : width_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) body_ += ',';
        body_ += header[i];
    }
    body_ += '\n';
}

void CsvTable::end_row_if_open() {
    if (!in_row_) return;
    if (row_cells_ != width_)
        throw std::logic_error("CsvTable: row width mismatch");
    body_ += '\n';
    in_row_ = false;
}

CsvTable& CsvTable::begin_row() {
    end_row_if_open();
    in_row_ = true;
    row_cells_ = 0;
    return *this;
}

CsvTable& CsvTable::cell(const std::string& s) {
    if (!in_row_) throw std::logic_error("CsvTable: cell outside row");
    if (row_cells_) body_ += ',';
    body_ += s;
    ++row_cells_;
    return *this;
}

CsvTable& CsvTable::cell(double v) { return cell(format_double(v)); }
CsvTable& CsvTable::cell(long long v) { return cell(std::to_string(v)); }
CsvTable& CsvTable::cell(int v) { return cell(std::to_string(v)); }
CsvTable& CsvTable::cell(std::uint64_t v) { return cell(std::to_string(v)); }

std::string CsvTable::to_string() const {
    std::string out = body_;
    if (in_row_) {
        if (row_cells_ != width_)
            throw std::logic_error("CsvTable: row width mismatch");
        out += '\n';
    }
    return out;
}

void CsvTable::write_file(const std::string& path) const {
    write_text_file(path, to_string());
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace mcsim
