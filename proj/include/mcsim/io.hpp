#pragma once

#include <string>
#include <vector>

namespace mcsim {

// Shortest round-trippable decimal form; deterministic for a given libc.
std::string format_double(double v);

// Minimal CSV emitter.  Rows are built cell-by-cell and serialized with a
// trailing newline per row; numeric cells go through format_double so that
// identical runs produce identical bytes.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    CsvTable& begin_row();
    CsvTable& cell(const std::string& s);
    CsvTable& cell(double v);
    CsvTable& cell(long long v);
    CsvTable& cell(int v);
    CsvTable& cell(std::uint64_t v);

    std::string to_string() const;
    void write_file(const std::string& path) const;

private:
    std::size_t width_;
    std::string body_;
    std::size_t row_cells_ = 0;
    bool in_row_ = false;
    void end_row_if_open();
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace mcsim
