#include "skillscape/panel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include "skillscape/errors.hpp"

namespace skillscape {

namespace {

int parse_int(const std::string& text) {
    int v = 0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw IoError("not an integer: '" + text + "'");
    return v;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

void expect_header(std::istream& in, const char* header) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV, expected header '" + std::string(header) + "'");
    line = strip_cr(line);
    if (line != header) throw IoError("CSV header mismatch: expected '" + std::string(header) + "', got '" + line + "'");
}

template <class Row, class Parse>
std::vector<Row> read_rows(std::istream& in, const char* header, std::size_t n_fields, Parse parse) {
    expect_header(in, header);
    std::vector<Row> rows;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != n_fields) {
            throw IoError("line " + std::to_string(lineno) + ": expected " + std::to_string(n_fields) + " fields");
        }
        try {
            rows.push_back(parse(fields));
        } catch (const IoError& e) {
            throw IoError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw IoError("not a number: '" + text + "'");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field += ch;
        }
    }
    if (quoted) throw IoError("unterminated quote");
    out.push_back(std::move(field));
    return out;
}

void write_panel(std::ostream& out, const std::vector<PanelObservation>& rows) {
    out << kPanelHeader << '\n';
    for (const auto& r : rows) {
        out << r.msa << ',' << r.year << ',' << format_double(r.w_skilled) << ',' << format_double(r.w_unskilled)
            << ',' << format_double(r.rent) << ',' << format_double(r.college_frac) << ',' << format_double(r.pop)
            << '\n';
    }
}

void write_migration(std::ostream& out, const std::vector<MigrationFlow>& rows) {
    out << kMigrationHeader << '\n';
    for (const auto& r : rows)
        out << r.year << ',' << r.origin << ',' << r.dest << ',' << format_double(r.count) << '\n';
}

std::vector<PanelObservation> read_panel(std::istream& in) {
    std::set<std::pair<std::string, int>> seen;
    return read_rows<PanelObservation>(in, kPanelHeader, 7, [&seen](const std::vector<std::string>& f) {
        PanelObservation r;
        r.msa = f[0];
        r.year = parse_int(f[1]);
        r.w_skilled = parse_double(f[2]);
        r.w_unskilled = parse_double(f[3]);
        r.rent = parse_double(f[4]);
        r.college_frac = parse_double(f[5]);
        r.pop = parse_double(f[6]);
        if (r.msa.empty()) throw IoError("empty msa label");
        if (!(r.college_frac > 0.0 && r.college_frac < 1.0)) throw IoError("college_frac outside (0,1)");
        if (!seen.emplace(r.msa, r.year).second) {
            throw IoError("duplicate (msa, year) = (" + r.msa + ", " + std::to_string(r.year) + ")");
        }
        return r;
    });
}

std::vector<MigrationFlow> read_migration(std::istream& in) {
    std::set<std::tuple<int, std::string, std::string>> seen;
    return read_rows<MigrationFlow>(in, kMigrationHeader, 4, [&seen](const std::vector<std::string>& f) {
        MigrationFlow r;
        r.year = parse_int(f[0]);
        r.origin = f[1];
        r.dest = f[2];
        r.count = parse_double(f[3]);
        if (!(r.count >= 0.0) || std::isinf(r.count)) throw IoError("negative or non-finite count");
        if (!seen.emplace(r.year, r.origin, r.dest).second) throw IoError("duplicate (year, origin, dest)");
        return r;
    });
}

std::vector<PanelObservation> read_panel_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_panel(in);
}

std::vector<MigrationFlow> read_migration_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_migration(in);
}

void write_panel_file(const std::filesystem::path& path, const std::vector<PanelObservation>& rows) {
    auto out = open_out(path);
    write_panel(out, rows);
    if (!out) throw IoError("write failed: " + path.string());
}

void write_migration_file(const std::filesystem::path& path, const std::vector<MigrationFlow>& rows) {
    auto out = open_out(path);
    write_migration(out, rows);
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace skillscape
