#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace skillscape {

// One MSA-year row.
struct PanelObservation {
    std::string msa;
    int year = 0;
    double w_skilled = 0.0;
    double w_unskilled = 0.0;  // also the non-tradable price
    double rent = 0.0;
    double college_frac = 0.0;
    double pop = 0.0;
};

// Migration counts from origin to destination within one year (origin ==
// dest for stayers). Counts may be fractional expected counts.
struct MigrationFlow {
    int year = 0;
    std::string origin;
    std::string dest;
    double count = 0.0;
};

inline constexpr const char* kPanelHeader = "msa,year,w_skilled,w_unskilled,rent,college_frac,pop";
inline constexpr const char* kMigrationHeader = "year,origin,dest,count";

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

std::vector<std::string> split_csv_line(const std::string& line);

void write_panel(std::ostream& out, const std::vector<PanelObservation>& rows);
void write_migration(std::ostream& out, const std::vector<MigrationFlow>& rows);

// Throw IoError on a header mismatch, malformed field, or duplicate key.
std::vector<PanelObservation> read_panel(std::istream& in);
std::vector<MigrationFlow> read_migration(std::istream& in);

std::vector<PanelObservation> read_panel_file(const std::filesystem::path& path);
std::vector<MigrationFlow> read_migration_file(const std::filesystem::path& path);
void write_panel_file(const std::filesystem::path& path, const std::vector<PanelObservation>& rows);
void write_migration_file(const std::filesystem::path& path, const std::vector<MigrationFlow>& rows);

}  // namespace skillscape
