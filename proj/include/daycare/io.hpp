#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "daycare/market.hpp"
#include "daycare/matching.hpp"

namespace daycare {

/// Ordered `# key=value` lines that open every output file.
struct Metadata {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, std::string value);
  std::optional<std::string> get(const std::string& key) const;
};

std::string format_metadata(const Metadata& metadata);

/// Comma-separated table with a header row. Leading `#` lines become metadata.
struct Table {
  std::string source;
  Metadata metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// File line of each row, for error messages.
  std::vector<std::size_t> lines;

  /// Throws DataError when the column is absent.
  std::size_t column(const std::string& name) const;
  std::optional<std::size_t> find_column(const std::string& name) const;
};

Table read_table(std::istream& in, const std::string& source);
/// Throws DataError naming the path when the file cannot be opened.
Table read_table_file(const std::filesystem::path& path);

std::int64_t parse_int(const std::string& text, const std::string& where);
double parse_real(const std::string& text, const std::string& where);
std::string format_real(double value);

inline constexpr const char* kDaycaresFile = "daycares.csv";
inline constexpr const char* kChildrenFile = "children.csv";
inline constexpr const char* kFamiliesFile = "families.csv";
inline constexpr const char* kRolsFile = "rols.csv";

Market market_from_tables(const Table& daycares, const Table& children, const Table& families,
                          const Table& rols);
Market read_market(const std::filesystem::path& dir);

void write_daycares(std::ostream& out, const Market& market);
void write_children(std::ostream& out, const Market& market);
void write_families(std::ostream& out, const Market& market);
void write_rols(std::ostream& out, const Market& market);

/// Writes content to a fresh file; refuses to replace an existing one unless forced.
void write_text_file(const std::filesystem::path& path, const std::string& content, bool force);
void write_market(const std::filesystem::path& dir, const Market& market, const Metadata& metadata,
                  bool force);

Matching matching_from_table(const Table& table, const Market& market);
Matching read_matching(const std::filesystem::path& path, const Market& market);

/// FNV-1a 64-bit, hex encoded; used for config hashes in metadata.
std::string fnv1a_hex(const std::string& text);

}  // namespace daycare
