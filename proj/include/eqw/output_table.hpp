#pragma once

// Plot-ready tables: delimited text with a commented metadata header, or
// a JSON mirror. Reals are written in shortest round-trip form.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "eqw/ensemble.hpp"

namespace eqw {

inline constexpr std::string_view kVersion = "1.0.0";

enum class ColumnType { Integer, Real, Text };

/// Empty cell (e.g. an undefined statistic).
struct Missing {
  bool operator==(const Missing&) const = default;
};

using Cell = std::variant<Missing, std::int64_t, double, std::string>;

class OutputTable {
 public:
  struct Column {
    std::string name;
    ColumnType type;
  };

  OutputTable() = default;
  /// Throws std::invalid_argument for empty names or names holding a
  /// delimiter or a leading '#'.
  explicit OutputTable(std::vector<Column> columns);

  void set_meta(std::string key, std::string value);
  /// Value for `key`; throws std::out_of_range when absent.
  const std::string& meta(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& metadata() const { return meta_; }

  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }

  /// Appends a row; throws std::invalid_argument unless it matches the
  /// column count and each cell matches its column type (or is Missing).
  void add_row(std::vector<Cell> row);

  void write_csv(std::ostream& os) const;
  void write_json(std::ostream& os) const;

  static OutputTable read_csv(std::istream& is);
  static OutputTable read_json(std::istream& is);

  bool operator==(const OutputTable&) const = default;

 private:
  std::vector<Column> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<std::pair<std::string, std::string>> meta_;
};

/// Shortest decimal text that parses back to exactly `v`.
std::string format_real(double v);
double parse_real(std::string_view text);

/// Records every RunConfig field under stable keys.
void write_config_metadata(OutputTable& table, const RunConfig& config);
RunConfig read_config_metadata(const OutputTable& table);

}  // namespace eqw
