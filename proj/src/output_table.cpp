#include "eqw/output_table.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace eqw {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string_view type_name(ColumnType t) {
  switch (t) {
    case ColumnType::Integer:
      return "int";
    case ColumnType::Real:
      return "real";
    case ColumnType::Text:
      return "text";
  }
  return "text";
}

ColumnType parse_type(std::string_view s) {
  if (s == "int") return ColumnType::Integer;
  if (s == "real") return ColumnType::Real;
  if (s == "text") return ColumnType::Text;
  throw std::invalid_argument("unknown column type '" + std::string(s) + "'");
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool cell_matches(const Cell& c, ColumnType t) {
  if (std::holds_alternative<Missing>(c)) return true;
  switch (t) {
    case ColumnType::Integer:
      return std::holds_alternative<std::int64_t>(c);
    case ColumnType::Real:
      return std::holds_alternative<double>(c);
    case ColumnType::Text:
      return std::holds_alternative<std::string>(c);
  }
  return false;
}

std::string format_cell(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return {};
}

Cell parse_cell(const std::string& text, ColumnType t) {
  if (text.empty()) return Missing{};
  switch (t) {
    case ColumnType::Integer: {
      std::int64_t v = 0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::invalid_argument("bad integer cell '" + text + "'");
      }
      return v;
    }
    case ColumnType::Real:
      return parse_real(text);
    case ColumnType::Text:
      return text;
  }
  return Missing{};
}

std::string config_key_value(double v) { return format_real(v); }

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("failed to format real");
  return std::string(buf, ptr);
}

double parse_real(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("bad real value '" + std::string(text) + "'");
  }
  return v;
}

OutputTable::OutputTable(std::vector<Column> columns) : columns_(std::move(columns)) {
  for (const auto& c : columns_) {
    if (c.name.empty() || c.name.front() == '#' ||
        c.name.find_first_of(",\n\r") != std::string::npos) {
      throw std::invalid_argument("bad column name '" + c.name + "'");
    }
  }
}

void OutputTable::set_meta(std::string key, std::string value) {
  if (key.empty() || key == "types" || key.find_first_of(":\n\r") != std::string::npos ||
      value.find_first_of("\n\r") != std::string::npos) {
    throw std::invalid_argument("metadata key/value contains a reserved character");
  }
  for (auto& [k, v] : meta_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  meta_.emplace_back(std::move(key), std::move(value));
}

const std::string& OutputTable::meta(std::string_view key) const {
  for (const auto& [k, v] : meta_) {
    if (k == key) return v;
  }
  throw std::out_of_range("missing metadata key '" + std::string(key) + "'");
}

void OutputTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) {
    throw std::invalid_argument("row has " + std::to_string(row.size()) + " cells, table has " +
                                std::to_string(columns_.size()) + " columns");
  }
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (!cell_matches(row[i], columns_[i].type)) {
      throw std::invalid_argument("cell type mismatch in column '" + columns_[i].name + "'");
    }
    if (const auto* s = std::get_if<std::string>(&row[i])) {
      // Empty text would read back as Missing, and a leading '#' as a comment.
      if (s->empty() || s->front() == '#' || s->find_first_of(",\n\r") != std::string::npos) {
        throw std::invalid_argument("text cell in column '" + columns_[i].name +
                                    "' is empty or holds a reserved character");
      }
    }
  }
  rows_.push_back(std::move(row));
}

void OutputTable::write_csv(std::ostream& os) const {
  for (const auto& [k, v] : meta_) os << "# " << k << ": " << v << '\n';
  os << "# types: ";
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    os << (i ? "," : "") << type_name(columns_[i].type);
  }
  os << '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i].name;
  os << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
    os << '\n';
  }
}

OutputTable OutputTable::read_csv(std::istream& is) {
  OutputTable table;
  std::vector<ColumnType> types;
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.starts_with("# ")) {
      const std::size_t colon = line.find(": ", 2);
      if (colon == std::string::npos) throw std::invalid_argument("bad metadata line: " + line);
      std::string key = line.substr(2, colon - 2);
      std::string value = line.substr(colon + 2);
      if (key == "types") {
        for (const auto& t : split(value, ',')) types.push_back(parse_type(t));
      } else {
        table.meta_.emplace_back(std::move(key), std::move(value));
      }
      continue;
    }
    if (!have_header) {
      const auto names = split(line, ',');
      if (types.size() != names.size()) throw std::invalid_argument("missing or bad types line");
      for (std::size_t i = 0; i < names.size(); ++i) table.columns_.push_back({names[i], types[i]});
      have_header = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != types.size()) throw std::invalid_argument("ragged row: " + line);
    std::vector<Cell> row;
    row.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) row.push_back(parse_cell(fields[i], types[i]));
    table.rows_.push_back(std::move(row));
  }
  return table;
}

void OutputTable::write_json(std::ostream& os) const {
  ordered_json j;
  j["metadata"] = ordered_json::object();
  for (const auto& [k, v] : meta_) j["metadata"][k] = v;
  j["columns"] = ordered_json::array();
  for (const auto& c : columns_) {
    j["columns"].push_back({{"name", c.name}, {"type", type_name(c.type)}});
  }
  j["rows"] = ordered_json::array();
  for (const auto& row : rows_) {
    ordered_json r = ordered_json::array();
    for (const auto& cell : row) {
      if (const auto* i = std::get_if<std::int64_t>(&cell)) {
        r.push_back(*i);
      } else if (const auto* d = std::get_if<double>(&cell)) {
        // JSON has no non-finite numbers; keep them as text.
        if (std::isfinite(*d)) {
          r.push_back(*d);
        } else {
          r.push_back(format_real(*d));
        }
      } else if (const auto* s = std::get_if<std::string>(&cell)) {
        r.push_back(*s);
      } else {
        r.push_back(nullptr);
      }
    }
    j["rows"].push_back(std::move(r));
  }
  os << j.dump(1) << '\n';
}

OutputTable OutputTable::read_json(std::istream& is) {
  const ordered_json j = ordered_json::parse(is);
  OutputTable table;
  for (const auto& [k, v] : j.at("metadata").items()) {
    table.meta_.emplace_back(k, v.get<std::string>());
  }
  for (const auto& c : j.at("columns")) {
    table.columns_.push_back({c.at("name").get<std::string>(),
                              parse_type(c.at("type").get<std::string>())});
  }
  for (const auto& r : j.at("rows")) {
    std::vector<Cell> row;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto& v = r[i];
      if (v.is_null()) {
        row.emplace_back(Missing{});
        continue;
      }
      switch (table.columns_.at(i).type) {
        case ColumnType::Integer:
          row.emplace_back(v.get<std::int64_t>());
          break;
        case ColumnType::Real:
          row.emplace_back(v.is_string() ? parse_real(v.get<std::string>()) : v.get<double>());
          break;
        case ColumnType::Text:
          row.emplace_back(v.get<std::string>());
          break;
      }
    }
    table.rows_.push_back(std::move(row));
  }
  return table;
}

void write_config_metadata(OutputTable& table, const RunConfig& c) {
  table.set_meta("version", std::string(kVersion));
  table.set_meta("q", config_key_value(c.q));
  table.set_meta("coin", std::string(1, coin_family_char(c.coin.family)));
  table.set_meta("theta_rad", config_key_value(c.coin.theta));
  table.set_meta("phi_rad", config_key_value(c.coin.phi));
  table.set_meta("tmax", std::to_string(c.t_max));
  table.set_meta("ntraj", std::to_string(c.n_trajectories));
  table.set_meta("seed", std::to_string(c.seed));
  table.set_meta("avg_mode", std::string(averaging_mode_name(c.mode)));
  table.set_meta("threshold", config_key_value(c.threshold));
  table.set_meta("fit_window", config_key_value(c.fit_window.lo) + ":" +
                                   config_key_value(c.fit_window.hi));
  table.set_meta("entropy_base", c.entropy_base == LogBase::Two ? "2" : "e");
  table.set_meta("localization", c.localization ? "1" : "0");
}

RunConfig read_config_metadata(const OutputTable& table) {
  RunConfig c;
  c.q = parse_real(table.meta("q"));
  c.coin.family = parse_coin_family(table.meta("coin").at(0));
  c.coin.theta = parse_real(table.meta("theta_rad"));
  c.coin.phi = parse_real(table.meta("phi_rad"));
  c.t_max = std::stoll(table.meta("tmax"));
  c.n_trajectories = std::stoll(table.meta("ntraj"));
  c.seed = std::stoull(table.meta("seed"));
  c.mode = parse_averaging_mode(table.meta("avg_mode"));
  c.threshold = parse_real(table.meta("threshold"));
  const std::string& fw = table.meta("fit_window");
  const std::size_t colon = fw.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad fit_window metadata");
  c.fit_window.lo = parse_real(std::string_view(fw).substr(0, colon));
  c.fit_window.hi = parse_real(std::string_view(fw).substr(colon + 1));
  c.entropy_base = table.meta("entropy_base") == "2" ? LogBase::Two : LogBase::Natural;
  c.localization = table.meta("localization") == "1";
  return c;
}

}  // namespace eqw
