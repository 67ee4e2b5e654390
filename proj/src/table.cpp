#include "mimoee/cli/table.hpp"

#include <charconv>
#include <cmath>

namespace mimoee::cli {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ec == std::errc() ? end : buf);
}

namespace {

std::string csv_text(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) {
    if (s->find_first_of(",\"\n") == std::string::npos) return *s;
    std::string quoted = "\"";
    for (char ch : *s) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return quoted + "\"";
  }
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  return format_number(std::get<double>(cell));
}

}  // namespace

void write_csv(std::ostream& out, const Table& table) {
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_text(row[c]);
    out << '\n';
  }
}

nlohmann::json to_json(const Table& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t c = 0; c < row.size() && c < table.columns.size(); ++c) {
      std::visit(
          [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, double>)
              obj[table.columns[c]] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
            else
              obj[table.columns[c]] = v;
          },
          row[c]);
    }
    rows.push_back(std::move(obj));
  }
  return rows;
}

}  // namespace mimoee::cli
