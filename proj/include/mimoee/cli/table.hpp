#pragma once

#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace mimoee::cli {

/// A cell is text or a number; numbers are written with shortest round-trip formatting.
using Cell = std::variant<std::string, double, long long>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Shortest decimal text that reads back to the same double; "inf", "-inf" and "nan" otherwise.
std::string format_number(double x);

void write_csv(std::ostream& out, const Table& table);

/// Array of row objects keyed by column name; non-finite numbers become null.
nlohmann::json to_json(const Table& table);

}  // namespace mimoee::cli
