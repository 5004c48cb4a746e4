#pragma once

// Matrix <-> JSON helpers shared by the fixture and report writers.

#include <string_view>

#include "json.hpp"
#include "mtrl/errors.hpp"
#include "mtrl/mat_core.hpp"

namespace mtrl::detail {

inline nlohmann::ordered_json matrix_to_json(const Matrix& m) {
  nlohmann::ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.entries().begin(), m.entries().end());
  return j;
}

inline Matrix matrix_from_json(const nlohmann::json& j, std::string_view field) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw InvalidArgument("fixture field '" + std::string(field) +
                          "' must be an object with rows, cols and data");
  }
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) {
    throw InvalidArgument("fixture field '" + std::string(field) + "': data has " +
                          std::to_string(data.size()) + " entries, expected rows*cols");
  }
  return Matrix(rows, cols, std::move(data));
}

}  // namespace mtrl::detail
