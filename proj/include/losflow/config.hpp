#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "losflow/domain.hpp"

namespace losflow::config {

using Json = nlohmann::json;

/// Reads fields out of a JSON object while tracking the path, so every error
/// names the field that caused it ("simulate.scenario.gw_capacity").
class Reader {
 public:
  Reader(const Json& node, std::string path);

  const Json& node() const { return node_; }
  const std::string& path() const { return path_; }
  bool has(std::string_view key) const;
  std::string field_path(std::string_view key) const;

  Reader child(std::string_view key) const;
  std::optional<Reader> optional_child(std::string_view key) const;

  double number(std::string_view key) const;
  double number(std::string_view key, double fallback) const;
  std::int64_t integer(std::string_view key) const;
  std::int64_t integer(std::string_view key, std::int64_t fallback) const;
  std::uint64_t seed(std::string_view key, std::uint64_t fallback) const;
  bool boolean(std::string_view key, bool fallback) const;
  std::string string(std::string_view key) const;
  std::string string(std::string_view key, std::string_view fallback) const;

  [[noreturn]] void fail(std::string_view key, std::string_view message) const;

  /// Requires `schema_version` to equal `expected` when present.
  void check_schema_version(int expected) const;

 private:
  const Json& node_;
  std::string path_;
};

/// Parses a JSON document; syntax errors become ConfigError.
Json parse(std::string_view text, std::string_view origin);
Json parse_file(const std::string& path);

/// Capacity: non-negative integer, or "inf"/null for unbounded.
Capacity capacity(const Reader& r, std::string_view key, Capacity fallback);

}  // namespace losflow::config
