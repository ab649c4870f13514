#include "losflow/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace losflow::config {

Reader::Reader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
  if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
}

bool Reader::has(std::string_view key) const {
  auto it = node_.find(std::string(key));
  return it != node_.end() && !it->is_null();
}

std::string Reader::field_path(std::string_view key) const {
  return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
}

void Reader::fail(std::string_view key, std::string_view message) const {
  throw ConfigError(field_path(key) + ": " + std::string(message));
}

Reader Reader::child(std::string_view key) const {
  if (!has(key)) fail(key, "required field missing");
  return Reader(node_.at(std::string(key)), field_path(key));
}

std::optional<Reader> Reader::optional_child(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return child(key);
}

double Reader::number(std::string_view key) const {
  if (!has(key)) fail(key, "required field missing");
  const auto& v = node_.at(std::string(key));
  if (!v.is_number()) fail(key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(key, "expected a finite number");
  return d;
}

double Reader::number(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }

std::int64_t Reader::integer(std::string_view key) const {
  if (!has(key)) fail(key, "required field missing");
  const auto& v = node_.at(std::string(key));
  if (!v.is_number_integer()) fail(key, "expected an integer");
  return v.get<std::int64_t>();
}

std::int64_t Reader::integer(std::string_view key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::uint64_t Reader::seed(std::string_view key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const auto& v = node_.at(std::string(key));
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    fail(key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool Reader::boolean(std::string_view key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = node_.at(std::string(key));
  if (!v.is_boolean()) fail(key, "expected true or false");
  return v.get<bool>();
}

std::string Reader::string(std::string_view key) const {
  if (!has(key)) fail(key, "required field missing");
  const auto& v = node_.at(std::string(key));
  if (!v.is_string()) fail(key, "expected a string");
  return v.get<std::string>();
}

std::string Reader::string(std::string_view key, std::string_view fallback) const {
  return has(key) ? string(key) : std::string(fallback);
}

void Reader::check_schema_version(int expected) const {
  if (!has("schema_version")) return;
  if (integer("schema_version") != expected) {
    fail("schema_version", "unsupported version (expected " + std::to_string(expected) + ")");
  }
}

Json parse(std::string_view text, std::string_view origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string(origin) + ": " + e.what());
  }
}

Json parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

Capacity capacity(const Reader& r, std::string_view key, Capacity fallback) {
  auto it = r.node().find(std::string(key));
  if (it == r.node().end()) return fallback;
  if (it->is_null()) return std::nullopt;
  if (it->is_string()) {
    if (it->get<std::string>() == "inf") return std::nullopt;
    r.fail(key, "expected a non-negative integer or \"inf\"");
  }
  const auto v = r.integer(key);
  if (v < 0) r.fail(key, "capacity must be non-negative");
  return v;
}

}  // namespace losflow::config
