#pragma once

// Reader for the small TOML subset used by system definition files:
// `[section]` headers, `key = value` pairs, `#` comments. Values are
// numbers, double-quoted strings, or single-line arrays of either.

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lyacanon::toml {

struct Value {
  std::variant<double, std::string, std::vector<double>, std::vector<std::string>> data;
  std::size_t line = 0;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_number_array() const { return std::holds_alternative<std::vector<double>>(data); }
  bool is_string_array() const {
    return std::holds_alternative<std::vector<std::string>>(data);
  }
};

struct Section {
  std::string name;
  std::size_t line = 0;
  std::vector<std::pair<std::string, Value>> entries;  // file order

  const Value* find(std::string_view key) const;
};

struct Document {
  std::vector<Section> sections;
  const Section* find(std::string_view name) const;
};

/// Throws ParseError with line/column on malformed input.
Document parse(std::string_view text);

}  // namespace lyacanon::toml
