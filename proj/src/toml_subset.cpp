#include "toml_subset.hpp"

#include <cctype>
#include <charconv>

#include "lyacanon/errors.hpp"

namespace lyacanon::toml {

const Value* Section::find(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

const Section* Document::find(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

namespace {

class LineReader {
 public:
  LineReader(std::string_view line, std::size_t line_no) : s_(line), line_(line_no) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("system file: " + msg, line_, pos_ + 1);
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }

  bool at_end_or_comment() {
    skip_ws();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }

  bool accept(char ch) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ch) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char ch) {
    if (!accept(ch)) fail(std::string("expected '") + ch + "'");
  }

  std::string key() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-')) {
      ++pos_;
    }
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string string_literal() {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != '"') fail("expected '\"'");
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\') {
        ++pos_;
        if (pos_ >= s_.size()) break;
        char esc = s_[pos_];
        out.push_back(esc == 'n' ? '\n' : esc == 't' ? '\t' : esc);
      } else {
        out.push_back(s_[pos_]);
      }
      ++pos_;
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  double number() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '.' || s_[pos_] == '+' || s_[pos_] == '-' ||
                                s_[pos_] == '_')) {
      ++pos_;
    }
    std::string text(s_.substr(start, pos_ - start));
    std::erase(text, '_');
    if (!text.empty() && text[0] == '+') text.erase(0, 1);
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
      pos_ = start;
      fail("malformed number '" + text + "'");
    }
    return v;
  }

  Value value() {
    Value v;
    v.line = line_;
    skip_ws();
    if (pos_ >= s_.size()) fail("expected a value");
    if (s_[pos_] == '"') {
      v.data = string_literal();
    } else if (s_[pos_] == '[') {
      ++pos_;
      std::vector<double> nums;
      std::vector<std::string> strs;
      bool any = false;
      bool strings = false;
      if (!accept(']')) {
        for (;;) {
          skip_ws();
          bool is_str = pos_ < s_.size() && s_[pos_] == '"';
          if (any && is_str != strings) fail("mixed array element types");
          strings = is_str;
          any = true;
          if (is_str) {
            strs.push_back(string_literal());
          } else {
            nums.push_back(number());
          }
          if (accept(']')) break;
          expect(',');
          if (accept(']')) break;  // trailing comma
        }
      }
      if (strings) {
        v.data = std::move(strs);
      } else {
        v.data = std::move(nums);
      }
    } else {
      v.data = number();
    }
    return v;
  }

  std::string section_name() {
    std::string name = key();
    expect(']');
    return name;
  }

 private:
  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

Document parse(std::string_view text) {
  Document doc;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    LineReader r(line, line_no);
    if (!r.at_end_or_comment()) {
      if (r.accept('[')) {
        std::string name = r.section_name();
        for (const auto& s : doc.sections) {
          if (s.name == name) r.fail("duplicate section [" + name + "]");
        }
        doc.sections.push_back({name, line_no, {}});
      } else {
        if (doc.sections.empty()) r.fail("key outside of any section");
        std::string key = r.key();
        r.expect('=');
        Value v = r.value();
        if (!r.at_end_or_comment()) r.fail("trailing characters after value");
        auto& sec = doc.sections.back();
        if (sec.find(key)) r.fail("duplicate key '" + key + "'");
        sec.entries.emplace_back(std::move(key), std::move(v));
      }
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return doc;
}

}  // namespace lyacanon::toml
