#ifndef MLKF_TOML_LITE_HPP
#define MLKF_TOML_LITE_HPP

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include <nlohmann/json.hpp>

#include "mlkf/error.hpp"

// The subset of TOML used by experiment configs: bare or quoted keys, [table] and
// [dotted.table] headers, strings, integers, floats, booleans, single-line arrays of those,
// and # comments.
namespace mlkf::toml {

using json = nlohmann::json;

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (!at_end()) {
      skip_blank();
      if (at_end()) break;
      if (peek() == '[') {
        table = &open_table(root);
      } else {
        const std::string key = parse_key();
        skip_space();
        expect('=');
        skip_space();
        if (table->contains(key)) fail("duplicate key '" + key + "'");
        (*table)[key] = parse_value();
      }
      end_line();
    }
    return root;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw config_error(source_ + ": line " + std::to_string(line_) + ": " + what);
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_space() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (!at_end() && peek() == '#') {
      while (!at_end() && peek() != '\n') ++pos_;
    }
  }

  // Skips whitespace, comments and newlines.
  void skip_blank() {
    while (!at_end()) {
      skip_space();
      skip_comment();
      if (!at_end() && (peek() == '\n' || peek() == '\r')) {
        if (peek() == '\n') ++line_;
        ++pos_;
        continue;
      }
      break;
    }
  }

  void end_line() {
    skip_space();
    skip_comment();
    if (!at_end() && peek() == '\r') ++pos_;
    if (at_end()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    ++pos_;
    ++line_;
  }

  static bool bare_key_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  }

  std::string parse_key() {
    if (!at_end() && peek() == '"') return parse_string();
    if (!at_end() && peek() == '\'') return parse_literal_string();
    const std::size_t start = pos_;
    while (!at_end() && bare_key_char(peek())) ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  json& open_table(json& root) {
    expect('[');
    json* node = &root;
    while (true) {
      skip_space();
      const std::string key = parse_key();
      skip_space();
      json& child = (*node)[key];
      if (child.is_null()) child = json::object();
      if (!child.is_object()) fail("'" + key + "' is not a table");
      node = &child;
      if (!at_end() && peek() == '.') {
        ++pos_;
        continue;
      }
      break;
    }
    expect(']');
    return *node;
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) fail("unterminated escape");
        const char e = text_[pos_++];
        switch (e) {
          case 'n':
            out += '\n';
            break;
          case 't':
            out += '\t';
            break;
          case '"':
            out += '"';
            break;
          case '\\':
            out += '\\';
            break;
          default:
            fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  std::string parse_literal_string() {
    expect('\'');
    const std::size_t start = pos_;
    while (!at_end() && peek() != '\'' && peek() != '\n') ++pos_;
    if (at_end() || peek() != '\'') fail("unterminated string");
    std::string out(text_.substr(start, pos_ - start));
    ++pos_;
    return out;
  }

  json parse_value() {
    if (at_end()) fail("missing value");
    const char c = peek();
    if (c == '"') return parse_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array();
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return parse_number();
  }

  json parse_array() {
    expect('[');
    json arr = json::array();
    while (true) {
      skip_blank();
      if (at_end()) fail("unterminated array");
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(parse_value());
      skip_blank();
      if (!at_end() && peek() == ',') {
        ++pos_;
        continue;
      }
      skip_blank();
      expect(']');
      return arr;
    }
  }

  json parse_number() {
    const std::size_t start = pos_;
    while (!at_end()) {
      const char c = peek();
      if ((c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.' || c == 'e' || c == 'E' || c == '_') {
        ++pos_;
      } else {
        break;
      }
    }
    std::string token;
    for (char c : text_.substr(start, pos_ - start)) {
      if (c != '_') token += c;
    }
    if (token.empty()) fail("expected a value");
    if (token.front() == '+') token.erase(0, 1);
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    if (is_float) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size()) fail("malformed number '" + token + "'");
      return v;
    }
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) fail("malformed integer '" + token + "'");
    return v;
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace detail

inline json parse(std::string_view text, const std::string& source = "<string>") {
  return detail::Parser(text, source).parse();
}

inline json parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

}  // namespace mlkf::toml

#endif  // MLKF_TOML_LITE_HPP
