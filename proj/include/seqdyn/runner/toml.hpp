#pragma once

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqdyn/errors.hpp"

namespace seqdyn {

/// Reader for the TOML subset used by experiment configs: comments, [tables]
/// with dotted names, bare/quoted/dotted keys, basic and literal strings,
/// integers, floats, booleans, (multi-line) arrays and inline tables.
/// Dates and multi-line strings are not supported.
class TomlReader {
 public:
  static nlohmann::json parse(std::string_view text) {
    TomlReader r(text);
    return r.document();
  }

 private:
  explicit TomlReader(std::string_view text) : s_(text) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ArgumentError("toml line " + std::to_string(line_) + ": " + msg);
  }

  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }

  void skip_ws() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!done() && peek() != '\n') ++pos_;
    }
  }

  // Whitespace, comments and newlines, as allowed inside arrays.
  void skip_all() {
    for (;;) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        if (peek() == '\n') ++line_;
        ++pos_;
      } else {
        return;
      }
    }
  }

  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (done()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    ++pos_;
    ++line_;
  }

  nlohmann::json document() {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    for (;;) {
      skip_all();
      if (done()) break;
      if (peek() == '[') {
        ++pos_;
        if (peek() == '[') fail("arrays of tables are not supported");
        const auto path = key_path();
        skip_ws();
        if (peek() != ']') fail("expected ']' after table name");
        ++pos_;
        table = &root;
        for (const auto& part : path) {
          auto& next = (*table)[part];
          if (next.is_null()) next = nlohmann::json::object();
          if (!next.is_object()) fail("table '" + part + "' redefines a value");
          table = &next;
        }
        end_of_line();
        continue;
      }
      assign(*table);
      end_of_line();
    }
    return root;
  }

  void assign(nlohmann::json& table) {
    const auto path = key_path();
    skip_ws();
    if (peek() != '=') fail("expected '=' after key");
    ++pos_;
    skip_ws();
    nlohmann::json* target = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      auto& next = (*target)[path[i]];
      if (next.is_null()) next = nlohmann::json::object();
      if (!next.is_object()) fail("key '" + path[i] + "' is not a table");
      target = &next;
    }
    if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*target)[path.back()] = value();
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> parts;
    for (;;) {
      skip_ws();
      if (peek() == '"') {
        parts.push_back(basic_string());
      } else if (peek() == '\'') {
        parts.push_back(literal_string());
      } else {
        const auto start = pos_;
        while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
        if (pos_ == start) fail("expected a key");
        parts.emplace_back(s_.substr(start, pos_ - start));
      }
      skip_ws();
      if (peek() != '.') return parts;
      ++pos_;
    }
  }

  std::string basic_string() {
    ++pos_;
    std::string out;
    for (;;) {
      if (done() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char e = s_[pos_++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string literal_string() {
    ++pos_;
    const auto end = s_.find('\'', pos_);
    if (end == std::string_view::npos || s_.substr(pos_, end - pos_).find('\n') != std::string_view::npos) {
      fail("unterminated string");
    }
    std::string out(s_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  nlohmann::json value() {
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') return inline_table();
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return number();
  }

  nlohmann::json array() {
    ++pos_;
    nlohmann::json arr = nlohmann::json::array();
    for (;;) {
      skip_all();
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(value());
      skip_all();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  nlohmann::json inline_table() {
    ++pos_;
    nlohmann::json t = nlohmann::json::object();
    skip_ws();
    if (peek() == '}') {
      ++pos_;
      return t;
    }
    for (;;) {
      assign(t);
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        return t;
      }
      if (peek() != ',') fail("expected ',' or '}' in inline table");
      ++pos_;
    }
  }

  nlohmann::json number() {
    const auto start = pos_;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                       peek() == '.' || peek() == '_')) {
      ++pos_;
    }
    std::string tok;
    for (char ch : s_.substr(start, pos_ - start)) {
      if (ch != '_') tok += ch;
    }
    if (tok.empty()) fail("expected a value");
    if (tok == "inf" || tok == "+inf" || tok == "-inf" || tok == "nan" || tok == "+nan" || tok == "-nan") {
      fail("non-finite numbers are not accepted");
    }
    const char* first = tok.data() + (tok[0] == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      std::int64_t v = 0;
      const auto [p, ec] = std::from_chars(first, last, v);
      if (ec == std::errc() && p == last) return v;
    } else {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(first, last, v);
      if (ec == std::errc() && p == last) return v;
    }
    fail("invalid value '" + tok + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace seqdyn
