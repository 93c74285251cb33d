#include "toml_lite.hpp"

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <vector>

#include "causal_probe/error.hpp"

namespace causal_probe::toml {
namespace {

using nlohmann::json;

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  json run() {
    json root = json::object();
    json* current = &root;
    while (true) {
      skip_ws_comments_newlines();
      if (eof()) break;
      if (peek() == '[') {
        current = header(root);
      } else {
        key_value(*current);
      }
      expect_line_end();
    }
    return root;
  }

 private:
  std::string_view s_;
  std::size_t i_ = 0;
  std::size_t line_ = 1;

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::ParseError, "TOML line " + std::to_string(line_) + ": " + what);
  }

  bool eof() const { return i_ >= s_.size(); }
  char peek(std::size_t ahead = 0) const { return i_ + ahead < s_.size() ? s_[i_ + ahead] : '\0'; }
  char get() {
    if (eof()) error("unexpected end of input");
    const char c = s_[i_++];
    if (c == '\n') ++line_;
    return c;
  }
  bool starts_with(std::string_view p) const { return s_.substr(i_, p.size()) == p; }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++i_;
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++i_;
    }
  }
  void skip_ws_comments_newlines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n') {
        get();
      } else if (peek() == '\r' && peek(1) == '\n') {
        ++i_;
        get();
      } else {
        break;
      }
    }
  }
  void expect_line_end() {
    skip_ws();
    skip_comment();
    if (eof()) return;
    if (peek() == '\r') ++i_;
    if (peek() != '\n') error("expected end of line");
    get();
  }

  static bool bare_key_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  }

  std::string simple_key() {
    skip_ws();
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    std::string k;
    while (!eof() && bare_key_char(peek())) k.push_back(get());
    if (k.empty()) error("expected a key");
    return k;
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{simple_key()};
    skip_ws();
    while (peek() == '.') {
      ++i_;
      parts.push_back(simple_key());
      skip_ws();
    }
    return parts;
  }

  json* descend(json& base, const std::vector<std::string>& path, std::size_t upto) {
    json* node = &base;
    for (std::size_t k = 0; k < upto; ++k) {
      json& child = (*node)[path[k]];
      if (child.is_null()) child = json::object();
      if (child.is_array()) {
        if (child.empty() || !child.back().is_object()) error("key '" + path[k] + "' is not a table");
        node = &child.back();
      } else if (child.is_object()) {
        node = &child;
      } else {
        error("key '" + path[k] + "' is not a table");
      }
    }
    return node;
  }

  json* header(json& root) {
    ++i_;
    const bool array = peek() == '[';
    if (array) ++i_;
    const auto path = dotted_key();
    if (get() != ']') error("expected ']'");
    if (array && get() != ']') error("expected ']]'");
    json* parent = descend(root, path, path.size() - 1);
    json& slot = (*parent)[path.back()];
    if (array) {
      if (slot.is_null()) slot = json::array();
      if (!slot.is_array()) error("'" + path.back() + "' is not an array of tables");
      slot.push_back(json::object());
      return &slot.back();
    }
    if (slot.is_null()) slot = json::object();
    if (!slot.is_object()) error("'" + path.back() + "' is not a table");
    return &slot;
  }

  void key_value(json& table) {
    const auto path = dotted_key();
    skip_ws();
    if (get() != '=') error("expected '='");
    skip_ws();
    json value = parse_value();
    json* parent = descend(table, path, path.size() - 1);
    if (parent->contains(path.back())) error("duplicate key '" + path.back() + "'");
    (*parent)[path.back()] = std::move(value);
  }

  json parse_value() {
    const char c = peek();
    if (starts_with("\"\"\"")) return multiline_basic();
    if (starts_with("'''")) return multiline_literal();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') return inline_table();
    if (starts_with("true")) {
      i_ += 4;
      return true;
    }
    if (starts_with("false")) {
      i_ += 5;
      return false;
    }
    return number();
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  void escape(std::string& out) {
    const char e = get();
    switch (e) {
      case 'b': out.push_back('\b'); break;
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'f': out.push_back('\f'); break;
      case 'r': out.push_back('\r'); break;
      case '"': out.push_back('"'); break;
      case '\\': out.push_back('\\'); break;
      case 'u':
      case 'U': {
        const int digits = e == 'u' ? 4 : 8;
        std::uint32_t cp = 0;
        for (int k = 0; k < digits; ++k) {
          const char h = get();
          cp <<= 4;
          if (h >= '0' && h <= '9') cp |= static_cast<std::uint32_t>(h - '0');
          else if (h >= 'a' && h <= 'f') cp |= static_cast<std::uint32_t>(h - 'a' + 10);
          else if (h >= 'A' && h <= 'F') cp |= static_cast<std::uint32_t>(h - 'A' + 10);
          else error("bad unicode escape");
        }
        append_utf8(out, cp);
        break;
      }
      default: error(std::string("unknown escape \\") + e);
    }
  }

  std::string basic_string() {
    ++i_;
    std::string out;
    while (true) {
      const char c = get();
      if (c == '"') return out;
      if (c == '\n') error("newline in string");
      if (c == '\\') {
        escape(out);
      } else {
        out.push_back(c);
      }
    }
  }

  std::string literal_string() {
    ++i_;
    std::string out;
    while (true) {
      const char c = get();
      if (c == '\'') return out;
      if (c == '\n') error("newline in string");
      out.push_back(c);
    }
  }

  void skip_first_newline() {
    if (peek() == '\n') {
      get();
    } else if (peek() == '\r' && peek(1) == '\n') {
      ++i_;
      get();
    }
  }

  std::string multiline_basic() {
    i_ += 3;
    skip_first_newline();
    std::string out;
    while (true) {
      if (starts_with("\"\"\"")) {
        i_ += 3;
        return out;
      }
      const char c = get();
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      // Line-ending backslash trims following whitespace and newlines.
      std::size_t k = i_;
      while (k < s_.size() && (s_[k] == ' ' || s_[k] == '\t' || s_[k] == '\r')) ++k;
      if (k < s_.size() && s_[k] == '\n') {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n')) get();
      } else {
        escape(out);
      }
    }
  }

  std::string multiline_literal() {
    i_ += 3;
    skip_first_newline();
    std::string out;
    while (true) {
      if (starts_with("'''")) {
        i_ += 3;
        return out;
      }
      out.push_back(get());
    }
  }

  json array() {
    ++i_;
    json arr = json::array();
    while (true) {
      skip_ws_comments_newlines();
      if (peek() == ']') {
        ++i_;
        return arr;
      }
      arr.push_back(parse_value());
      skip_ws_comments_newlines();
      if (peek() == ',') {
        ++i_;
      } else if (peek() != ']') {
        error("expected ',' or ']' in array");
      }
    }
  }

  json inline_table() {
    ++i_;
    json table = json::object();
    skip_ws();
    if (peek() == '}') {
      ++i_;
      return table;
    }
    while (true) {
      key_value(table);
      skip_ws();
      const char c = get();
      if (c == '}') return table;
      if (c != ',') error("expected ',' or '}' in inline table");
    }
  }

  json number() {
    std::string tok;
    while (!eof()) {
      const char c = peek();
      if ((c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.' || c == 'e' || c == 'E' || c == '_' ||
          c == 'x' || c == 'i' || c == 'n' || c == 'f' || c == 'a' || (c >= 'A' && c <= 'F') ||
          (c >= 'b' && c <= 'd')) {
        tok.push_back(c);
        ++i_;
      } else {
        break;
      }
    }
    std::string clean;
    for (char c : tok) {
      if (c != '_') clean.push_back(c);
    }
    if (clean.empty()) error("expected a value");
    std::string_view body = clean;
    bool negative = false;
    if (body.front() == '+' || body.front() == '-') {
      negative = body.front() == '-';
      body.remove_prefix(1);
    }
    if (body == "inf") return negative ? -INFINITY : INFINITY;
    if (body == "nan") return NAN;
    try {
      if (body.starts_with("0x")) {
        const auto v = static_cast<std::int64_t>(std::stoull(std::string(body.substr(2)), nullptr, 16));
        return negative ? -v : v;
      }
      const bool is_float = body.find_first_of(".eE") != std::string_view::npos;
      std::size_t used = 0;
      if (is_float) {
        const double v = std::stod(clean, &used);
        if (used != clean.size()) error("bad number '" + tok + "'");
        return v;
      }
      const long long v = std::stoll(clean, &used, 10);
      if (used != clean.size()) error("bad number '" + tok + "'");
      return static_cast<std::int64_t>(v);
    } catch (const std::logic_error&) {
      error("bad value '" + tok + "'");
    }
  }
};

}  // namespace

nlohmann::json parse(std::string_view text) { return Parser(text).run(); }

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
  return out;
}

}  // namespace causal_probe::toml
