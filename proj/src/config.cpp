#include "rdq/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace rdq {
namespace {

bool bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

struct TomlParser {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;

  explicit TomlParser(const std::string& t) : text(t) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("toml line " + std::to_string(line) + ": " + what);
  }

  bool eof() const { return pos >= text.size(); }
  char peek() const { return eof() ? '\0' : text[pos]; }

  char take() {
    char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }

  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos;
  }

  // Whitespace, comments, and newlines between statements or array items.
  void skip_blank(bool cross_lines) {
    for (;;) {
      skip_inline_ws();
      if (peek() == '#') {
        while (!eof() && peek() != '\n') ++pos;
      }
      if (cross_lines && !eof() && (peek() == '\n' || peek() == '\r')) {
        take();
        continue;
      }
      return;
    }
  }

  void expect_end_of_line() {
    skip_blank(false);
    if (eof()) return;
    if (peek() == '\r') take();
    if (eof()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    take();
  }

  std::string parse_key() {
    if (peek() == '"') return parse_basic_string();
    if (peek() == '\'') return parse_literal_string();
    std::string key;
    while (!eof() && bare_key_char(peek())) key.push_back(take());
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::string parse_basic_string() {
    take();  // opening quote
    std::string out;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = take();
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (eof()) fail("unterminated escape");
      char e = take();
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 't': out.push_back('\t'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string parse_literal_string() {
    take();
    std::string out;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = take();
      if (c == '\'') return out;
      out.push_back(c);
    }
  }

  nlohmann::json parse_array() {
    take();  // '['
    nlohmann::json arr = nlohmann::json::array();
    for (;;) {
      skip_blank(true);
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        take();
        return arr;
      }
      arr.push_back(parse_value());
      skip_blank(true);
      if (peek() == ',') {
        take();
        continue;
      }
      if (peek() != ']') fail("expected ',' or ']' in array");
    }
  }

  nlohmann::json parse_scalar() {
    std::string token;
    while (!eof()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ',' ||
          c == ']' || c == '#')
        break;
      token.push_back(take());
    }
    if (token.empty()) fail("expected a value");
    if (token == "true") return true;
    if (token == "false") return false;
    if (token == "inf" || token == "+inf")
      return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    if (token == "nan" || token == "+nan" || token == "-nan")
      return std::numeric_limits<double>::quiet_NaN();

    std::string digits;
    digits.reserve(token.size());
    for (std::size_t i = 0; i < token.size(); ++i) {
      if (token[i] == '_') {
        bool mid = i > 0 && i + 1 < token.size() &&
                   std::isdigit(static_cast<unsigned char>(token[i - 1])) &&
                   std::isdigit(static_cast<unsigned char>(token[i + 1]));
        if (!mid) fail("misplaced '_' in number");
        continue;
      }
      digits.push_back(token[i]);
    }

    bool integral = !digits.empty();
    for (std::size_t i = 0; i < digits.size(); ++i) {
      char c = digits[i];
      bool sign = (c == '+' || c == '-') && i == 0;
      if (!sign && !std::isdigit(static_cast<unsigned char>(c))) {
        integral = false;
        break;
      }
    }
    char* end = nullptr;
    errno = 0;
    if (integral) {
      if (digits[0] == '-') {
        long long v = std::strtoll(digits.c_str(), &end, 10);
        if (errno == ERANGE) fail("integer out of range: " + token);
        if (end != digits.c_str() + digits.size()) fail("bad integer: " + token);
        return v;
      }
      unsigned long long v = std::strtoull(digits.c_str(), &end, 10);
      if (errno == ERANGE) fail("integer out of range: " + token);
      if (end != digits.c_str() + digits.size()) fail("bad integer: " + token);
      return static_cast<std::uint64_t>(v);
    }
    double v = std::strtod(digits.c_str(), &end);
    if (end != digits.c_str() + digits.size() || digits.empty())
      fail("unsupported value: " + token);
    return v;
  }

  nlohmann::json parse_value() {
    char c = peek();
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array();
    if (c == '{') fail("inline tables are not supported");
    return parse_scalar();
  }

  nlohmann::json run() {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    skip_blank(true);
    while (!eof()) {
      if (peek() == '[') {
        take();
        if (peek() == '[') fail("array-of-tables sections are not supported");
        skip_inline_ws();
        std::string name = parse_key();
        skip_inline_ws();
        if (peek() == '.') fail("dotted table names are not supported");
        if (peek() != ']') fail("expected ']' after table name");
        take();
        if (root.contains(name)) fail("duplicate table [" + name + "]");
        root[name] = nlohmann::json::object();
        table = &root[name];
        expect_end_of_line();
      } else {
        std::string key = parse_key();
        skip_inline_ws();
        if (peek() == '.') fail("dotted keys are not supported");
        if (peek() != '=') fail("expected '=' after key '" + key + "'");
        take();
        skip_inline_ws();
        nlohmann::json value = parse_value();
        if (table->contains(key)) fail("duplicate key '" + key + "'");
        (*table)[key] = std::move(value);
        expect_end_of_line();
      }
      skip_blank(true);
    }
    return root;
  }
};

}  // namespace

nlohmann::json toml_to_json(const std::string& text) {
  TomlParser parser(text);
  return parser.run();
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();

  bool json_ext = path.size() >= 5 && path.rfind(".json") == path.size() - 5;
  bool toml_ext = path.size() >= 5 && path.rfind(".toml") == path.size() - 5;
  bool looks_json = false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
    looks_json = c == '{';
    break;
  }
  if (json_ext || (!toml_ext && looks_json)) {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config: " + path + ": " + e.what());
    }
  }
  return toml_to_json(text);
}

}  // namespace rdq
