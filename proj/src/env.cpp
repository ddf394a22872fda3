#include "storygraph/env.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "storygraph/errors.hpp"

namespace storygraph {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string unquote(std::string_view v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    std::string out(v.substr(1, v.size() - 2));
    if (v.front() == '\'') return out;
    std::string esc;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i] == '\\' && i + 1 < out.size()) {
        char c = out[++i];
        esc.push_back(c == 'n' ? '\n' : c);
      } else {
        esc.push_back(out[i]);
      }
    }
    return esc;
  }
  // Unquoted values may carry a trailing " # comment".
  if (auto hash = v.find(" #"); hash != std::string_view::npos) v = trim(v.substr(0, hash));
  return std::string(v);
}

}  // namespace

std::map<std::string, std::string> parse_env(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    if (s.rfind("export ", 0) == 0) s = trim(s.substr(7));
    auto eq = s.find('=');
    if (eq == std::string_view::npos || trim(s.substr(0, eq)).empty()) {
      throw ParseError(".env line " + std::to_string(line_no) + " has no KEY=VALUE");
    }
    out[std::string(trim(s.substr(0, eq)))] = unquote(trim(s.substr(eq + 1)));
  }
  return out;
}

std::size_t load_env_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return 0;
  std::ostringstream buf;
  buf << in.rdbuf();
  std::size_t set = 0;
  for (const auto& [k, v] : parse_env(buf.str())) {
    if (std::getenv(k.c_str()) != nullptr) continue;
    ::setenv(k.c_str(), v.c_str(), 0);
    ++set;
  }
  return set;
}

}  // namespace storygraph
