#include <charconv>
#include <cmath>
#include <sstream>

#include "bipath/data_io.hpp"

namespace bipath {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && end == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

DotMap parse_dots_csv(const std::string& text, int width, int height) {
  DotMap dots(width, height);
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const auto comma = body.find(',');
    double x = 0, y = 0;
    if (comma == std::string_view::npos || !parse_double(body.substr(0, comma), x) ||
        !parse_double(body.substr(comma + 1), y)) {
      throw FormatError("dots line " + std::to_string(number) + ": expected 'x,y', got '" + line + "'");
    }
    try {
      dots.add(x, y);
    } catch (const std::out_of_range& e) {
      throw std::out_of_range("dots line " + std::to_string(number) + ": " + e.what());
    }
  }
  return dots;
}

DotMap read_dots_csv(const fs::path& path, int width, int height) {
  const auto bytes = read_bytes(path);
  return parse_dots_csv(std::string(bytes.begin(), bytes.end()), width, height);
}

std::string format_dots_csv(const DotMap& dots) {
  std::string out;
  char buf[64];
  for (const Dot& d : dots.dots()) {
    // Shortest round-trip representation keeps re-parsing bit-exact.
    auto r = std::to_chars(buf, buf + sizeof buf, d.x);
    *r.ptr++ = ',';
    r = std::to_chars(r.ptr, buf + sizeof buf, d.y);
    out.append(buf, r.ptr);
    out.push_back('\n');
  }
  return out;
}

}  // namespace bipath
