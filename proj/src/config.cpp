#include "odc/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace odc::config {

void Tree::insert(const std::string& key, const std::string& value, int line) {
  if (kv_.count(key))
    throw UsageError("config line " + std::to_string(line) + ": duplicate key '" + key + "'");
  kv_[key] = value;
  lines_[key] = line;
}

bool Tree::has(const std::string& key) const {
  used_.insert(key);
  return kv_.count(key) > 0;
}

void Tree::fail(const std::string& key, const std::string& why) const {
  const auto it = lines_.find(key);
  const std::string where = it == lines_.end() ? "config" : "config line " + std::to_string(it->second);
  throw UsageError(where + ": " + why + " for key '" + key + "'");
}

const std::string& Tree::get(const std::string& key) const {
  used_.insert(key);
  const auto it = kv_.find(key);
  if (it == kv_.end()) throw UsageError("config: missing required key '" + key + "'");
  return it->second;
}

std::string Tree::get_or(const std::string& key, const std::string& fallback) const {
  used_.insert(key);
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double Tree::get_double(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "inf") return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    fail(key, "expected a number, got '" + s + "'");
  }
  if (pos != s.size()) fail(key, "trailing characters in number '" + s + "'");
  return v;
}

double Tree::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int Tree::get_int(const std::string& key) const {
  const double v = get_double(key);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) fail(key, "expected an integer");
  return i;
}

int Tree::get_int_or(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t Tree::get_u64_or(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = get(key);
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    fail(key, "expected an unsigned integer, got '" + s + "'");
  }
}

bool Tree::get_bool_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = get(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  fail(key, "expected true/false, got '" + s + "'");
}

Vector Tree::get_vector(const std::string& key) const {
  const std::string& s = get(key);
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t pos = 0;
    try {
      vals.push_back(std::stod(part, &pos));
    } catch (const std::exception&) {
      fail(key, "expected comma-separated numbers, got '" + s + "'");
    }
    while (pos < part.size() && std::isspace(static_cast<unsigned char>(part[pos]))) ++pos;
    if (pos != part.size()) fail(key, "bad number '" + part + "'");
  }
  if (vals.empty()) fail(key, "expected at least one number");
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

int Tree::line_of(const std::string& key) const {
  const auto it = lines_.find(key);
  return it == lines_.end() ? 0 : it->second;
}

std::set<std::string> Tree::unused_keys() const {
  std::set<std::string> out;
  for (const auto& [k, v] : kv_)
    if (!used_.count(k)) out.insert(k);
  return out;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

Tree parse_text(const std::string& text) {
  Tree tree;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    std::string stripped = hash == std::string::npos ? raw : raw.substr(0, hash);
    stripped = trim(stripped);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(line) + ": expected 'key = value', got '" +
                       trim(raw) + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || key.find(' ') != std::string::npos)
      throw UsageError("config line " + std::to_string(line) + ": bad key '" + key + "'");
    if (value.empty())
      throw UsageError("config line " + std::to_string(line) + ": empty value for key '" + key + "'");
    tree.insert(key, value, line);
  }
  return tree;
}

Tree parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

std::string serialize(const Tree& tree) {
  std::string out;
  for (const auto& [k, v] : tree.entries()) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

std::string format_double(double v) {
  if (v == std::numeric_limits<double>::infinity()) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec <= 16; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::stod(shorter) == v) return shorter;
  }
  return buf;
}

std::string format_vector(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v(i));
  }
  return out;
}

}  // namespace odc::config
