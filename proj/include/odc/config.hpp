#pragma once

#include "odc/common.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>

namespace odc::config {

/// Flat key-value view of a config file. Keys are dotted paths
/// (`train.lr = 1e-4`); `#` starts a comment. Parse and lookup errors carry
/// the source line of the offending entry.
class Tree {
 public:
  void insert(const std::string& key, const std::string& value, int line);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int_or(const std::string& key, int fallback) const;
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  Vector get_vector(const std::string& key) const;  // comma-separated reals

  int line_of(const std::string& key) const;
  /// Keys never read through any getter; used to reject misspelled entries.
  std::set<std::string> unused_keys() const;
  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& why) const;
  std::map<std::string, std::string> kv_;
  std::map<std::string, int> lines_;
  mutable std::set<std::string> used_;
};

Tree parse_text(const std::string& text);
Tree parse_file(const std::string& path);

/// Canonical `key = value` listing, sorted by key; stable across round trips.
std::string serialize(const Tree& tree);

std::string format_double(double v);  // shortest round-trip decimal
std::string format_vector(const Vector& v);

}  // namespace odc::config
