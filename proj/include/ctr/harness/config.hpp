#ifndef CTR_HARNESS_CONFIG_HPP_
#define CTR_HARNESS_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ctr::harness {

// "900" -> 900 s; suffixes s, m, h, d; fractions allowed ("0.25h" -> 900).
int64_t parse_duration(const std::string& text);

// Flat `key = value` text with '#' comments.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  int64_t get_duration(const std::string& key, int64_t fallback) const;
  std::vector<int> get_int_list(const std::string& key,
                                const std::vector<int>& fallback) const;

  // ConfigError when a key outside `known` was supplied.
  void require_known(const std::set<std::string>& known) const;

  void set(const std::string& key, const std::string& value);

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> touched_;
};

std::vector<int64_t> parse_duration_list(const std::string& text);

}  // namespace ctr::harness

#endif  // CTR_HARNESS_CONFIG_HPP_
