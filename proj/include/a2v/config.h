#ifndef A2V_CONFIG_H_
#define A2V_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>

namespace a2v {

// Flat "key = value" configuration with dotted namespaces. Unknown keys are
// kept (they participate in the config hash).
class Config {
 public:
  static Config load(const std::string& path);
  static Config parse(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  void set(const std::string& key, const std::string& value);

  // Sorted "key = value" lines; the canonical form feeds the hash and the
  // checkpoint snapshot.
  std::string canonical() const;
  // FNV-1a 64 over the canonical text, as 16 hex digits.
  std::string hash() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace a2v

#endif  // A2V_CONFIG_H_
