#pragma once

#include <map>
#include <string>
#include <vector>

namespace resloco {

// Plain-text key-value config with [section] headers.
//
// Grammar (one entry per line):
//   # comment            comments start with '#' or ';'
//   [section.name]       keys that follow belong to this section
//   key = value          value is everything after '=', trimmed
//
// Keys are addressed as "section.key"; keys before any header have no
// prefix. Vectors are comma-separated scalars. Repeated sections merge;
// a repeated key overwrites.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_vector(const std::string& key) const;
  std::vector<double> get_vector(const std::string& key,
                                 const std::vector<double>& fallback) const;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);

  // canonical text form; parse(emit(c)) == c
  std::string emit() const;
  void save(const std::string& path) const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }
  bool operator==(const Config& other) const {
    return entries_ == other.entries_;
  }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace resloco
