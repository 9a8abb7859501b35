#include "resloco/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace resloco {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments, but not inside values containing '#'? keep it simple:
    // comment starts at first unescaped '#' or ';'
    size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": empty key");
    cfg.entries_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& key) const {
  return entries_.count(key) > 0;
}

std::string Config::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end())
    throw std::runtime_error("missing config key: " + key);
  return it->second;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  size_t pos = 0;
  double d = std::stod(v, &pos);
  if (trim(v.substr(pos)) != "")
    throw std::runtime_error("config key " + key + ": not a number: " + v);
  return d;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  size_t pos = 0;
  long n = std::stol(v, &pos);
  if (trim(v.substr(pos)) != "")
    throw std::runtime_error("config key " + key + ": not an integer: " + v);
  return static_cast<int>(n);
}

int Config::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key) const {
  std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config key " + key + ": not a boolean: " + v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<double> Config::get_vector(const std::string& key) const {
  const std::string v = get_string(key);
  std::vector<double> out;
  std::istringstream in(v);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

std::vector<double> Config::get_vector(
    const std::string& key, const std::vector<double>& fallback) const {
  return has(key) ? get_vector(key) : fallback;
}

void Config::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

void Config::set(const std::string& key, double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  entries_[key] = os.str();
}

std::string Config::emit() const {
  // sectionless keys first, then sections in map order
  std::ostringstream os;
  for (const auto& [full_key, value] : entries_) {
    if (full_key.rfind('.') == std::string::npos)
      os << full_key << " = " << value << "\n";
  }
  std::string current_section;
  for (const auto& [full_key, value] : entries_) {
    size_t dot = full_key.rfind('.');
    if (dot == std::string::npos) continue;
    std::string section = full_key.substr(0, dot);
    std::string key = full_key.substr(dot + 1);
    if (section != current_section) {
      os << "\n[" << section << "]\n";
      current_section = section;
    }
    os << key << " = " << value << "\n";
  }
  return os.str();
}

void Config::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << emit();
}

}  // namespace resloco
