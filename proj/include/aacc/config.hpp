#pragma once

#include <map>
#include <string>
#include <vector>

namespace aacc {

/// Minimal INI-style document: ordered sections of key = value pairs.
/// Lines starting with '#' or ';' are comments.
class IniDocument {
 public:
  static IniDocument parse(const std::string& text);
  static IniDocument load(const std::string& path);

  std::string serialize() const;
  void save(const std::string& path) const;

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback = "") const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  void set(const std::string& section, const std::string& key,
           const std::string& value);

  const std::vector<std::string>& section_order() const { return order_; }
  const std::map<std::string, std::vector<std::pair<std::string, std::string>>>&
  sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::vector<std::pair<std::string, std::string>>>
      sections_;
  std::vector<std::string> order_;
};

std::vector<std::string> split_list(const std::string& csv);
std::vector<double> split_doubles(const std::string& csv);

}  // namespace aacc
