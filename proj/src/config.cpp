#include "aacc/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aacc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

IniDocument IniDocument::parse(const std::string& text) {
  IniDocument doc;
  std::istringstream in(text);
  std::string line;
  std::string section;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') {
      continue;
    }
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      if (!doc.sections_.count(section)) {
        doc.sections_[section] = {};
        doc.order_.push_back(section);
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: malformed line: " + t);
    }
    if (!doc.sections_.count(section)) {
      doc.sections_[section] = {};
      doc.order_.push_back(section);
    }
    doc.sections_[section].emplace_back(trim(t.substr(0, eq)),
                                        trim(t.substr(eq + 1)));
  }
  return doc;
}

IniDocument IniDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("config: cannot open " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string IniDocument::serialize() const {
  std::ostringstream os;
  for (const auto& name : order_) {
    if (!name.empty()) {
      os << '[' << name << "]\n";
    }
    for (const auto& [k, v] : sections_.at(name)) {
      os << k << " = " << v << '\n';
    }
    os << '\n';
  }
  return os.str();
}

void IniDocument::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("config: cannot write " + path);
  }
  out << serialize();
}

bool IniDocument::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  if (it == sections_.end()) {
    return false;
  }
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](const auto& kv) { return kv.first == key; });
}

std::string IniDocument::get(const std::string& section, const std::string& key,
                             const std::string& fallback) const {
  const auto it = sections_.find(section);
  if (it == sections_.end()) {
    return fallback;
  }
  for (auto rit = it->second.rbegin(); rit != it->second.rend(); ++rit) {
    if (rit->first == key) {
      return rit->second;
    }
  }
  return fallback;
}

double IniDocument::get_double(const std::string& section,
                               const std::string& key, double fallback) const {
  const std::string v = get(section, key);
  return v.empty() ? fallback : std::stod(v);
}

int IniDocument::get_int(const std::string& section, const std::string& key,
                         int fallback) const {
  const std::string v = get(section, key);
  return v.empty() ? fallback : std::stoi(v);
}

bool IniDocument::get_bool(const std::string& section, const std::string& key,
                           bool fallback) const {
  std::string v = get(section, key);
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v.empty()) {
    return fallback;
  }
  return v == "1" || v == "true" || v == "yes" || v == "on";
}

void IniDocument::set(const std::string& section, const std::string& key,
                      const std::string& value) {
  if (!sections_.count(section)) {
    sections_[section] = {};
    order_.push_back(section);
  }
  for (auto& kv : sections_[section]) {
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  }
  sections_[section].emplace_back(key, value);
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) {
      out.push_back(t);
    }
  }
  return out;
}

std::vector<double> split_doubles(const std::string& csv) {
  std::vector<double> out;
  for (const auto& s : split_list(csv)) {
    out.push_back(std::stod(s));
  }
  return out;
}

}  // namespace aacc
