#include "ini.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace telesim::ini {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

}  // namespace

const Entry* Section::find(const std::string& key) const {
  for (const Entry& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

std::vector<const Entry*> Section::find_all(const std::string& key) const {
  std::vector<const Entry*> out;
  for (const Entry& e : entries) {
    if (e.key == key) out.push_back(&e);
  }
  return out;
}

std::vector<const Section*> File::find_all(const std::string& name) const {
  std::vector<const Section*> out;
  for (const Section& s : sections) {
    if (s.name == name) out.push_back(&s);
  }
  return out;
}

const Section* File::find(const std::string& name) const {
  for (const Section& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

File parse(const std::string& text, const std::string& path) {
  File file;
  file.path = path;
  std::istringstream stream(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    if (const std::size_t hash = raw.find('#'); hash != std::string::npos) {
      raw = raw.substr(0, hash);
    }
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(path, line_no, "malformed section header");
      }
      Section section;
      section.name = trim(line.substr(1, line.size() - 2));
      section.line = line_no;
      if (section.name.empty()) {
        throw ConfigError(path, line_no, "empty section name");
      }
      file.sections.push_back(std::move(section));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path, line_no, "expected key = value");
    }
    Entry entry;
    entry.key = trim(line.substr(0, eq));
    entry.value = trim(line.substr(eq + 1));
    entry.line = line_no;
    if (entry.key.empty()) {
      throw ConfigError(path, line_no, "empty key");
    }
    if (file.sections.empty()) {
      throw ConfigError(path, line_no, "key outside of any [section]");
    }
    file.sections.back().entries.push_back(std::move(entry));
  }
  return file;
}

File parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(path, 0, "cannot open file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

double to_double(const File& f, const Entry& e) {
  const std::vector<double> values = to_doubles(f, e);
  if (values.size() != 1) {
    throw ConfigError(f.path, e.line, "expected a single number for '" + e.key + "'");
  }
  return values[0];
}

long to_long(const File& f, const Entry& e) {
  long value = 0;
  const char* begin = e.value.data();
  const char* end = begin + e.value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(f.path, e.line, "expected an integer for '" + e.key + "'");
  }
  return value;
}

std::vector<double> to_doubles(const File& f, const Entry& e) {
  std::vector<double> out;
  std::istringstream stream(e.value);
  std::string token;
  while (stream >> token) {
    try {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(f.path, e.line,
                        "expected numbers for '" + e.key + "', got '" + token + "'");
    }
  }
  if (out.empty()) {
    throw ConfigError(f.path, e.line, "expected numbers for '" + e.key + "'");
  }
  return out;
}

Eigen::VectorXd to_vector(const File& f, const Entry& e, int expected_size) {
  const std::vector<double> values = to_doubles(f, e);
  if (static_cast<int>(values.size()) != expected_size) {
    throw ConfigError(f.path, e.line,
                      "expected " + std::to_string(expected_size) + " numbers for '" +
                          e.key + "', got " + std::to_string(values.size()));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), expected_size);
}

}  // namespace telesim::ini
