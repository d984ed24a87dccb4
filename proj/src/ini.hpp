#pragma once

// Line-oriented INI reader shared by the arm-model and scenario loaders.
// Parsing is total: any byte string either yields sections or a ConfigError
// carrying file and line. Internal header, not installed.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace telesim::ini {

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& file, int line, const std::string& message)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + message),
        line_number(line) {}
  int line_number;
};

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;

  const Entry* find(const std::string& key) const;
  std::vector<const Entry*> find_all(const std::string& key) const;
};

struct File {
  std::string path;
  std::vector<Section> sections;

  std::vector<const Section*> find_all(const std::string& name) const;
  const Section* find(const std::string& name) const;
};

File parse(const std::string& text, const std::string& path);
File parse_file(const std::string& path);

// Typed value readers; throw ConfigError on malformed content.
double to_double(const File& f, const Entry& e);
long to_long(const File& f, const Entry& e);
std::vector<double> to_doubles(const File& f, const Entry& e);
Eigen::VectorXd to_vector(const File& f, const Entry& e, int expected_size);

}  // namespace telesim::ini
