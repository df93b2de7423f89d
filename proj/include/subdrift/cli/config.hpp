#pragma once

// Schema-checked access to YAML experiment configs. Every lookup records the
// key it consumed; finish() then rejects whatever is left over, so a typo
// never silently falls back to a default.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

namespace subdrift::cli {

/// Config problem with the offending field and source line.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Section {
 public:
  Section(YAML::Node node, std::string path);

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const;
  int line() const;

  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  std::int64_t integer(const std::string& key);
  std::int64_t integer(const std::string& key, std::int64_t fallback);
  std::uint64_t seed(const std::string& key);
  std::string text(const std::string& key);
  std::string text(const std::string& key, const std::string& fallback);
  bool flag(const std::string& key, bool fallback);
  std::vector<double> numbers(const std::string& key);
  std::vector<std::int64_t> integers(const std::string& key);
  Section sub(const std::string& key);
  std::optional<Section> maybe_sub(const std::string& key);
  /// Raw scalar-or-map node, for polymorphic fields.
  YAML::Node raw(const std::string& key);

  /// Range checks that name the field.
  double number_in(const std::string& key, double lo, double hi, bool lo_open, bool hi_open);
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
  [[noreturn]] void fail_here(const std::string& what) const;

  /// Throws config_error naming the first key that was never read.
  void finish() const;

 private:
  YAML::Node get(const std::string& key);
  std::string field(const std::string& key) const;

  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

struct Document {
  std::string source;  // exact config text
  std::string directory;
  YAML::Node root;
};

Document load_document(const std::string& path);

}  // namespace subdrift::cli
