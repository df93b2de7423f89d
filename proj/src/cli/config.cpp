#include "subdrift/cli/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace subdrift::cli {

Section::Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
  if (!node_.IsMap()) {
    std::ostringstream os;
    os << "line " << line() << ", field " << (path_.empty() ? "<root>" : path_)
       << ": expected a mapping";
    throw config_error(os.str());
  }
}

int Section::line() const { return node_.Mark().line + 1; }

bool Section::has(const std::string& key) const { return static_cast<bool>(node_[key]); }

std::string Section::field(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

void Section::fail(const std::string& key, const std::string& what) const {
  const auto n = node_[key];
  const int l = n ? n.Mark().line + 1 : line();
  std::ostringstream os;
  os << "line " << l << ", field " << field(key) << ": " << what;
  throw config_error(os.str());
}

void Section::fail_here(const std::string& what) const {
  std::ostringstream os;
  os << "line " << line() << ", field " << (path_.empty() ? "<root>" : path_) << ": " << what;
  throw config_error(os.str());
}

YAML::Node Section::get(const std::string& key) {
  used_.insert(key);
  auto n = node_[key];
  if (!n) fail(key, "required field is missing");
  return n;
}

double Section::number(const std::string& key) {
  auto n = get(key);
  try {
    const double v = n.as<double>();
    if (!std::isfinite(v)) fail(key, "must be finite");
    return v;
  } catch (const YAML::Exception&) {
    fail(key, "expected a number");
  }
}

double Section::number(const std::string& key, double fallback) {
  used_.insert(key);
  return has(key) ? number(key) : fallback;
}

std::int64_t Section::integer(const std::string& key) {
  auto n = get(key);
  try {
    return n.as<std::int64_t>();
  } catch (const YAML::Exception&) {
    // Accept 1e5-style literals when they denote integers.
    try {
      const double v = n.as<double>();
      if (std::floor(v) == v && std::abs(v) < 9e18) return static_cast<std::int64_t>(v);
    } catch (const YAML::Exception&) {
    }
    fail(key, "expected an integer");
  }
}

std::int64_t Section::integer(const std::string& key, std::int64_t fallback) {
  used_.insert(key);
  return has(key) ? integer(key) : fallback;
}

std::uint64_t Section::seed(const std::string& key) {
  auto n = get(key);
  try {
    return n.as<std::uint64_t>();
  } catch (const YAML::Exception&) {
    fail(key, "expected a non-negative 64-bit integer");
  }
}

std::string Section::text(const std::string& key) {
  auto n = get(key);
  if (!n.IsScalar()) fail(key, "expected a string");
  return n.as<std::string>();
}

std::string Section::text(const std::string& key, const std::string& fallback) {
  used_.insert(key);
  return has(key) ? text(key) : fallback;
}

bool Section::flag(const std::string& key, bool fallback) {
  used_.insert(key);
  if (!has(key)) return fallback;
  try {
    return node_[key].as<bool>();
  } catch (const YAML::Exception&) {
    fail(key, "expected true or false");
  }
}

std::vector<double> Section::numbers(const std::string& key) {
  auto n = get(key);
  if (!n.IsSequence()) fail(key, "expected a list of numbers");
  try {
    return n.as<std::vector<double>>();
  } catch (const YAML::Exception&) {
    fail(key, "expected a list of numbers");
  }
}

std::vector<std::int64_t> Section::integers(const std::string& key) {
  auto n = get(key);
  if (!n.IsSequence()) fail(key, "expected a list of integers");
  try {
    return n.as<std::vector<std::int64_t>>();
  } catch (const YAML::Exception&) {
    fail(key, "expected a list of integers");
  }
}

Section Section::sub(const std::string& key) {
  auto n = get(key);
  if (!n.IsMap()) fail(key, "expected a mapping");
  return Section(n, field(key));
}

std::optional<Section> Section::maybe_sub(const std::string& key) {
  used_.insert(key);
  if (!has(key)) return std::nullopt;
  return sub(key);
}

YAML::Node Section::raw(const std::string& key) { return get(key); }

double Section::number_in(const std::string& key, double lo, double hi, bool lo_open,
                          bool hi_open) {
  const double v = number(key);
  const bool ok = (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
  if (!ok) {
    std::ostringstream os;
    os << "value " << v << " outside " << (lo_open ? "(" : "[") << lo << ", ";
    if (hi == std::numeric_limits<double>::infinity()) {
      os << "inf)";
    } else {
      os << hi << (hi_open ? ")" : "]");
    }
    fail(key, os.str());
  }
  return v;
}

void Section::finish() const {
  for (const auto& kv : node_) {
    const auto key = kv.first.as<std::string>();
    if (!used_.count(key)) {
      std::ostringstream os;
      os << "line " << kv.first.Mark().line + 1 << ", field " << field(key) << ": unknown key";
      throw config_error(os.str());
    }
  }
}

Document load_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  Document d;
  d.source = ss.str();
  d.directory = std::filesystem::absolute(path).parent_path().string();
  try {
    d.root = YAML::Load(d.source);
  } catch (const YAML::ParserException& e) {
    throw config_error("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!d.root.IsMap()) throw config_error("config must be a mapping at the top level");
  return d;
}

}  // namespace subdrift::cli
