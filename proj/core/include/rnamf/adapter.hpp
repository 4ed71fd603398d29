#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rnamf/io.hpp"

namespace rnamf {

// External simulator: `command` runs under /bin/sh -c once per evaluation. It
// receives {"level": l, "x": [...]} as one line on stdin and must print
// {"y": value} as one line on stdout, then exit 0. Failures throw AdapterError.
struct AdapterSpec {
  std::string command;
  double timeout_s = 300.0;
};

double run_adapter(const AdapterSpec& spec, int level, const Eigen::VectorXd& x);

// Memoizes evaluations by (level, full-precision x). One spec serves all
// levels; otherwise spec l-1 serves level l.
class CachedSimulator {
 public:
  explicit CachedSimulator(std::vector<AdapterSpec> specs);

  double operator()(int level, const Eigen::VectorXd& x);

  std::size_t invocations() const { return invocations_; }
  std::size_t hits() const { return hits_; }
  std::size_t size() const { return cache_.size(); }

  // {"entries": [{"level", "x", "y"}...]}. Loading merges; a missing file is empty.
  void load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  static std::string key(int level, const Eigen::VectorXd& x);

 private:
  struct Entry {
    int level;
    Eigen::VectorXd x;
    double y;
  };
  std::vector<AdapterSpec> specs_;
  std::map<std::string, Entry> cache_;
  std::size_t invocations_ = 0;
  std::size_t hits_ = 0;
};

}  // namespace rnamf
