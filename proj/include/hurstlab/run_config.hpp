#pragma once

#include <cstdint>
#include <string>

namespace hurstlab {

// Resolved configuration of one CLI invocation. Every run serializes this
// next to its outputs so results stay reproducible from the files alone;
// to_json / from_json round-trip losslessly.
struct RunConfig {
  std::string subcommand;
  std::string case_name = "H1";
  int n = 1024;
  double alpha = 0.3;
  std::string estimator = "qv";
  int p = 5;
  int reps = 50;
  int n_fields = 10;
  int field = 0;  // which random Hurst trajectory a simulate run uses
  std::uint64_t master_seed = 1;
  std::string preset;
  std::string input;
  std::string out;
  std::string t_grid = "paper";
  std::string what;  // tables subcommand selector
  int threads = 0;   // 0 = library default
  std::string table_cache;

  bool operator==(const RunConfig&) const = default;

  std::string to_json(int indent = 2) const;
  static RunConfig from_json(const std::string& text);
};

}  // namespace hurstlab
