#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "arraymc/invariants.hpp"
#include "arraymc/system.hpp"

namespace arraymc {

struct RunConfig {
  std::string mode = "breach";  // breach | breach+inv | sinv
  Budget budget;
  Budget inv_budget{6, 200};
  AbsStrategy abstraction = AbsStrategy::Index;
  std::vector<std::string> sig_arrays;
  int oracle_check = 0;  // cross-validate at this size; 0 = off
  std::string dump_dir;
  bool stats = true;
  unsigned seed = 0;

  void validate() const;
};

/// Run one safety problem; prints the verdict line, the trace on UNSAFE, and
/// the stats line. Exit code: 0 safe, 1 unsafe, 2 unknown, 3 error.
int run(const SystemSpec& spec, const RunConfig& cfg, std::ostream& out);

struct BenchRow {
  std::string name;
  std::string verdict;
  RunStats stats;
  std::string error;
};

/// Run every .spec file in the directory; per-file errors are reported and the
/// run continues. Returns the table; `csv_path` optionally receives the rows.
std::vector<BenchRow> bench(const std::string& dir, const RunConfig& cfg, std::ostream& out,
                            const std::string& csv_path = "");

}  // namespace arraymc
