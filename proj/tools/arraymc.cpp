#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "arraymc/driver.hpp"
#include "arraymc/parser.hpp"

using namespace arraymc;

namespace {

SystemSpec load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str());
}

void add_run_flags(CLI::App* cmd, RunConfig& cfg, std::string& abstraction) {
  cmd->add_option("--mode", cfg.mode, "breach | breach+inv | sinv");
  cmd->add_option("--max-depth", cfg.budget.max_depth, "tableau depth budget");
  cmd->add_option("--max-nodes", cfg.budget.max_nodes, "tableau node budget");
  cmd->add_option("--inv-depth", cfg.inv_budget.max_depth, "candidate verification depth budget");
  cmd->add_option("--inv-nodes", cfg.inv_budget.max_nodes, "candidate verification node budget");
  cmd->add_option("--abstraction", abstraction, "index | signature | both");
  cmd->add_option("--sig-arrays", cfg.sig_arrays, "arrays projected by signature abstraction")
      ->delimiter(',');
  cmd->add_option("--oracle-check", cfg.oracle_check,
                  "cross-validate pre-images and the verdict at this model size");
  cmd->add_option("--dump-smt2", cfg.dump_dir, "dump every top-level check as SMT-LIB2");
  cmd->add_flag("--stats,!--no-stats", cfg.stats, "print the stats line");
  cmd->add_option("--seed", cfg.seed, "seed for randomized modes (tests)");
}

AbsStrategy parse_abstraction(const std::string& s) {
  if (s == "signature") return AbsStrategy::Signature;
  if (s == "both") return AbsStrategy::Both;
  return AbsStrategy::Index;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arraymc: backward-reachability model checker for array-based systems"};
  app.require_subcommand(1);

  std::string file, dir, csv;
  RunConfig cfg;
  std::string abstraction = "index";

  CLI::App* check = app.add_subcommand("check", "decide safety of one system");
  check->add_option("file", file, "system description")->required();
  add_run_flags(check, cfg, abstraction);

  CLI::App* bench_cmd = app.add_subcommand("bench", "run every .spec in a directory");
  bench_cmd->add_option("dir", dir, "corpus directory")->required();
  bench_cmd->add_option("--csv", csv, "write machine-readable rows here");
  add_run_flags(bench_cmd, cfg, abstraction);

  CLI::App* print_cmd = app.add_subcommand("print", "parse and pretty-print a system");
  print_cmd->add_option("file", file, "system description")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 3 : 0;
  }

  cfg.abstraction = parse_abstraction(abstraction);

  try {
    if (check->parsed()) {
      SystemSpec spec = load(file);
      return run(spec, cfg, std::cout);
    }
    if (bench_cmd->parsed()) {
      bench(dir, cfg, std::cout, csv);
      return 0;
    }
    if (print_cmd->parsed()) {
      SystemSpec spec = load(file);
      std::cout << print_spec(spec);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
