#include "arraymc/driver.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "arraymc/oracle.hpp"
#include "arraymc/parser.hpp"

namespace arraymc {

void RunConfig::validate() const {
  if (budget.max_depth <= 0 || budget.max_nodes <= 0 || inv_budget.max_depth <= 0 ||
      inv_budget.max_nodes <= 0)
    throw std::invalid_argument("budgets must be positive");
  if (mode != "breach" && mode != "breach+inv" && mode != "sinv")
    throw std::invalid_argument("unknown mode " + mode);
  if (mode == "breach+inv" &&
      (inv_budget.max_depth >= budget.max_depth || inv_budget.max_nodes >= budget.max_nodes))
    throw std::invalid_argument("invariant budget must be strictly below the main budget");
}

namespace {

struct OracleChecker {
  const SystemSpec& spec;
  Oracle oracle;
  int size;

  OracleChecker(const SystemSpec& s, int n) : spec(s), oracle(s), size(n) {}

  void check_preimage(const TransitionRule& t, const Cube& k, const ExistsI& pre) {
    for (const auto& cfg : oracle.enumerate_configurations(size)) {
      bool symbolic = oracle.eval(cfg, pre);
      bool semantic = false;
      for (const auto& s : oracle.step(cfg, t))
        if (oracle.eval(s, k.as_exists())) {
          semantic = true;
          break;
        }
      if (symbolic != semantic)
        throw std::runtime_error("pre-image mismatch against the oracle on transition " + t.name +
                                 " at " + cfg.str());
    }
  }

  void check_verdict(const ReachResult& r) {
    if (r.verdict == ReachResult::Verdict::Unsafe) {
      if (!oracle.replay(r.trace, size))
        throw std::runtime_error("unsafe trace failed oracle replay");
    } else if (r.verdict == ReachResult::Verdict::Safe) {
      if (oracle.forward_reach_unsafe(size, 6))
        throw std::runtime_error("safe verdict contradicted by oracle forward search");
    }
  }
};

void print_stats(std::ostream& out, const RunStats& st) {
  out << "d=" << st.depth << " n=" << st.nodes << " del=" << st.deleted << " smt=" << st.smt
      << " inv=" << st.invariants << " time=" << std::fixed << std::setprecision(3) << st.seconds
      << "\n";
}

}  // namespace

int run(const SystemSpec& spec, const RunConfig& cfg, std::ostream& out) {
  try {
    cfg.validate();
    SmtEngine engine(spec.sig);
    if (!cfg.dump_dir.empty()) {
      std::filesystem::create_directories(cfg.dump_dir);
      engine.set_dump_dir(cfg.dump_dir);
    }

    std::unique_ptr<OracleChecker> checker;
    BreachCallbacks cb;
    if (cfg.oracle_check > 0) {
      if (!spec.sig.index->oracle_enumerable())
        throw std::runtime_error("oracle cross-check unsupported for index theory " +
                                 spec.sig.index->name());
      checker = std::make_unique<OracleChecker>(spec, cfg.oracle_check);
      cb.on_preimage = [&checker](const TransitionRule& t, const Cube& k, const ExistsI& pre) {
        checker->check_preimage(t, k, pre);
      };
    }

    if (cfg.mode == "sinv") {
      SinvCoverMode mode = cfg.abstraction == AbsStrategy::Index ? SinvCoverMode::IndexAbstraction
                                                                 : SinvCoverMode::Identity;
      SinvResult r = sinv(spec, engine, spec.unsafe, mode, cfg.budget, cfg.inv_budget);
      switch (r.status) {
        case SinvResult::Status::Success:
          out << "SAFE\n";
          if (cfg.stats) print_stats(out, r.stats);
          return 0;
        case SinvResult::Status::Failure:
          // with the identity cover the dual is exact; abstraction covers only
          // witness that this cover choice failed
          out << (mode == SinvCoverMode::Identity ? "UNSAFE\n" : "UNKNOWN(cover)\n");
          if (cfg.stats) print_stats(out, r.stats);
          return mode == SinvCoverMode::Identity ? 1 : 2;
        case SinvResult::Status::BudgetExceeded:
          out << "UNKNOWN(budget)\n";
          if (cfg.stats) print_stats(out, r.stats);
          return 2;
      }
    }

    ReachResult r;
    if (cfg.mode == "breach+inv") {
      BreachInvOptions opts;
      opts.main = cfg.budget;
      opts.inv = cfg.inv_budget;
      opts.choose_cfg.strategy = cfg.abstraction;
      opts.choose_cfg.sig_arrays = cfg.sig_arrays;
      r = breach_plus_inv(spec, engine, spec.unsafe, opts, cb);
    } else {
      BreachEngine eng(spec, engine);
      r = eng.run(spec.unsafe, cfg.budget, cb);
    }
    if (checker) checker->check_verdict(r);

    switch (r.verdict) {
      case ReachResult::Verdict::Safe:
        out << "SAFE\n";
        if (cfg.stats) print_stats(out, r.stats);
        return 0;
      case ReachResult::Verdict::Unsafe: {
        out << "UNSAFE\n";
        out << "trace:";
        for (const auto& t : r.trace) out << " " << t;
        out << "\n";
        if (cfg.stats) print_stats(out, r.stats);
        return 1;
      }
      case ReachResult::Verdict::BudgetExceeded:
        out << "UNKNOWN(budget)\n";
        if (cfg.stats) print_stats(out, r.stats);
        return 2;
    }
    return 3;
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return 3;
  }
}

namespace {

// A corpus file may pin its own options on a line `# bench: --flag val ...`.
void apply_bench_options(const std::string& text, RunConfig& cfg) {
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    auto at = line.find("# bench:");
    if (at == std::string::npos) continue;
    std::istringstream opts(line.substr(at + 8));
    std::string flag;
    while (opts >> flag) {
      std::string val;
      if (flag == "--mode" && opts >> val) cfg.mode = val;
      else if (flag == "--max-depth" && opts >> val) cfg.budget.max_depth = std::stoi(val);
      else if (flag == "--max-nodes" && opts >> val) cfg.budget.max_nodes = std::stol(val);
      else if (flag == "--inv-depth" && opts >> val) cfg.inv_budget.max_depth = std::stoi(val);
      else if (flag == "--inv-nodes" && opts >> val) cfg.inv_budget.max_nodes = std::stol(val);
      else if (flag == "--abstraction" && opts >> val)
        cfg.abstraction = val == "signature" ? AbsStrategy::Signature
                        : val == "both"      ? AbsStrategy::Both
                                             : AbsStrategy::Index;
    }
    return;
  }
}

}  // namespace

std::vector<BenchRow> bench(const std::string& dir, const RunConfig& cfg, std::ostream& out,
                            const std::string& csv_path) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".spec") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<BenchRow> rows;
  for (const auto& f : files) {
    BenchRow row;
    row.name = f.stem().string();
    try {
      std::ifstream in(f);
      std::stringstream buf;
      buf << in.rdbuf();
      std::string text = buf.str();
      SystemSpec spec = parse_spec(text);
      RunConfig file_cfg = cfg;
      apply_bench_options(text, file_cfg);
      std::ostringstream sink;
      int rc = run(spec, file_cfg, sink);
      row.verdict = rc == 0 ? "SAFE" : rc == 1 ? "UNSAFE" : rc == 2 ? "UNKNOWN" : "ERROR";
      // recover stats from the sink's stats line
      std::string s = sink.str();
      auto pos = s.find("d=");
      if (pos != std::string::npos) {
        std::istringstream st(s.substr(pos));
        std::string tok;
        while (st >> tok) {
          auto eq = tok.find('=');
          if (eq == std::string::npos) continue;
          std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
          if (k == "d") row.stats.depth = std::stoi(v);
          else if (k == "n") row.stats.nodes = std::stol(v);
          else if (k == "del") row.stats.deleted = std::stol(v);
          else if (k == "smt") row.stats.smt = std::stol(v);
          else if (k == "inv") row.stats.invariants = std::stoi(v);
          else if (k == "time") row.stats.seconds = std::stod(v);
        }
      }
      if (rc == 3) row.error = s;
    } catch (const std::exception& e) {
      row.verdict = "ERROR";
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }

  out << std::left << std::setw(18) << "problem" << std::setw(10) << "verdict" << std::right
      << std::setw(5) << "d" << std::setw(7) << "n" << std::setw(6) << "del" << std::setw(9)
      << "smt" << std::setw(6) << "inv" << std::setw(10) << "time" << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(18) << r.name << std::setw(10) << r.verdict << std::right
        << std::setw(5) << r.stats.depth << std::setw(7) << r.stats.nodes << std::setw(6)
        << r.stats.deleted << std::setw(9) << r.stats.smt << std::setw(6) << r.stats.invariants
        << std::setw(10) << std::fixed << std::setprecision(3) << r.stats.seconds << "\n";
    if (!r.error.empty()) out << "  ! " << r.error << "\n";
  }

  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    csv << "problem,verdict,d,n,del,smt,inv,time\n";
    for (const auto& r : rows)
      csv << r.name << "," << r.verdict << "," << r.stats.depth << "," << r.stats.nodes << ","
          << r.stats.deleted << "," << r.stats.smt << "," << r.stats.invariants << ","
          << std::fixed << std::setprecision(3) << r.stats.seconds << "\n";
  }
  return rows;
}

}  // namespace arraymc
