// esplan: storage siting and sizing from the command line.
//
// exit codes: 0 ok, 1 bad input, 2 solver or convergence failure, 3 exactness failure

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "esplan/config.hpp"
#include "esplan/report.hpp"

using namespace esplan;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInput = 1, kSolver = 2, kExact = 3 };

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "study config (JSON)")->required()->check(CLI::ExistingFile);
  app->add_option("--set", c.sets, "override a config key, e.g. planner.benders_gap=1e-3");
  app->add_option("-o,--output", c.out, "output directory (overrides output_dir)");
}

StudyConfig load(const Common& c) {
  json doc = read_config_file(c.config);
  for (const auto& s : c.sets) apply_override(doc, s);
  auto cfg = parse_config(doc, fs::path(c.config).parent_path());
  if (!c.out.empty()) cfg.output_dir = c.out;
  fs::create_directories(cfg.output_dir);
  return cfg;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// timestamps live only here so the other outputs stay byte-identical
void write_meta(const fs::path& dir, const std::string& command) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  write_file(dir / "meta.json", json{{"command", command}, {"finished_utc", buf}}.dump(1) + "\n");
}

std::string day_file(const std::string& stem, const ScenarioSet& s) {
  return stem + "_day" + std::to_string(s.day_type) + ".json";
}

int cmd_normalize(const std::string& in, const std::string& out) {
  const auto net = load_network(in);
  const std::string text = write_network(net) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return kOk;
}

int cmd_generate(const Common& c) {
  const auto cfg = load(c);
  if (cfg.day_types.empty()) throw ConfigError("generate-scenarios needs day_types in the config");
  for (const auto& set : generate_study_scenarios(cfg)) {
    const auto path = cfg.output_dir / day_file("scenarios", set);
    write_file(path, write_scenarios_json(set) + "\n");
    std::cout << path.string() << ": " << set.size() << " scenarios\n";
  }
  write_meta(cfg.output_dir, "generate-scenarios");
  return kOk;
}

int cmd_reduce(const Common& c) {
  auto cfg = load(c);
  cfg.reduce = true;
  const auto s = load_study_scenarios(cfg);
  std::ostringstream trace;
  trace << "day,k,delta\n";
  int kmax = 0;
  for (std::size_t i = 0; i < s.sets.size(); ++i) {
    const auto& r = s.reductions[i];
    for (std::size_t k = 0; k < r.trace.size(); ++k) {
      trace << s.sets[i].day_type << "," << k + 1 << "," << r.trace[k] << "\n";
    }
    write_file(cfg.output_dir / day_file("reduced", s.sets[i]), write_scenarios_json(s.sets[i]) + "\n");
    std::cout << "day-type " << s.sets[i].day_type << ": k = " << r.k << ", delta = " << r.trace.back();
    if (r.skipped) std::cout << " (" << r.skipped << " degenerate coordinates skipped)";
    std::cout << "\n";
    kmax = std::max(kmax, r.k);
  }
  std::cout << "largest k over day-types: " << kmax << "\n";
  write_file(cfg.output_dir / "delta_trace.csv", trace.str());
  write_meta(cfg.output_dir, "reduce-scenarios");
  return kOk;
}

int cmd_plan(const Common& c, bool block1_only, bool quiet) {
  auto cfg = load(c);
  if (block1_only) cfg.planner.block1_only = true;
  if (!quiet) cfg.planner.log = [](const std::string& s) { std::cerr << s << "\n"; };
  const auto net = load_study_network(cfg);
  const auto s = load_study_scenarios(cfg);
  for (std::size_t i = 0; i < s.reductions.size(); ++i) {
    if (!quiet) std::cerr << "day-type " << s.sets[i].day_type << ": " << s.sets[i].size() << " scenarios after reduction\n";
  }
  const auto rep = plan(net, s.sets, cfg.planner);
  const fs::path dir = cfg.output_dir;
  if (cfg.planner.block1_only) {
    const json doc = block1_json(rep.block1, net, s.sets);
    write_file(dir / "block1.json", doc.dump(1) + "\n");
    const auto text = report_text(doc);
    write_file(dir / "report.txt", text);
    std::cout << text;
    write_meta(dir, "plan --block1-only");
    return kOk;
  }
  const json doc = report_json(rep, net, s.sets);
  write_file(dir / "report.json", doc.dump(1) + "\n");
  const auto text = report_text(doc);
  write_file(dir / "report.txt", text);
  const DispatchSummary& shown = net.candidates.empty() ? rep.without_ess : rep.with_ess;
  write_file(dir / "dispatch.csv", dispatch_csv(shown, net));
  write_file(dir / "solution.json", solution_json(shown).dump() + "\n");
  if (!net.candidates.empty()) write_file(dir / "benders.csv", benders_csv(rep.benders, net));
  if (rep.has_baseline) write_file(dir / "dispatch_without_ess.csv", dispatch_csv(rep.without_ess, net));
  write_meta(dir, "plan");
  std::cout << text;
  if (!net.candidates.empty() && !rep.benders.converged) return kSolver;
  return rep.exactness_pass ? kOk : kExact;
}

int cmd_verify(const std::string& network, const std::string& solution, double cone_tol, double oracle_tol) {
  const auto net = load_network(network);
  const auto days = parse_solution(json::parse(read_file(solution)));
  PlannerOptions opt;
  opt.cone_tol = cone_tol;
  opt.oracle_tol = oracle_tol;
  bool pass = true;
  for (std::size_t d = 0; d < days.size(); ++d) {
    const auto r = check_flows(net, days[d], opt);
    std::cout << exactness_text(r, "day " + std::to_string(d));
    pass = pass && r.pass;
  }
  return pass ? kOk : kExact;
}

int cmd_report(const std::string& path) {
  std::cout << report_text(json::parse(read_file(path)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Storage siting and sizing for radial feeders"};
  app.require_subcommand(1);

  std::string norm_in, norm_out;
  auto* normalize = app.add_subcommand("normalize", "convert a network file to per-unit form");
  normalize->add_option("network", norm_in, "network JSON")->required()->check(CLI::ExistingFile);
  normalize->add_option("-o,--output", norm_out, "write here instead of stdout");

  Common gen, red, pl;
  auto* generate = app.add_subcommand("generate-scenarios", "sample scenarios for each day-type");
  add_common(generate, gen);
  auto* reduce = app.add_subcommand("reduce-scenarios", "K-medoids reduction with the CDF distance check");
  add_common(reduce, red);

  bool block1_only = false, quiet = false;
  auto* planc = app.add_subcommand("plan", "run the full planning pipeline");
  add_common(planc, pl);
  planc->add_flag("--block1-only", block1_only, "stop after the lossless siting block");
  planc->add_flag("-q,--quiet", quiet, "no progress lines on stderr");

  std::string ver_net, ver_sol;
  double cone_tol = PlannerOptions{}.cone_tol, oracle_tol = PlannerOptions{}.oracle_tol;
  auto* verify = app.add_subcommand("verify", "re-check a solved case against the exact power flow");
  verify->add_option("--network", ver_net, "network JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("--solution", ver_sol, "solution.json written by plan")->required()->check(CLI::ExistingFile);
  verify->add_option("--cone-tol", cone_tol, "relative cone slack limit");
  verify->add_option("--oracle-tol", oracle_tol, "oracle residual limit, pu");

  std::string rep_in;
  auto* report = app.add_subcommand("report", "print a saved report as a table");
  report->add_option("report", rep_in, "report.json or block1.json")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInput;
  }

  try {
    if (*normalize) return cmd_normalize(norm_in, norm_out);
    if (*generate) return cmd_generate(gen);
    if (*reduce) return cmd_reduce(red);
    if (*planc) return cmd_plan(pl, block1_only, quiet);
    if (*verify) return cmd_verify(ver_net, ver_sol, cone_tol, oracle_tol);
    if (*report) return cmd_report(rep_in);
  } catch (const PlanError& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind) {
      case FailureKind::kValidation: return kInput;
      case FailureKind::kSolver: return kSolver;
      case FailureKind::kExactness: return kExact;
    }
  } catch (const ReductionError& e) {
    std::cerr << "error: scenario reduction: " << e.what() << "\n";
    return kSolver;
  } catch (const PfError& e) {
    std::cerr << "error: power flow: " << e.what() << "\n";
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const NetworkError& e) {
    std::cerr << "error: network: " << e.what() << "\n";
    return kInput;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
  return kOk;
}
