#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bqms/cli.hpp"

namespace {

bool parse_tol(const std::vector<std::string>& items, std::map<std::string, double>& out) {
  for (const std::string& kv : items) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "InputError: --tol expects KEY=VAL, got " << kv << "\n";
      return false;
    }
    try {
      out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      std::cerr << "InputError: bad tolerance value in " << kv << "\n";
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bimodule quantum Markov semigroup toolkit"};
  app.require_subcommand(1);

  std::string scenario, out_dir;
  std::vector<std::string> tols;
  unsigned long seed = 0;

  CLI::App* run = app.add_subcommand("run", "Run a scenario file");
  run->add_option("scenario", scenario, "Scenario JSON")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--tol", tols, "Tolerance override KEY=VAL")->take_all();
  CLI::Option* seed_opt = run->add_option("--seed", seed, "Seed for random probes");

  CLI::App* verify = app.add_subcommand("verify-paper", "Run the built-in suite of reference instances");
  verify->add_option("--out", out_dir, "Also write the report here");
  verify->add_option("--tol", tols, "Tolerance override KEY=VAL")->take_all();
  CLI::Option* vseed_opt = verify->add_option("--seed", seed, "Seed for random probes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : bqms::cli::InputFailure;
  }

  bqms::cli::RunOptions opts;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  if (!parse_tol(tols, opts.tolerances)) return bqms::cli::InputFailure;
  if (run->parsed()) {
    if (*seed_opt) opts.seed = seed;
    return bqms::cli::run_file(scenario, opts, std::cout, std::cerr);
  }
  if (*vseed_opt) opts.seed = seed;
  return bqms::cli::verify_paper_main(opts, std::cout, std::cerr);
}
