#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "tsam/version.hpp"

using namespace tsam;
using namespace tsam::cli;

int main(int argc, char** argv) {
  CLI::App app{"Temporal link prediction on directed snapshot sequences"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config;
  Overrides o;
  std::uint64_t seed = 0;
  std::string out;
  int precision = 64;
  app.add_option("--config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "base seed; repetition r uses seed + r");
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* prec_opt = app.add_option("--precision", precision, "32 or 64")->check(CLI::IsMember({32, 64}));
  app.add_flag("--deterministic", o.deterministic, "single worker");

  auto* ingest = app.add_subcommand("ingest", "parse and slice the edge list, write snapshot cache and stats");
  auto* stats = app.add_subcommand("stats", "print network statistics");
  auto* train_eval = app.add_subcommand("train-eval", "train per anchor and evaluate on the next snapshot");
  auto* ablate = app.add_subcommand("ablate", "repeat train-eval across values of one setting");
  std::string axis;
  std::vector<std::string> values;
  ablate->add_option("--axis", axis, "transforms, node_heads or time_heads")->required();
  ablate->add_option("--values", values, "values; transform sets as comma lists, 'none' for no feature")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (*seed_opt) o.seed = seed;
  if (*out_opt) o.out = out;
  if (*prec_opt) o.precision = precision;

  try {
    const RunConfig cfg = resolve(config, o);
    if (*ingest) return cmd_ingest(cfg, std::cout, std::cerr);
    if (*stats) return cmd_stats(cfg, std::cout, std::cerr);
    if (*train_eval) return cmd_train_eval(cfg, std::cerr);
    if (*ablate) return cmd_ablate(cfg, parse_axis(axis), values, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}
