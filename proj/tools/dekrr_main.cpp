// Command-line front end: run / sweep / verify.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dekrr/harness.hpp"

using namespace dekrr;

int main(int argc, char** argv) {
  CLI::App app{"desk-scale lab for decentralized kernel ridge regression\n"
               "with data-dependent random features"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  bool force = false;
  std::uint64_t seed_offset = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "experiment config file")->required();
    sub->add_flag("--force", force, "overwrite an existing output directory");
    sub->add_option("--out", out_override, "override the configured output directory");
    sub->add_option("--seed-offset", seed_offset,
                    "value added to every configured seed");
  };

  CLI::App* sub_run =
      app.add_subcommand("run", "single experiment over all methods and seeds");
  add_common(sub_run);

  CLI::App* sub_sweep = app.add_subcommand("sweep", "feature-budget sweep");
  add_common(sub_sweep);
  std::vector<long long> dbar_list;
  std::vector<std::string> method_list;
  sub_sweep->add_option("--dbar", dbar_list, "feature budgets to sweep")
      ->required()
      ->delimiter(',');
  sub_sweep
      ->add_option("--methods", method_list,
                   "methods to compare (default: the configured ones)")
      ->delimiter(',');

  std::string verify_dir;
  CLI::App* sub_verify = app.add_subcommand(
      "verify", "recompute the config hash of an output directory and check "
                "every file carries it");
  sub_verify->add_option("dir", verify_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(sub_verify)) {
      int n = cmd_verify(verify_dir);
      std::cout << "verified " << n << " files in " << verify_dir << "\n";
      return 0;
    }

    ExperimentConfig cfg = parse_config(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    for (auto& s : cfg.seeds) s += seed_offset;

    if (app.got_subcommand(sub_run)) {
      std::cout << "effective config (hash " << config_hash(cfg) << "):\n";
      for (const auto& line : canonical_lines(cfg)) std::cout << "  " << line << "\n";
      cmd_run(cfg, force);
      std::cout << "wrote " << cfg.out_dir << "/" << cfg.name << "\n";
    } else {
      std::vector<Index> dbars(dbar_list.begin(), dbar_list.end());
      std::vector<Method> methods;
      for (const auto& name : method_list) methods.push_back(method_from_name(name));
      cmd_sweep(cfg, dbars, methods, force);
      std::cout << "wrote " << cfg.out_dir << "/" << cfg.name << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
}
