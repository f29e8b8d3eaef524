#pragma once

// Experiment driver behind the CLI. Every output file embeds the config
// hash; reruns with the same config produce byte-identical CSVs.

#include <string>
#include <vector>

#include "dekrr/config.hpp"

namespace dekrr {

// Single experiment: for each seed and method, partition -> allocate ->
// select features -> exchange -> iterate -> evaluate. Writes into
// <out_dir>/<name>/: results.csv, roundlog_<method>_seed<seed>.csv,
// theta_<method>_seed<seed>.{bin,json}, manifest.json. Refuses an existing
// directory unless force. Throws on any failure.
void cmd_run(const ExperimentConfig& cfg, bool force);

// Feature-budget sweep: runs the cmd_run pipeline for each (Dbar, method,
// seed) and writes results.csv plus the seed-aggregated sweep.csv
// (mean/std of RSE, per-round traffic) into <out_dir>/<name>/.
void cmd_sweep(ExperimentConfig cfg, const std::vector<Index>& dbars,
               const std::vector<Method>& methods, bool force);

// Re-hashes the canonical config recorded in <dir>/manifest.json and checks
// that every CSV header comment and JSON manifest in <dir> carries that
// hash. Returns the number of files checked; throws on any mismatch.
int cmd_verify(const std::string& dir);

}  // namespace dekrr
