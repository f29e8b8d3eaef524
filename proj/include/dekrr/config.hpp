#pragma once

// Flat key-value experiment configuration: strict parsing, explicit defaults,
// and a canonical hash so paired comparisons can prove they ran the same
// settings.

#include <cstdint>
#include <string>
#include <vector>

#include "dekrr/common.hpp"
#include "dekrr/dataset.hpp"
#include "dekrr/eval.hpp"
#include "dekrr/features.hpp"
#include "dekrr/parallel.hpp"
#include "dekrr/simulator.hpp"

namespace dekrr {

struct ExperimentConfig {
  // data
  std::string dataset;          // path to the table
  TableFormat format = TableFormat::csv;
  std::string target = "target";  // csv target column
  // network
  int J = 0;
  int ring_k = 4;               // used when `edges` is empty
  std::string edges;            // optional edge-list path (overrides ring_k)
  PartitionMode partition = PartitionMode::balanced;
  // model
  double lambda = 0;
  double sigma = 0;
  double c_nei = -1;            // absolute; < 0 means "use c_nei_scale * N_train"
  double c_nei_scale = 1.0;
  double c_self_mult = 5.0;
  MappingKind mapping = MappingKind::cos_with_phase;
  // features
  Index dbar = 0;               // average feature count; 0 when d_js given
  std::vector<Index> d_js;      // explicit per-node counts; empty when dbar given
  AllocationStrategy allocation = AllocationStrategy::equal;
  Index d0_ratio = 20;
  // runs
  std::vector<std::uint64_t> seeds;
  double epsilon = 1e-6;
  int kmax = 2000;
  std::vector<Method> methods{Method::dekrr_ddrf};
  Exec exec = Exec::parallel;
  // output
  std::string out_dir;
  std::string name;             // defaults to the config file stem
};

// Strict parse: one `key = value` per line, `#` comments, unknown/duplicate
// keys rejected with line numbers, referenced files must exist.
ExperimentConfig parse_config(const std::string& path);

// Canonical `key=value` lines (sorted, defaults included, out_dir excluded)
// that feed the hash. Seeds are listed after any --seed-offset is applied.
std::vector<std::string> canonical_lines(const ExperimentConfig& cfg);

// FNV-1a over the canonical lines, rendered as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

const char* partition_name(PartitionMode m);
const char* mapping_name(MappingKind m);
const char* allocation_name(AllocationStrategy a);
const char* exec_name(Exec e);
const char* format_name(TableFormat f);

}  // namespace dekrr
