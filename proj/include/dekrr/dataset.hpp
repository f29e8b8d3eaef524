#pragma once
// Tabular regression data: loading (CSV / libsvm), global normalization,
// and the three partition families used by the experiments (balanced,
// non-IID by sorted statistic, size-imbalanced).

#include <cstdint>
#include <string>
#include <vector>

#include "dekrr/common.hpp"

namespace dekrr {

enum class TableFormat { csv, libsvm };

struct RawDataset {
  Matrix x;  // N rows, d columns
  Vector y;  // length N
  std::string name;

  Index rows() const { return x.rows(); }
  Index dim() const { return x.cols(); }
};

// Per-column feature range and target range; enough to invert the transform.
struct ScalingRecord {
  Vector col_min, col_max;
  double y_min = 0, y_max = 0;
};

struct Dataset {
  Matrix x;  // every column scaled into [0,1]
  Vector y;  // scaled into [-1,1]
  ScalingRecord scaling;
  std::string name;

  Index rows() const { return x.rows(); }
  Index dim() const { return x.cols(); }
};

enum class PartitionMode { balanced, noniid_abs_y, noniid_x_norm, imbalanced };

struct Partition {
  PartitionMode mode = PartitionMode::balanced;
  std::vector<std::vector<Index>> node_rows;  // disjoint, union = all rows

  int J() const { return static_cast<int>(node_rows.size()); }
};

// One node's data: train/test halves, columns are samples (d x n).
struct Shard {
  int node = 0;
  Matrix x_train, x_test;
  RowVector y_train, y_test;

  Index n_train() const { return x_train.cols(); }
  Index n_test() const { return x_test.cols(); }
};

// CSV needs a header row and a target column named `target_column`;
// libsvm lines are "<target> idx:val ..." with 1-based indices, absent
// indices fill with 0. Malformed rows fail with their line number.
RawDataset load_table(const std::string& path, TableFormat format,
                      const std::string& target_column = "target");

// Column c maps through (v - min_c)/(max_c - min_c); constant columns map to
// 0. Targets map affinely onto [-1,1]. Statistics are computed over the full
// dataset before any split.
Dataset normalize(const RawDataset& raw);

// Inverse of `normalize` for one feature row vector; used to audit the
// scaling record.
Vector denormalize_row(const Dataset& ds, const Vector& row);
double denormalize_target(const Dataset& ds, double y);

// Seeded shuffle, then contiguous chunks of size floor(N/J) (+1 for the
// first N mod J nodes).
Partition partition_balanced(const Dataset& ds, int J, std::uint64_t seed);

// Sort rows by |y| (or ||x||_2) descending, then contiguous chunks with the
// balanced size formula. Deterministic: ties break by row index.
Partition partition_noniid(const Dataset& ds, int J, PartitionMode mode);

// Node j receives round(N * (2j-1) / J^2) rows (1-based j); the rounding
// residue lands on the last node. Rows are assigned in seeded-shuffled order.
Partition partition_imbalanced(const Dataset& ds, int J, std::uint64_t seed);

// Per node: seeded shuffle, then ceil(n/2) train rows, remainder test.
std::vector<Shard> split_train_test(const Partition& p, const Dataset& ds,
                                    std::uint64_t seed);

// JSON export of shard index lists, for external audit.
std::string partition_to_json(const Partition& p);

}  // namespace dekrr
