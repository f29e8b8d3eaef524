#include "dekrr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dekrr/rng.hpp"

namespace dekrr {
namespace {

double parse_double(std::string_view tok, const std::string& where) {
  double v;
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto res = std::from_chars(b, e, v);
  require(res.ec == std::errc() && res.ptr == e,
          "parse error (" + where + "): not a number: '" + std::string(tok) + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

RawDataset load_csv(const std::string& path, const std::string& target_column) {
  std::ifstream in(path);
  require(in.good(), "load_table: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "load_table: empty file " + path);
  auto header = split_csv_line(line);
  Index target_idx = -1;
  for (Index i = 0; i < static_cast<Index>(header.size()); ++i)
    if (trim(header[i]) == target_column) target_idx = i;
  require(target_idx >= 0,
          "load_table: target column '" + target_column + "' not found in header");
  const Index width = static_cast<Index>(header.size());
  require(width >= 2, "load_table: need at least one feature column besides the target");

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto toks = split_csv_line(line);
    require(static_cast<Index>(toks.size()) == width,
            "load_table: line " + std::to_string(lineno) + " has " +
                std::to_string(toks.size()) + " fields, expected " + std::to_string(width));
    std::vector<double> vals(width);
    for (Index i = 0; i < width; ++i)
      vals[i] = parse_double(trim(toks[i]), "line " + std::to_string(lineno));
    rows.push_back(std::move(vals));
  }
  require(!rows.empty(), "load_table: no data rows in " + path);

  RawDataset raw;
  const Index N = static_cast<Index>(rows.size());
  const Index d = width - 1;
  raw.x.resize(N, d);
  raw.y.resize(N);
  for (Index r = 0; r < N; ++r) {
    Index c = 0;
    for (Index i = 0; i < width; ++i) {
      if (i == target_idx)
        raw.y(r) = rows[r][i];
      else
        raw.x(r, c++) = rows[r][i];
    }
  }
  raw.name = std::filesystem::path(path).stem().string();
  return raw;
}

RawDataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_table: cannot open " + path);
  std::vector<double> targets;
  std::vector<std::vector<std::pair<Index, double>>> sparse_rows;
  Index max_index = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    require(static_cast<bool>(ss >> tok),
            "load_table: malformed line " + std::to_string(lineno));
    targets.push_back(parse_double(tok, "line " + std::to_string(lineno)));
    std::vector<std::pair<Index, double>> entries;
    while (ss >> tok) {
      auto colon = tok.find(':');
      require(colon != std::string::npos,
              "load_table: line " + std::to_string(lineno) + ": expected idx:val, got '" +
                  tok + "'");
      Index idx = static_cast<Index>(
          parse_double(tok.substr(0, colon), "line " + std::to_string(lineno)));
      require(idx >= 1, "load_table: line " + std::to_string(lineno) +
                            ": libsvm indices are 1-based");
      double val = parse_double(tok.substr(colon + 1), "line " + std::to_string(lineno));
      entries.emplace_back(idx, val);
      max_index = std::max(max_index, idx);
    }
    sparse_rows.push_back(std::move(entries));
  }
  require(!sparse_rows.empty(), "load_table: no data rows in " + path);
  require(max_index >= 1, "load_table: no feature indices found in " + path);

  RawDataset raw;
  const Index N = static_cast<Index>(sparse_rows.size());
  raw.x = Matrix::Zero(N, max_index);
  raw.y.resize(N);
  for (Index r = 0; r < N; ++r) {
    raw.y(r) = targets[r];
    for (auto [idx, val] : sparse_rows[r]) raw.x(r, idx - 1) = val;
  }
  raw.name = std::filesystem::path(path).stem().string();
  return raw;
}

// chunk sizes floor(N/J) + 1 for the first N mod J nodes
std::vector<Index> balanced_sizes(Index N, int J) {
  std::vector<Index> sizes(J, N / J);
  for (Index j = 0; j < N % J; ++j) ++sizes[j];
  return sizes;
}

Partition chunk_in_order(PartitionMode mode, const std::vector<Index>& order,
                         const std::vector<Index>& sizes) {
  Partition p;
  p.mode = mode;
  Index pos = 0;
  for (Index s : sizes) {
    p.node_rows.emplace_back(order.begin() + pos, order.begin() + pos + s);
    pos += s;
  }
  return p;
}

}  // namespace

RawDataset load_table(const std::string& path, TableFormat format,
                      const std::string& target_column) {
  RawDataset raw = format == TableFormat::csv ? load_csv(path, target_column)
                                              : load_libsvm(path);
  require(raw.x.allFinite() && raw.y.allFinite(),
          "load_table: non-finite value in " + path);
  return raw;
}

Dataset normalize(const RawDataset& raw) {
  Dataset ds;
  ds.name = raw.name;
  const Index N = raw.rows(), d = raw.dim();
  ds.scaling.col_min = raw.x.colwise().minCoeff();
  ds.scaling.col_max = raw.x.colwise().maxCoeff();
  ds.x.resize(N, d);
  for (Index c = 0; c < d; ++c) {
    double lo = ds.scaling.col_min(c), hi = ds.scaling.col_max(c);
    if (hi > lo)
      ds.x.col(c) = (raw.x.col(c).array() - lo) / (hi - lo);
    else
      ds.x.col(c).setZero();  // constant column
  }
  ds.scaling.y_min = raw.y.minCoeff();
  ds.scaling.y_max = raw.y.maxCoeff();
  if (ds.scaling.y_max > ds.scaling.y_min)
    ds.y = 2.0 * (raw.y.array() - ds.scaling.y_min) /
               (ds.scaling.y_max - ds.scaling.y_min) -
           1.0;
  else
    ds.y = Vector::Zero(N);  // constant target, same rule as features
  return ds;
}

Vector denormalize_row(const Dataset& ds, const Vector& row) {
  require(row.size() == ds.dim(), "denormalize_row: dimension mismatch");
  Vector out(row.size());
  for (Index c = 0; c < row.size(); ++c) {
    double lo = ds.scaling.col_min(c), hi = ds.scaling.col_max(c);
    out(c) = lo + row(c) * (hi - lo);
  }
  return out;
}

double denormalize_target(const Dataset& ds, double y) {
  return ds.scaling.y_min + (y + 1.0) * 0.5 * (ds.scaling.y_max - ds.scaling.y_min);
}

Partition partition_balanced(const Dataset& ds, int J, std::uint64_t seed) {
  const Index N = ds.rows();
  require(J >= 1, "partition_balanced: J must be >= 1");
  require(N >= J, "partition_balanced: J exceeds the number of rows");
  std::vector<Index> order(N);
  std::iota(order.begin(), order.end(), Index{0});
  auto rng = make_rng(derive_seed(seed, Stream::partition));
  std::shuffle(order.begin(), order.end(), rng);
  return chunk_in_order(PartitionMode::balanced, order, balanced_sizes(N, J));
}

Partition partition_noniid(const Dataset& ds, int J, PartitionMode mode) {
  require(mode == PartitionMode::noniid_abs_y || mode == PartitionMode::noniid_x_norm,
          "partition_noniid: mode must be noniid_abs_y or noniid_x_norm");
  const Index N = ds.rows();
  require(J >= 1, "partition_noniid: J must be >= 1");
  require(N >= J, "partition_noniid: J exceeds the number of rows");
  Vector score(N);
  if (mode == PartitionMode::noniid_abs_y)
    score = ds.y.cwiseAbs();
  else
    score = ds.x.rowwise().norm();
  std::vector<Index> order(N);
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (score(a) != score(b)) return score(a) > score(b);
    return a < b;  // deterministic tie-break
  });
  return chunk_in_order(mode, order, balanced_sizes(N, J));
}

Partition partition_imbalanced(const Dataset& ds, int J, std::uint64_t seed) {
  const Index N = ds.rows();
  require(J >= 1, "partition_imbalanced: J must be >= 1");
  std::vector<Index> sizes(J);
  Index assigned = 0;
  for (int j = 1; j < J; ++j) {  // 1-based node index in the size formula
    sizes[j - 1] = static_cast<Index>(
        std::lround(static_cast<double>(N) * (2.0 * j - 1.0) / (double(J) * J)));
    assigned += sizes[j - 1];
  }
  sizes[J - 1] = N - assigned;  // rounding residue lands on the last node
  for (int j = 0; j < J; ++j)
    require(sizes[j] >= 1, "partition_imbalanced: node " + std::to_string(j) +
                               " would receive no rows; use a larger N");
  std::vector<Index> order(N);
  std::iota(order.begin(), order.end(), Index{0});
  auto rng = make_rng(derive_seed(seed, Stream::partition));
  std::shuffle(order.begin(), order.end(), rng);
  return chunk_in_order(PartitionMode::imbalanced, order, sizes);
}

std::vector<Shard> split_train_test(const Partition& p, const Dataset& ds,
                                    std::uint64_t seed) {
  std::vector<Shard> shards;
  shards.reserve(p.node_rows.size());
  const Index d = ds.dim();
  for (int j = 0; j < p.J(); ++j) {
    auto rows = p.node_rows[j];
    const Index n = static_cast<Index>(rows.size());
    require(n >= 2, "split_train_test: node " + std::to_string(j) +
                        " has fewer than 2 rows");
    auto rng = make_rng(derive_seed(seed, Stream::split, static_cast<std::uint64_t>(j)));
    std::shuffle(rows.begin(), rows.end(), rng);
    const Index n_train = (n + 1) / 2;  // extra row goes to train
    Shard sh;
    sh.node = j;
    sh.x_train.resize(d, n_train);
    sh.y_train.resize(n_train);
    sh.x_test.resize(d, n - n_train);
    sh.y_test.resize(n - n_train);
    for (Index i = 0; i < n_train; ++i) {
      sh.x_train.col(i) = ds.x.row(rows[i]).transpose();
      sh.y_train(i) = ds.y(rows[i]);
    }
    for (Index i = n_train; i < n; ++i) {
      sh.x_test.col(i - n_train) = ds.x.row(rows[i]).transpose();
      sh.y_test(i - n_train) = ds.y(rows[i]);
    }
    shards.push_back(std::move(sh));
  }
  return shards;
}

std::string partition_to_json(const Partition& p) {
  nlohmann::json j;
  switch (p.mode) {
    case PartitionMode::balanced: j["mode"] = "balanced"; break;
    case PartitionMode::noniid_abs_y: j["mode"] = "noniid_abs_y"; break;
    case PartitionMode::noniid_x_norm: j["mode"] = "noniid_x_norm"; break;
    case PartitionMode::imbalanced: j["mode"] = "imbalanced"; break;
  }
  j["node_rows"] = nlohmann::json::array();
  for (const auto& rows : p.node_rows) j["node_rows"].push_back(rows);
  return j.dump();
}

}  // namespace dekrr
