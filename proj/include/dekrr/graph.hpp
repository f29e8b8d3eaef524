#pragma once
// Communication topology: a symmetric undirected graph over J nodes with
// one-hop neighbor sets. Only the ring lattice is generated programmatically;
// arbitrary graphs load from an edge-list file.

#include <string>
#include <utility>
#include <vector>

namespace dekrr {

struct Topology {
  int J = 0;
  std::vector<std::vector<int>> nbrs;  // per node, sorted ascending

  int degree(int j) const { return static_cast<int>(nbrs[j].size()); }

  // Undirected edge list, each pair (j, p) with j < p listed once.
  std::vector<std::pair<int, int>> edges() const;
};

struct ValidationReport {
  bool ok = true;
  std::string violation;  // first violation found, empty when ok
};

// Ring lattice: node j is connected to the k/2 nearest nodes on each side.
// Requires k even and 0 < k < J.
Topology ring_lattice(int J, int k);

// Checks symmetry, absence of self-loops, and connectedness (BFS).
ValidationReport validate(const Topology& t);

// Edge-list text file: one "j p" pair per line, 0-indexed, each pair once.
Topology load_edge_list(const std::string& path, int J);
std::string to_edge_list(const Topology& t);

}  // namespace dekrr
