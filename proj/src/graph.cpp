#include "dekrr/graph.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "dekrr/common.hpp"

namespace dekrr {

std::vector<std::pair<int, int>> Topology::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int j = 0; j < J; ++j)
    for (int p : nbrs[j])
      if (j < p) out.emplace_back(j, p);
  return out;
}

Topology ring_lattice(int J, int k) {
  require(J >= 1, "ring_lattice: J must be >= 1");
  require(k > 0 && k % 2 == 0, "ring_lattice: degree k must be positive and even");
  require(k < J, "ring_lattice: degree k must be < J");
  Topology t;
  t.J = J;
  t.nbrs.resize(J);
  for (int j = 0; j < J; ++j) {
    std::set<int> n;
    for (int s = 1; s <= k / 2; ++s) {
      n.insert((j + s) % J);
      n.insert((j - s + J) % J);
    }
    t.nbrs[j].assign(n.begin(), n.end());
  }
  return t;
}

ValidationReport validate(const Topology& t) {
  ValidationReport r;
  auto fail = [&](std::string msg) {
    r.ok = false;
    r.violation = std::move(msg);
    return r;
  };
  if (t.J <= 0 || static_cast<int>(t.nbrs.size()) != t.J)
    return fail("adjacency size does not match J");
  // per-node list sanity first, so symmetry checks below may binary-search
  for (int j = 0; j < t.J; ++j) {
    const auto& n = t.nbrs[j];
    if (!std::is_sorted(n.begin(), n.end()))
      return fail("neighbor list of node " + std::to_string(j) + " is not sorted");
    if (std::adjacent_find(n.begin(), n.end()) != n.end())
      return fail("duplicate neighbor entry at node " + std::to_string(j));
    for (int p : n) {
      if (p < 0 || p >= t.J)
        return fail("node " + std::to_string(j) + " lists out-of-range neighbor " +
                    std::to_string(p));
      if (p == j) return fail("self-loop at node " + std::to_string(j));
    }
  }
  for (int j = 0; j < t.J; ++j)
    for (int p : t.nbrs[j])
      if (!std::binary_search(t.nbrs[p].begin(), t.nbrs[p].end(), j))
        return fail("asymmetric edge (" + std::to_string(j) + "," + std::to_string(p) + ")");
  // connectivity
  std::vector<char> visited(t.J, 0);
  std::queue<int> q;
  q.push(0);
  visited[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int j = q.front();
    q.pop();
    for (int p : t.nbrs[j])
      if (!visited[p]) {
        visited[p] = 1;
        ++count;
        q.push(p);
      }
  }
  if (count != t.J) return fail("graph is disconnected");
  return r;
}

Topology load_edge_list(const std::string& path, int J) {
  std::ifstream in(path);
  require(in.good(), "load_edge_list: cannot open " + path);
  Topology t;
  t.J = J;
  t.nbrs.resize(J);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    int j, p;
    std::string rest;
    require(static_cast<bool>(ss >> j >> p) && !(ss >> rest),
            "load_edge_list: malformed line " + std::to_string(lineno));
    require(j >= 0 && j < J && p >= 0 && p < J,
            "load_edge_list: node id out of range on line " + std::to_string(lineno));
    require(j != p, "load_edge_list: self-loop on line " + std::to_string(lineno));
    t.nbrs[j].push_back(p);
    t.nbrs[p].push_back(j);
  }
  for (auto& n : t.nbrs) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return t;
}

std::string to_edge_list(const Topology& t) {
  std::string out;
  for (auto [j, p] : t.edges())
    out += std::to_string(j) + " " + std::to_string(p) + "\n";
  return out;
}

}  // namespace dekrr
