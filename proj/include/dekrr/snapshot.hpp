#pragma once
// Debug snapshots: dimensioned row-major double blocks in a .bin file next
// to a .json manifest naming each block. Used to dump coefficient vectors
// and per-node normal matrices for offline inspection.

#include <string>
#include <vector>

#include "dekrr/common.hpp"
#include "dekrr/solver.hpp"

namespace dekrr {

// Writes <stem>.bin and <stem>.json. Blocks: theta_<j> for every node, and
// (when include_aux) bracket_<j>, d_<j>, S_<j>. A nonempty config_hash is
// recorded in the manifest so experiment outputs stay auditable.
void snapshot_save(const std::string& stem, const std::vector<NodeState>& states,
                   bool include_aux = false, const std::string& config_hash = "");

// Reads one named block back from a snapshot.
Matrix snapshot_load_block(const std::string& stem, const std::string& name);

// Names listed in the manifest, in file order.
std::vector<std::string> snapshot_block_names(const std::string& stem);

}  // namespace dekrr
