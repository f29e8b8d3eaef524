#include "dekrr/snapshot.hpp"

#include <cstdint>
#include <fstream>

#include <nlohmann/json.hpp>

namespace dekrr {
namespace {

struct BlockMeta {
  std::string name;
  std::int64_t rows, cols, offset;  // offset in doubles
};

void append_block(std::ofstream& bin, nlohmann::json& blocks, std::int64_t& offset,
                  const std::string& name, const Matrix& m) {
  // row-major on disk regardless of in-memory layout
  std::vector<double> buf(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      buf[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  bin.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
  blocks.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()},
                    {"offset", offset}});
  offset += m.size();
}

nlohmann::json read_manifest(const std::string& stem) {
  std::ifstream in(stem + ".json");
  require(in.good(), "snapshot: cannot open " + stem + ".json");
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace

void snapshot_save(const std::string& stem, const std::vector<NodeState>& states,
                   bool include_aux, const std::string& config_hash) {
  std::ofstream bin(stem + ".bin", std::ios::binary);
  require(bin.good(), "snapshot: cannot write " + stem + ".bin");
  nlohmann::json blocks = nlohmann::json::array();
  std::int64_t offset = 0;
  for (const auto& st : states) {
    const std::string id = std::to_string(st.id);
    append_block(bin, blocks, offset, "theta_" + id, st.theta);
    if (include_aux) {
      append_block(bin, blocks, offset, "bracket_" + id, st.aux.bracket);
      append_block(bin, blocks, offset, "d_" + id, st.aux.d);
      append_block(bin, blocks, offset, "S_" + id, st.aux.S);
    }
  }
  nlohmann::json manifest;
  manifest["format"] = "row-major float64 blocks";
  manifest["blocks"] = blocks;
  if (!config_hash.empty()) manifest["config_hash"] = config_hash;
  std::ofstream js(stem + ".json");
  js << manifest.dump(2) << "\n";
}

Matrix snapshot_load_block(const std::string& stem, const std::string& name) {
  auto manifest = read_manifest(stem);
  for (const auto& b : manifest.at("blocks")) {
    if (b.at("name").get<std::string>() != name) continue;
    const auto rows = b.at("rows").get<std::int64_t>();
    const auto cols = b.at("cols").get<std::int64_t>();
    const auto offset = b.at("offset").get<std::int64_t>();
    std::ifstream bin(stem + ".bin", std::ios::binary);
    require(bin.good(), "snapshot: cannot open " + stem + ".bin");
    bin.seekg(offset * static_cast<std::int64_t>(sizeof(double)));
    std::vector<double> buf(static_cast<std::size_t>(rows * cols));
    bin.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(double)));
    require(bin.gcount() ==
                static_cast<std::streamsize>(buf.size() * sizeof(double)),
            "snapshot: truncated block " + name);
    Matrix m(rows, cols);
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t c = 0; c < cols; ++c)
        m(r, c) = buf[static_cast<std::size_t>(r * cols + c)];
    return m;
  }
  throw Error("snapshot: no block named " + name);
}

std::vector<std::string> snapshot_block_names(const std::string& stem) {
  auto manifest = read_manifest(stem);
  std::vector<std::string> names;
  for (const auto& b : manifest.at("blocks"))
    names.push_back(b.at("name").get<std::string>());
  return names;
}

}  // namespace dekrr
