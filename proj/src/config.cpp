#include "dekrr/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dekrr/textio.hpp"

namespace dekrr {

const char* partition_name(PartitionMode m) {
  switch (m) {
    case PartitionMode::balanced: return "balanced";
    case PartitionMode::noniid_abs_y: return "noniid_abs_y";
    case PartitionMode::noniid_x_norm: return "noniid_x_norm";
    case PartitionMode::imbalanced: return "imbalanced";
  }
  return "?";
}

const char* mapping_name(MappingKind m) {
  return m == MappingKind::paired_cos_sin ? "paired_cos_sin" : "cos_with_phase";
}

const char* allocation_name(AllocationStrategy a) {
  return a == AllocationStrategy::equal ? "equal" : "sqrt_proportional";
}

const char* exec_name(Exec e) { return e == Exec::serial ? "serial" : "parallel"; }

const char* format_name(TableFormat f) {
  return f == TableFormat::csv ? "csv" : "libsvm";
}

namespace {

struct KvLine {
  std::string value;
  int line = 0;
};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& key, int line, const std::string& what) {
  throw Error("config: key '" + key + "' (line " + std::to_string(line) + "): " + what);
}

double parse_double(const std::string& key, const KvLine& kv) {
  const std::string& v = kv.value;
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    fail(key, kv.line, "expected a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const KvLine& kv) {
  const std::string& v = kv.value;
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    fail(key, kv.line, "expected an integer, got '" + v + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::string item;
  std::stringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

}  // namespace

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open '" + path + "'");

  std::map<std::string, KvLine> kvs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config: line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw Error("config: line " + std::to_string(lineno) + ": empty key or value");
    auto [it, inserted] = kvs.emplace(key, KvLine{value, lineno});
    if (!inserted)
      throw Error("config: duplicate key '" + key + "' (lines " +
                  std::to_string(it->second.line) + " and " + std::to_string(lineno) + ")");
  }

  static const std::vector<std::string> known = {
      "dataset", "format", "target", "J", "ring_k", "edges", "partition",
      "lambda", "sigma", "c_nei", "c_nei_scale", "c_self_mult", "mapping",
      "dbar", "d_js", "allocation", "d0_ratio", "seeds", "epsilon", "kmax",
      "methods", "exec", "out_dir", "name"};
  for (const auto& [key, kv] : kvs)
    if (std::find(known.begin(), known.end(), key) == known.end())
      fail(key, kv.line, "unknown key");

  auto get = [&](const std::string& key) -> const KvLine* {
    auto it = kvs.find(key);
    return it == kvs.end() ? nullptr : &it->second;
  };
  auto need = [&](const std::string& key) -> const KvLine& {
    const KvLine* kv = get(key);
    require(kv != nullptr, "config: missing required key '" + key + "'");
    return *kv;
  };

  ExperimentConfig cfg;
  cfg.dataset = need("dataset").value;
  {
    const KvLine& kv = need("format");
    if (kv.value == "csv") cfg.format = TableFormat::csv;
    else if (kv.value == "libsvm") cfg.format = TableFormat::libsvm;
    else fail("format", kv.line, "expected csv or libsvm");
  }
  if (auto* kv = get("target")) cfg.target = kv->value;

  cfg.J = static_cast<int>(parse_int("J", need("J")));
  if (cfg.J < 1) fail("J", need("J").line, "must be >= 1");

  if (auto* kv = get("edges")) {
    require(get("ring_k") == nullptr, "config: give either ring_k or edges, not both");
    cfg.edges = kv->value;
  } else if (auto* rk = get("ring_k")) {
    cfg.ring_k = static_cast<int>(parse_int("ring_k", *rk));
  }

  {
    const KvLine& kv = need("partition");
    if (kv.value == "balanced") cfg.partition = PartitionMode::balanced;
    else if (kv.value == "noniid_abs_y") cfg.partition = PartitionMode::noniid_abs_y;
    else if (kv.value == "noniid_x_norm") cfg.partition = PartitionMode::noniid_x_norm;
    else if (kv.value == "imbalanced") cfg.partition = PartitionMode::imbalanced;
    else fail("partition", kv.line,
              "expected balanced, noniid_abs_y, noniid_x_norm, or imbalanced");
  }

  cfg.lambda = parse_double("lambda", need("lambda"));
  if (cfg.lambda <= 0) fail("lambda", need("lambda").line, "must be > 0");
  cfg.sigma = parse_double("sigma", need("sigma"));
  if (cfg.sigma <= 0) fail("sigma", need("sigma").line, "must be > 0");

  if (auto* kv = get("c_nei")) {
    require(get("c_nei_scale") == nullptr,
            "config: give either c_nei or c_nei_scale, not both");
    cfg.c_nei = parse_double("c_nei", *kv);
    if (cfg.c_nei <= 0) fail("c_nei", kv->line, "must be > 0");
  } else if (auto* ks = get("c_nei_scale")) {
    cfg.c_nei_scale = parse_double("c_nei_scale", *ks);
    if (cfg.c_nei_scale <= 0) fail("c_nei_scale", ks->line, "must be > 0");
  }
  if (auto* kv = get("c_self_mult")) {
    cfg.c_self_mult = parse_double("c_self_mult", *kv);
    if (cfg.c_self_mult <= 0) fail("c_self_mult", kv->line, "must be > 0");
  }
  if (auto* kv = get("mapping")) {
    if (kv->value == "paired_cos_sin") cfg.mapping = MappingKind::paired_cos_sin;
    else if (kv->value == "cos_with_phase") cfg.mapping = MappingKind::cos_with_phase;
    else fail("mapping", kv->line, "expected paired_cos_sin or cos_with_phase");
  }

  {
    const KvLine* db = get("dbar");
    const KvLine* dj = get("d_js");
    require((db != nullptr) != (dj != nullptr),
            "config: give exactly one of dbar or d_js");
    if (db) {
      cfg.dbar = static_cast<Index>(parse_int("dbar", *db));
      if (cfg.dbar < 1) fail("dbar", db->line, "must be >= 1");
    } else {
      for (const auto& item : split_list(dj->value)) {
        long long v = parse_int("d_js", {item, dj->line});
        if (v < 1) fail("d_js", dj->line, "entries must be >= 1");
        cfg.d_js.push_back(static_cast<Index>(v));
      }
      if (static_cast<int>(cfg.d_js.size()) != cfg.J)
        fail("d_js", dj->line, "expected " + std::to_string(cfg.J) + " entries, got " +
                                   std::to_string(cfg.d_js.size()));
    }
  }
  if (auto* kv = get("allocation")) {
    if (kv->value == "equal") cfg.allocation = AllocationStrategy::equal;
    else if (kv->value == "sqrt_proportional")
      cfg.allocation = AllocationStrategy::sqrt_proportional;
    else fail("allocation", kv->line, "expected equal or sqrt_proportional");
  }
  if (auto* kv = get("d0_ratio")) {
    cfg.d0_ratio = static_cast<Index>(parse_int("d0_ratio", *kv));
    if (cfg.d0_ratio < 1) fail("d0_ratio", kv->line, "must be >= 1");
  }

  {
    const KvLine& kv = need("seeds");
    for (const auto& item : split_list(kv.value)) {
      long long v = parse_int("seeds", {item, kv.line});
      if (v < 0) fail("seeds", kv.line, "seeds must be >= 0");
      cfg.seeds.push_back(static_cast<std::uint64_t>(v));
    }
    if (cfg.seeds.empty()) fail("seeds", kv.line, "need at least one seed");
  }
  if (auto* kv = get("epsilon")) {
    cfg.epsilon = parse_double("epsilon", *kv);
    if (cfg.epsilon <= 0) fail("epsilon", kv->line, "must be > 0");
  }
  if (auto* kv = get("kmax")) {
    cfg.kmax = static_cast<int>(parse_int("kmax", *kv));
    if (cfg.kmax < 0) fail("kmax", kv->line, "must be >= 0");
  }
  if (auto* kv = get("methods")) {
    cfg.methods.clear();
    for (const auto& item : split_list(kv->value)) {
      try {
        cfg.methods.push_back(method_from_name(item));
      } catch (const Error&) {
        fail("methods", kv->line, "unknown method '" + item + "'");
      }
    }
    if (cfg.methods.empty()) fail("methods", kv->line, "need at least one method");
  }
  if (auto* kv = get("exec")) {
    if (kv->value == "serial") cfg.exec = Exec::serial;
    else if (kv->value == "parallel") cfg.exec = Exec::parallel;
    else fail("exec", kv->line, "expected serial or parallel");
  }

  cfg.out_dir = need("out_dir").value;
  if (auto* kv = get("name")) cfg.name = kv->value;
  else cfg.name = std::filesystem::path(path).stem().string();
  require(!cfg.name.empty(), "config: empty experiment name");

  require(std::filesystem::exists(cfg.dataset),
          "config: dataset file '" + cfg.dataset + "' does not exist");
  if (!cfg.edges.empty())
    require(std::filesystem::exists(cfg.edges),
            "config: edge-list file '" + cfg.edges + "' does not exist");
  return cfg;
}

std::vector<std::string> canonical_lines(const ExperimentConfig& cfg) {
  std::vector<std::string> lines;
  auto add = [&](const std::string& k, const std::string& v) {
    lines.push_back(k + "=" + v);
  };
  add("dataset", cfg.dataset);
  add("format", format_name(cfg.format));
  add("target", cfg.target);
  add("J", std::to_string(cfg.J));
  if (cfg.edges.empty()) add("ring_k", std::to_string(cfg.ring_k));
  else add("edges", cfg.edges);
  add("partition", partition_name(cfg.partition));
  add("lambda", fmt_double(cfg.lambda));
  add("sigma", fmt_double(cfg.sigma));
  if (cfg.c_nei > 0) add("c_nei", fmt_double(cfg.c_nei));
  else add("c_nei_scale", fmt_double(cfg.c_nei_scale));
  add("c_self_mult", fmt_double(cfg.c_self_mult));
  add("mapping", mapping_name(cfg.mapping));
  if (cfg.d_js.empty()) {
    add("dbar", std::to_string(cfg.dbar));
  } else {
    std::string v;
    for (std::size_t i = 0; i < cfg.d_js.size(); ++i)
      v += (i ? "," : "") + std::to_string(cfg.d_js[i]);
    add("d_js", v);
  }
  add("allocation", allocation_name(cfg.allocation));
  add("d0_ratio", std::to_string(cfg.d0_ratio));
  {
    std::string v;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
      v += (i ? "," : "") + std::to_string(cfg.seeds[i]);
    add("seeds", v);
  }
  add("epsilon", fmt_double(cfg.epsilon));
  add("kmax", std::to_string(cfg.kmax));
  {
    std::string v;
    for (std::size_t i = 0; i < cfg.methods.size(); ++i)
      v += std::string(i ? "," : "") + method_name(cfg.methods[i]);
    add("methods", v);
  }
  add("exec", exec_name(cfg.exec));
  add("name", cfg.name);
  std::sort(lines.begin(), lines.end());
  return lines;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::string blob;
  for (const auto& line : canonical_lines(cfg)) {
    blob += line;
    blob += '\n';
  }
  return hex64(fnv1a64(blob));
}

}  // namespace dekrr
