#include "dekrr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "dekrr/rng.hpp"
#include "dekrr/snapshot.hpp"
#include "dekrr/textio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dekrr {
namespace {

// columns in the consensus probe set used for the disagreement diagnostic
constexpr Index kProbeCols = 512;

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::max_rounds: return "max_rounds";
    case StopReason::safeguard_cap: return "safeguard_cap";
  }
  return "?";
}

Topology make_topology(const ExperimentConfig& cfg) {
  Topology topo;
  if (!cfg.edges.empty()) {
    topo = load_edge_list(cfg.edges, cfg.J);
  } else if (cfg.J == 1) {
    topo.J = 1;
    topo.nbrs = {{}};
  } else {
    topo = ring_lattice(cfg.J, cfg.ring_k);
  }
  ValidationReport rep = validate(topo);
  require(rep.ok, "topology invalid: " + rep.violation);
  return topo;
}

std::vector<Shard> make_shards(const ExperimentConfig& cfg, const Dataset& ds,
                               std::uint64_t seed) {
  Partition part;
  switch (cfg.partition) {
    case PartitionMode::balanced:
      part = partition_balanced(ds, cfg.J, derive_seed(seed, Stream::partition));
      break;
    case PartitionMode::noniid_abs_y:
    case PartitionMode::noniid_x_norm:
      part = partition_noniid(ds, cfg.J, cfg.partition);
      break;
    case PartitionMode::imbalanced:
      part = partition_imbalanced(ds, cfg.J, derive_seed(seed, Stream::partition));
      break;
  }
  return split_train_test(part, ds, seed);
}

std::vector<Index> make_alloc(const ExperimentConfig& cfg, Index dbar,
                              const std::vector<Shard>& shards) {
  if (!cfg.d_js.empty()) return cfg.d_js;
  std::vector<Index> n_js;
  n_js.reserve(shards.size());
  for (const auto& sh : shards) n_js.push_back(sh.n_train());
  return allocate_features(n_js, dbar, cfg.allocation);
}

struct PointResult {
  double rse = 0;
  double c_nei = 0;
  std::vector<Index> D_js;
  TrainResult train;
};

PointResult run_point(const ExperimentConfig& cfg, const Topology& topo,
                      const std::vector<Shard>& shards, Method method,
                      Index dbar, std::uint64_t seed) {
  RunSpec rs;
  rs.lambda = cfg.lambda;
  rs.sigma = cfg.sigma;
  rs.c_self_mult = cfg.c_self_mult;
  rs.mapping = cfg.mapping;
  rs.d0_ratio = cfg.d0_ratio;
  rs.epsilon = cfg.epsilon;
  rs.kmax = cfg.kmax;
  rs.policy = cfg.exec;
  rs.seed = seed;
  rs.D_js = make_alloc(cfg, dbar, shards);

  double n_train_total = 0;
  for (const auto& sh : shards) n_train_total += static_cast<double>(sh.n_train());
  rs.c_nei = cfg.c_nei > 0 ? cfg.c_nei : cfg.c_nei_scale * n_train_total;

  Matrix probe = probe_set(shards, kProbeCols, derive_seed(seed, Stream::probe));

  PointResult pt;
  pt.c_nei = rs.c_nei;
  pt.D_js = rs.D_js;
  pt.train = run_method(method, rs, topo, shards, &probe);
  pt.rse = pooled_test_rse(pt.train.states, cfg.exec);
  return pt;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  require(out.good(), "cannot write " + p.string());
  return out;
}

fs::path prepare_dir(const ExperimentConfig& cfg, bool force) {
  fs::path dir = fs::path(cfg.out_dir) / cfg.name;
  if (fs::exists(dir) && !force)
    throw Error("output directory '" + dir.string() +
                "' already exists; pass --force to overwrite");
  fs::create_directories(dir);
  return dir;
}

std::string hash_comment(const std::string& h) { return "# config_hash=" + h + "\n"; }

double dbar_of(const std::vector<Index>& D_js) {
  long long sum = 0;
  for (Index d : D_js) sum += d;
  return static_cast<double>(sum) / static_cast<double>(D_js.size());
}

json dataset_summary(const Dataset& ds) {
  return {{"name", ds.name}, {"rows", ds.rows()}, {"dim", ds.dim()}};
}

json topology_summary(const Topology& topo) {
  json edges = json::array();
  for (auto [j, p] : topo.edges()) edges.push_back({j, p});
  return {{"J", topo.J}, {"edges", edges}};
}

json run_record(Method method, std::uint64_t seed, const PointResult& pt) {
  const auto& tr = pt.train;
  return {{"method", method_name(method)},
          {"seed", seed},
          {"Dbar", dbar_of(pt.D_js)},
          {"D_js", pt.D_js},
          {"c_nei", pt.c_nei},
          {"rse", pt.rse},
          {"rounds", tr.rounds()},
          {"comm_scalars", tr.setup_scalars + tr.log.back().cum_scalars},
          {"setup_scalars", tr.setup_scalars},
          {"per_round_scalars", tr.per_round_scalars},
          {"stop_reason", stop_reason_name(tr.reason)},
          {"final_self_scale", tr.final_self_scale},
          {"final_objective", tr.log.back().objective},
          {"final_disagreement", tr.log.back().disagreement}};
}

void write_roundlog(const fs::path& path, const std::string& h,
                    const std::vector<RoundLogEntry>& log) {
  auto out = open_out(path);
  out << hash_comment(h) << "round,objective,max_dtheta,disagreement,cum_scalars\n";
  for (const auto& e : log)
    out << e.round << ',' << fmt_double(e.objective) << ','
        << fmt_double(e.max_dtheta) << ',' << fmt_double(e.disagreement) << ','
        << e.cum_scalars << '\n';
}

}  // namespace

void cmd_run(const ExperimentConfig& cfg, bool force) {
  const std::string h = config_hash(cfg);
  Dataset ds = normalize(load_table(cfg.dataset, cfg.format, cfg.target));
  Topology topo = make_topology(cfg);
  fs::path dir = prepare_dir(cfg, force);

  auto results = open_out(dir / "results.csv");
  results << hash_comment(h) << "dataset,method,Dbar,seed,rse,comm_scalars,rounds\n";

  json runs = json::array();
  for (Method method : cfg.methods) {
    for (std::uint64_t seed : cfg.seeds) {
      PointResult pt;
      try {
        auto shards = make_shards(cfg, ds, seed);
        pt = run_point(cfg, topo, shards, method, cfg.dbar, seed);
      } catch (const std::exception& e) {
        throw Error(std::string("seed ") + std::to_string(seed) + ", method " +
                    method_name(method) + ": " + e.what());
      }
      const auto& tr = pt.train;
      results << ds.name << ',' << method_name(method) << ','
              << fmt_double(dbar_of(pt.D_js)) << ',' << seed << ','
              << fmt_double(pt.rse) << ','
              << tr.setup_scalars + tr.log.back().cum_scalars << ','
              << tr.rounds() << '\n';
      const std::string tag =
          std::string(method_name(method)) + "_seed" + std::to_string(seed);
      write_roundlog(dir / ("roundlog_" + tag + ".csv"), h, tr.log);
      snapshot_save((dir / ("theta_" + tag)).string(), tr.states, false, h);
      runs.push_back(run_record(method, seed, pt));
    }
  }

  json manifest;
  manifest["canonical_config"] = canonical_lines(cfg);
  manifest["config_hash"] = h;
  manifest["dataset"] = dataset_summary(ds);
  manifest["topology"] = topology_summary(topo);
  manifest["runs"] = runs;
  open_out(dir / "manifest.json") << manifest.dump(2) << "\n";
}

void cmd_sweep(ExperimentConfig cfg, const std::vector<Index>& dbars,
               const std::vector<Method>& methods, bool force) {
  require(!dbars.empty(), "sweep: need at least one Dbar");
  for (Index db : dbars) require(db >= 1, "sweep: Dbar must be >= 1");
  require(cfg.d_js.empty(),
          "sweep varies the feature budget; configure dbar/allocation, not d_js");
  if (!methods.empty()) cfg.methods = methods;

  // hash covers the full Dbar list: replace the single-dbar line
  cfg.dbar = dbars[0];
  std::vector<std::string> lines = canonical_lines(cfg);
  {
    std::string joined;
    for (std::size_t i = 0; i < dbars.size(); ++i)
      joined += (i ? "," : "") + std::to_string(dbars[i]);
    for (auto& l : lines)
      if (l.rfind("dbar=", 0) == 0) l = "dbar=" + joined;
    std::sort(lines.begin(), lines.end());
  }
  std::string blob;
  for (const auto& l : lines) {
    blob += l;
    blob += '\n';
  }
  const std::string h = hex64(fnv1a64(blob));

  Dataset ds = normalize(load_table(cfg.dataset, cfg.format, cfg.target));
  Topology topo = make_topology(cfg);
  fs::path dir = prepare_dir(cfg, force);

  auto results = open_out(dir / "results.csv");
  results << hash_comment(h) << "dataset,method,Dbar,seed,rse,comm_scalars,rounds\n";
  auto sweep = open_out(dir / "sweep.csv");
  sweep << hash_comment(h) << "Dbar,method,mean_rse,std_rse,comm_per_round\n";

  std::map<std::uint64_t, std::vector<Shard>> shard_cache;
  json runs = json::array();
  for (Index dbar : dbars) {
    for (Method method : cfg.methods) {
      std::vector<double> rses, per_rounds;
      for (std::uint64_t seed : cfg.seeds) {
        auto it = shard_cache.find(seed);
        if (it == shard_cache.end())
          it = shard_cache.emplace(seed, make_shards(cfg, ds, seed)).first;
        PointResult pt;
        try {
          pt = run_point(cfg, topo, it->second, method, dbar, seed);
        } catch (const std::exception& e) {
          throw Error("Dbar " + std::to_string(dbar) + ", seed " +
                      std::to_string(seed) + ", method " + method_name(method) +
                      ": " + e.what());
        }
        const auto& tr = pt.train;
        results << ds.name << ',' << method_name(method) << ','
                << fmt_double(dbar_of(pt.D_js)) << ',' << seed << ','
                << fmt_double(pt.rse) << ','
                << tr.setup_scalars + tr.log.back().cum_scalars << ','
                << tr.rounds() << '\n';
        rses.push_back(pt.rse);
        per_rounds.push_back(static_cast<double>(tr.per_round_scalars));
        json rec = run_record(method, seed, pt);
        rec["Dbar_requested"] = dbar;
        runs.push_back(std::move(rec));
      }
      const double n = static_cast<double>(rses.size());
      const double mean = std::accumulate(rses.begin(), rses.end(), 0.0) / n;
      double var = 0;
      for (double r : rses) var += (r - mean) * (r - mean);
      const double stddev = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
      const double comm =
          std::accumulate(per_rounds.begin(), per_rounds.end(), 0.0) / n;
      sweep << dbar << ',' << method_name(method) << ',' << fmt_double(mean)
            << ',' << fmt_double(stddev) << ',' << fmt_double(comm) << '\n';
    }
  }

  json manifest;
  manifest["canonical_config"] = lines;
  manifest["config_hash"] = h;
  manifest["dataset"] = dataset_summary(ds);
  manifest["topology"] = topology_summary(topo);
  manifest["runs"] = runs;
  open_out(dir / "manifest.json") << manifest.dump(2) << "\n";
}

int cmd_verify(const std::string& dir) {
  fs::path root(dir);
  require(fs::is_directory(root), "verify: '" + dir + "' is not a directory");
  fs::path mpath = root / "manifest.json";
  require(fs::exists(mpath), "verify: no manifest.json in " + dir);

  json manifest;
  {
    std::ifstream in(mpath);
    require(in.good(), "verify: cannot read " + mpath.string());
    in >> manifest;
  }
  require(manifest.contains("canonical_config") && manifest.contains("config_hash"),
          "verify: manifest.json lacks canonical_config/config_hash");
  auto lines = manifest["canonical_config"].get<std::vector<std::string>>();
  std::sort(lines.begin(), lines.end());
  std::string blob;
  for (const auto& l : lines) {
    blob += l;
    blob += '\n';
  }
  const std::string recomputed = hex64(fnv1a64(blob));
  const std::string recorded = manifest["config_hash"].get<std::string>();
  require(recomputed == recorded, "verify: manifest hash mismatch (recomputed " +
                                      recomputed + ", recorded " + recorded + ")");

  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_regular_file()) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());

  int checked = 0;
  for (const auto& p : entries) {
    const std::string ext = p.extension().string();
    if (ext == ".csv") {
      std::ifstream in(p);
      std::string first;
      std::getline(in, first);
      require(first == "# config_hash=" + recorded,
              "verify: " + p.filename().string() + " carries a different hash");
      ++checked;
    } else if (ext == ".json") {
      json j;
      std::ifstream in(p);
      require(in.good(), "verify: cannot read " + p.string());
      in >> j;
      require(j.contains("config_hash") &&
                  j["config_hash"].get<std::string>() == recorded,
              "verify: " + p.filename().string() + " carries a different hash");
      ++checked;
    } else if (ext == ".bin") {
      fs::path sibling = p;
      sibling.replace_extension(".json");
      require(fs::exists(sibling), "verify: " + p.filename().string() +
                                       " has no manifest " +
                                       sibling.filename().string());
      ++checked;
    }
  }
  return checked;
}

}  // namespace dekrr
