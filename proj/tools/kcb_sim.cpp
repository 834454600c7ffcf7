#include "kcb/experiment.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

// Every flag maps onto the config key of the same meaning.
constexpr Flag kFlags[] = {
    {"--graph", "graph", "erdos-renyi | edge-list | complete | path | star"},
    {"--V", "v", "number of agents"},
    {"--p", "p", "Erdos-Renyi edge probability"},
    {"--edge-list", "edge_list", "SNAP-style edge list file"},
    {"--subsample", "subsample", "edge list: keep a BFS ball of this many vertices"},
    {"--gamma", "gamma", "message TTL (default ceil(diameter/2))"},
    {"--T", "t", "rounds per trial"},
    {"--trials", "trials", "independent trials"},
    {"--policies", "policies", "comma list: coop,eager,dist,independent,linucb,naive,omniscient"},
    {"--kernel-x", "kernel_x", "linear | rbf | matern"},
    {"--bandwidth", "bandwidth", "rbf bandwidth"},
    {"--lengthscale", "lengthscale", "matern lengthscale"},
    {"--nu", "nu", "matern smoothness (0.5, 1.5, 2.5)"},
    {"--kz-mode", "kz_mode", "oracle | empirical"},
    {"--sigma-z", "sigma_z", "empirical network kernel width"},
    {"--mmd", "mmd", "unsquared | squared MMD in the empirical kernel"},
    {"--kz-refresh", "kz_refresh", "rounds between empirical K_z snapshots"},
    {"--arms", "arms", "arms per decision set"},
    {"--dim", "dim", "action context dimension"},
    {"--fixed-decision-set", "fixed_decision_set", "one decision set for all agents and rounds"},
    {"--contexts", "contexts", "identical | clustered | random-unit"},
    {"--z-dim", "z_dim", "random-unit network context dimension"},
    {"--cluster-similarity", "cluster_similarity", "clustered: K_z between distinct clusters"},
    {"--max-clusters", "max_clusters", "clustered: cap on the number of clusters"},
    {"--anchors", "anchors", "ground-truth expansion size"},
    {"--lambda", "lambda", "ridge regularizer"},
    {"--eta", "eta", "exploration scale"},
    {"--beta", "beta", "scaled | theoretical confidence width"},
    {"--delta", "delta", "confidence level for theoretical beta"},
    {"--B", "b", "RKHS norm bound"},
    {"--R", "r", "noise standard deviation"},
    {"--seed", "seed", "master seed"},
    {"--threads", "threads", "worker threads (trials run in parallel)"},
    {"--solver", "solver", "auto | dual | primal"},
    {"--out", "out", "CSV output path"},
    {"--metrics-out", "metrics_out", "JSON metrics output path"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent kernelized bandit simulator"};
  std::string config_path;
  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  std::vector<std::string> values(std::size(kFlags));
  for (std::size_t i = 0; i < std::size(kFlags); ++i) app.add_option(kFlags[i].name, values[i], kFlags[i].help);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "no summary on stdout");
  CLI11_PARSE(app, argc, argv);

  try {
    kcb::ConfigMap map;
    if (!config_path.empty()) map = kcb::load_config_file(config_path);
    for (std::size_t i = 0; i < std::size(kFlags); ++i)
      if (app.count(kFlags[i].name) > 0) map[kFlags[i].key] = values[i];
    const auto cfg = kcb::config_from_map(map);

    const auto result = kcb::run_experiment(cfg);
    kcb::write_csv(result.trace, std::filesystem::path(cfg.out));
    const auto metrics = kcb::metrics_report(cfg, result);
    if (!cfg.metrics_out.empty()) {
      std::ofstream out(cfg.metrics_out);
      if (!out) throw std::runtime_error("cannot open " + cfg.metrics_out + " for writing");
      out << metrics.dump(2) << '\n';
    }
    if (!quiet) {
      std::printf("V=%d gamma=%d T=%d trials=%d cover=%zu\n", result.network.graph.vertex_count(),
                  result.network.gamma, cfg.rounds, cfg.trials, result.network.cover.size());
      for (const auto& p : result.trace.policies)
        std::printf("  %-12s %.6f +- %.6f\n", kcb::to_string(p.kind).c_str(), p.mean.back(), p.stddev.back());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
