#pragma once

#include "kcb/agents.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace kcb {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// key -> raw value. Keys are normalized to lower case with '-' read as '_'.
using ConfigMap = std::map<std::string, std::string>;

std::string normalize_key(std::string_view key);

/// INI text: `key = value` lines, optional `[section]` headers that group
/// keys without scoping them, full-line '#' or ';' comments. A key may
/// appear once per file.
ConfigMap parse_config_text(std::string_view text);
ConfigMap load_config_file(const std::filesystem::path& path);

struct ExperimentConfig {
  std::string graph = "erdos-renyi";  // erdos-renyi | edge-list | complete | path | star
  int agents = 20;                    // V
  double edge_probability = 0.3;      // p
  std::string edge_list;
  int subsample = 0;  // edge-list: keep a BFS ball of this many vertices (0 = all)
  int gamma = 0;      // 0: ceil(diameter / 2)
  int rounds = 500;   // T
  int trials = 20;
  std::vector<PolicyKind> policies;  // empty: the default set
  KernelSpec kernel_x = KernelSpec::linear();
  KzMode kz_mode = KzMode::oracle;
  double sigma_z = 1.0;
  MmdExponent mmd_exponent = MmdExponent::unsquared;
  int kz_refresh = 25;
  int arms = 8;
  int dim = 10;
  bool fixed_decision_set = false;
  double lambda = 1.0;
  double eta = 1.0;
  double norm_bound = 1.0;   // B
  double noise_scale = 0.1;  // R
  double delta = 0.1;
  bool theoretical_beta = false;
  std::uint64_t seed = 1;
  NetworkContextModel contexts{ContextModel::clustered};
  int anchors = 50;
  int threads = 1;
  Solver solver = Solver::automatic;
  std::string out = "regret.csv";
  std::string metrics_out;

  void validate() const;
  /// `policies`, or the default set when empty.
  std::vector<PolicyKind> resolved_policies() const;
  PolicyOptions policy_options() const;
};

/// Unknown keys and malformed values raise ConfigError naming the key.
ExperimentConfig config_from_map(const ConfigMap& map);

/// Graph and derived topology for an experiment; shared by every trial.
NetworkSetup build_network(const ExperimentConfig& cfg);

/// Per-clique variance-sum check on one coop run.
struct CliqueBoundCheck {
  int trial = 0;
  int clique = 0;
  int size = 0;
  double measured = 0.0;
  double log_det = 0.0;
  double bound = 0.0;
  bool holds = false;
};

struct TrialResult {
  int trial = 0;
  std::vector<PolicyKind> policies;
  std::vector<std::vector<double>> cumulative;  // per policy: cumulative group regret / V per round
  std::vector<std::uint64_t> digests;           // per policy
  std::vector<CliqueBoundCheck> bound_checks;   // coop only
  Matrix network_kernel;                        // oracle K_z, or the empirical snapshot of the first kernel policy
};

/// sum_{t >= gamma} sum_{v in C} sigma^2 against
/// gamma |C| B + max(1, 1/lambda) log det(I + K_{C,T}/lambda).
std::vector<CliqueBoundCheck> variance_bound_checks(const PolicyRun& run, const NetworkSetup& net, double lambda,
                                                    double norm_bound, int trial);

BanditEnvironment make_environment(const ExperimentConfig& cfg, const NetworkSetup& net, int trial);
TrialResult run_trial(const ExperimentConfig& cfg, const NetworkSetup& net, int trial);

struct PolicyTrace {
  PolicyKind kind;
  std::vector<double> mean;
  std::vector<double> stddev;               // population
  std::vector<std::vector<double>> raw;     // [trial][round]
};

struct RegretTrace {
  std::vector<PolicyTrace> policies;  // sorted by policy name
};

/// Pointwise mean and population standard deviation across traces.
/// Throws on an empty list or mismatched lengths.
void aggregate_traces(const std::vector<std::vector<double>>& traces, std::vector<double>& mean,
                      std::vector<double>& stddev);
RegretTrace aggregate(const std::vector<TrialResult>& trials);

void write_csv(const RegretTrace& trace, std::ostream& out);
void write_csv(const RegretTrace& trace, const std::filesystem::path& path);

struct ExperimentResult {
  NetworkSetup network;
  std::vector<TrialResult> trials;
  RegretTrace trace;
};

/// Runs every trial (on cfg.threads workers) and aggregates.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

nlohmann::json metrics_report(const ExperimentConfig& cfg, const ExperimentResult& result);

}  // namespace kcb
