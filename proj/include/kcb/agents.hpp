#pragma once

#include "kcb/embedding.hpp"
#include "kcb/environment.hpp"
#include "kcb/graph.hpp"
#include "kcb/network.hpp"
#include "kcb/regression.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kcb {

enum class PolicyKind { coop, eager, dist, independent, linucb, naive, omniscient };

PolicyKind parse_policy(const std::string& name);
std::string to_string(PolicyKind kind);
/// Policies that keep a kernel regression state.
bool uses_kernel_state(PolicyKind kind);

/// Index of the largest score, lowest index on ties. Throws on empty input.
std::size_t argmax_lowest_index(std::span<const double> scores);

/// Topology shared by every policy in a trial.
struct NetworkSetup {
  NetworkSetup(Graph g, int gamma);

  Graph graph;
  DistanceMatrix distances;
  int gamma;
  Graph power;
  CliqueCover cover;
  CentralAssignment centrals;  // central/peripheral split used by dist
};

/// gamma = ceil(diameter / 2), at least 1.
int default_gamma(const DistanceMatrix& distances);

struct AgentState {
  AgentId id = 0;
  Vector z;
  std::unique_ptr<Regressor> regressor;
  int clique = -1;
  bool central = true;
  AgentId central_of = -1;
  int delay = 0;
  int last_central_arm = -1;  // dist peripheral: latest central action seen
};

/// Round 1 or an empty state: uniform index from `rng`. Otherwise the UCB
/// argmax over the augmented contexts (z, x).
std::size_t select_action(const Regressor& state, const Vector& z, AgentId agent,
                          std::span<const Vector> decision_set, int round, const UcbParams& params, Rng& rng);

/// coop: same clique only. eager, naive: everything. dist: centrals take
/// everything, peripherals nothing. independent, linucb, omniscient: nothing.
std::vector<Message> accept_messages(const AgentState& agent, PolicyKind kind, std::span<const Message> messages,
                                     const CliqueCover& cover);

/// Ridge regression on raw action contexts: A = lambda I + sum x x^T.
class LinUcbState {
 public:
  LinUcbState(int dim, double lambda);

  void update(const Vector& x, double y);
  double score(const Vector& x, double alpha) const;
  std::size_t size() const { return n_; }

 private:
  double lambda_;
  std::size_t n_ = 0;
  Matrix a_inv_;
  Vector b_;
};

/// Empty state picks a uniform index from `rng`; otherwise argmax of
/// theta^T x + alpha sqrt(x^T A^-1 x), lowest index on ties.
std::size_t linucb_select(const LinUcbState& state, std::span<const Vector> decision_set, double alpha, Rng& rng);

enum class KzMode { oracle, empirical };

KzMode parse_kz_mode(const std::string& name);
std::string to_string(KzMode mode);

struct PolicyOptions {
  double lambda = 1.0;
  UcbParams ucb;
  KernelSpec kernel_x = KernelSpec::linear();
  KzMode kz_mode = KzMode::oracle;
  double sigma_z = 1.0;
  MmdExponent mmd_exponent = MmdExponent::unsquared;
  int kz_refresh = 25;  // rounds between empirical K_z snapshots
  Solver solver = Solver::automatic;
};

/// Everything recorded from one policy on one environment realization.
struct PolicyRun {
  PolicyKind kind = PolicyKind::independent;
  std::vector<double> group_regret;                 // per round, summed over agents
  std::vector<std::vector<int>> actions;            // [agent][round - 1]
  std::vector<std::vector<AugmentedContext>> points;  // chosen points, [agent][round - 1]
  std::vector<std::vector<double>> chosen_variance;   // sigma^2 before incorporation; NaN without a kernel state
  std::vector<std::vector<std::size_t>> state_size;   // after the round's incorporations
  std::uint64_t environment_digest = 0;
  std::size_t messages_incorporated = 0;
  Matrix network_kernel;                            // K_z between agents as last used
  std::shared_ptr<const ComposedKernel> kernel;     // kernel of the regression states
};

/// K_z matrix for the oracle (linear on z) network kernel.
Matrix oracle_network_kernel(const NetworkContexts& contexts);

/// Runs one policy for `rounds` rounds. All randomness comes from `env` and
/// streams derived from (master_seed, trial).
PolicyRun run_policy(PolicyKind kind, const BanditEnvironment& env, const NetworkSetup& net,
                     const PolicyOptions& options, int rounds, std::uint64_t master_seed, std::uint64_t trial);

}  // namespace kcb
