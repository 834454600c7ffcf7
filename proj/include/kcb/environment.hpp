#pragma once

#include "kcb/graph.hpp"
#include "kcb/kernel.hpp"
#include "kcb/random.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kcb {

/// F(.) = sum_j alpha_j K(., c_j) with sqrt(alpha^T K_anchor alpha) = B.
class GroundTruth {
 public:
  GroundTruth(ComposedKernel kernel, std::vector<AugmentedContext> anchors, Vector weights);

  double operator()(const AugmentedContext& p) const;
  double rkhs_norm() const;

  /// F restricted to one network context: x -> F(z, x).
  class Slice {
   public:
    double operator()(const Vector& x) const;

   private:
    friend class GroundTruth;
    KernelSpec action_;
    std::vector<Vector> anchors_x_;
    Vector weights_;  // alpha_j K_z(z, z_j)
    Vector theta_;    // linear K_x: sum_j weights_j x_j
    bool linear_ = false;
  };
  Slice slice(const Vector& z, AgentId agent) const;

  const ComposedKernel& kernel() const { return kernel_; }
  const std::vector<AugmentedContext>& anchors() const { return anchors_; }
  const Vector& weights() const { return weights_; }

 private:
  ComposedKernel kernel_;
  std::vector<AugmentedContext> anchors_;
  Vector weights_;
};

/// Anchors take x uniform in the unit ball and z drawn from `network_contexts`.
/// Weights are standard normal, rescaled so the RKHS norm equals `norm_bound`.
GroundTruth make_ground_truth(const ComposedKernel& kernel, int anchors, double norm_bound,
                              std::span<const Vector> network_contexts, int action_dim, std::uint64_t seed);

/// F(x~) + eps, eps ~ N(0, R^2).
double reward(const GroundTruth& truth, const AugmentedContext& point, double noise_scale, Rng& rng);

/// Noise-free gap between the best arm and the chosen arm for an agent with
/// network context z.
double instant_regret(const GroundTruth& truth, const Vector& z, AgentId agent,
                      std::span<const Vector> decision_set, std::size_t chosen);

enum class ContextModel { identical, clustered, random_unit };

ContextModel parse_context_model(const std::string& name);
std::string to_string(ContextModel model);

struct NetworkContextModel {
  ContextModel mode = ContextModel::identical;
  int dim = 10;                      // random-unit only
  double cluster_similarity = 0.5;   // clustered: inner product between distinct clusters
  int max_clusters = 0;              // clustered: 0 keeps every colour class
};

/// Colour classes of G_gamma, extracted as repeated greedy max-weight
/// independent sets (weights: G_gamma degree within the remaining vertices).
std::vector<int> independent_set_clusters(const Graph& gpow);

struct NetworkContexts {
  std::vector<Vector> z;
  std::vector<int> cluster;  // per agent; all zero for identical
};

/// identical: z_v = [1] for everyone.
/// clustered: cluster c gets z = (sqrt(rho), sqrt(1-rho) e_c), so distinct
///   clusters have inner product rho and every z is a unit vector.
/// random-unit: i.i.d. uniform on the unit sphere of `dim` dimensions.
NetworkContexts gen_network_contexts(const NetworkContextModel& model, int agents, const Graph& gpow,
                                     std::uint64_t seed);

struct DecisionSetSpec {
  int arms = 8;
  int dim = 10;
  bool fixed = false;  // one set shared by every agent and round
  void validate() const;
};

/// Uniform samples from the closed unit ball.
std::vector<Vector> sample_decision_set(const DecisionSetSpec& spec, Rng& rng);
Vector sample_unit_ball(int dim, Rng& rng);
Vector sample_unit_sphere(int dim, Rng& rng);

/// One trial's environment: ground truth, per-agent network contexts and the
/// stream-derived decision sets and noise. Every policy run in a trial reads
/// the same realization.
class BanditEnvironment {
 public:
  BanditEnvironment(GroundTruth truth, NetworkContexts contexts, DecisionSetSpec decisions, double noise_scale,
                    std::uint64_t master_seed, std::uint64_t trial);

  int agents() const { return static_cast<int>(contexts_.z.size()); }
  const Vector& network_context(AgentId v) const { return contexts_.z.at(v); }
  const NetworkContexts& contexts() const { return contexts_; }
  const GroundTruth& truth() const { return truth_; }
  const DecisionSetSpec& decision_spec() const { return decisions_; }
  double noise_scale() const { return noise_scale_; }

  std::vector<Vector> decision_set(AgentId v, int round) const;
  double noise(AgentId v, int round) const;
  AugmentedContext augment(AgentId v, const Vector& x) const { return {contexts_.z.at(v), x, v}; }

  double expected_reward(AgentId v, const Vector& x) const { return slices_.at(v)(x); }
  /// F(z_v, x) for every arm of a decision set.
  std::vector<double> arm_values(AgentId v, std::span<const Vector> decision_set) const;
  double observe(AgentId v, int round, const Vector& x) const { return expected_reward(v, x) + noise(v, round); }
  double regret(AgentId v, std::span<const Vector> decision_set, std::size_t chosen) const;

 private:
  GroundTruth truth_;
  NetworkContexts contexts_;
  DecisionSetSpec decisions_;
  double noise_scale_;
  std::uint64_t master_seed_;
  std::uint64_t trial_;
  std::vector<Vector> fixed_set_;
  std::vector<GroundTruth::Slice> slices_;
};

}  // namespace kcb
