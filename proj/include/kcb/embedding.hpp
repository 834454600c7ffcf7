#pragma once

#include "kcb/kernel.hpp"

#include <map>
#include <utility>
#include <vector>

namespace kcb {

/// Running kernel double sums over per-agent action-context histories.
///
/// S_vv = sum_{i,j} K_x(x_{v,i}, x_{v,j}) is kept for every agent; the cross
/// sum S_vw only for pairs registered with track().
class EmbeddingState {
 public:
  EmbeddingState(int agents, KernelSpec action_kernel);

  /// Start maintaining S_vw. Existing histories are folded in once.
  void track(AgentId v, AgentId w);
  bool tracked(AgentId v, AgentId w) const;

  /// O(t * tracked partners of v) kernel evaluations.
  void observe(AgentId v, const Vector& x);

  int agents() const { return static_cast<int>(history_.size()); }
  int count(AgentId v) const { return static_cast<int>(history_.at(v).size()); }
  double self_sum(AgentId v) const { return self_.at(v); }
  double cross_sum(AgentId v, AgentId w) const;
  const std::vector<Vector>& history(AgentId v) const { return history_.at(v); }
  const KernelSpec& action_kernel() const { return spec_; }
  std::vector<AgentId> partners(AgentId v) const;

 private:
  static std::pair<AgentId, AgentId> key(AgentId v, AgentId w) { return v < w ? std::pair{v, w} : std::pair{w, v}; }
  void check(AgentId v) const;

  KernelSpec spec_;
  std::vector<std::vector<Vector>> history_;
  std::vector<double> self_;
  std::map<std::pair<AgentId, AgentId>, double> cross_;
  std::vector<std::vector<AgentId>> partners_;
};

/// sqrt(max(0, S_vv/t^2 + S_ww/t'^2 - 2 S_vw/(t t'))). Needs a tracked pair
/// (or v == w) and at least one observation on each side.
double empirical_mmd(const EmbeddingState& state, AgentId v, AgentId w);

enum class MmdExponent { unsquared, squared };

/// exp(-MMD / (2 sigma_z^2)), or exp(-MMD^2 / (2 sigma_z^2)) when squared.
double empirical_network_kernel(const EmbeddingState& state, AgentId v, AgentId w, double sigma_z,
                                MmdExponent exponent = MmdExponent::unsquared);

/// Snapshot of the empirical network kernel, refreshed explicitly so that
/// regression states built on it stay consistent between refreshes.
/// Pairs that are untracked or lack data read 0 off the diagonal.
class EmpiricalNetworkKernel final : public AgentKernel {
 public:
  EmpiricalNetworkKernel(int agents, double sigma_z, MmdExponent exponent = MmdExponent::unsquared);

  double value(AgentId a, AgentId b) const override { return snapshot_(a, b); }
  void update(const EmbeddingState& state);
  const Matrix& matrix() const { return snapshot_; }
  double sigma_z() const { return sigma_z_; }

 private:
  Matrix snapshot_;
  double sigma_z_;
  MmdExponent exponent_;
};

}  // namespace kcb
