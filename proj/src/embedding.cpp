#include "kcb/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kcb {

EmbeddingState::EmbeddingState(int agents, KernelSpec action_kernel)
    : spec_(action_kernel), history_(agents), self_(agents, 0.0), partners_(agents) {
  if (agents < 1) throw std::invalid_argument("embedding state needs at least one agent");
  spec_.validate();
}

void EmbeddingState::check(AgentId v) const {
  if (v < 0 || v >= agents()) throw std::out_of_range("agent id " + std::to_string(v) + " out of range");
}

void EmbeddingState::track(AgentId v, AgentId w) {
  check(v);
  check(w);
  if (v == w || tracked(v, w)) return;
  double s = 0.0;
  for (const auto& a : history_[v])
    for (const auto& b : history_[w]) s += eval_kernel(spec_, a, b);
  cross_.emplace(key(v, w), s);
  partners_[v].push_back(w);
  partners_[w].push_back(v);
}

bool EmbeddingState::tracked(AgentId v, AgentId w) const { return cross_.count(key(v, w)) > 0; }

std::vector<AgentId> EmbeddingState::partners(AgentId v) const {
  check(v);
  auto out = partners_[v];
  std::sort(out.begin(), out.end());
  return out;
}

double EmbeddingState::cross_sum(AgentId v, AgentId w) const {
  if (v == w) return self_sum(v);
  const auto it = cross_.find(key(v, w));
  if (it == cross_.end())
    throw std::invalid_argument("pair (" + std::to_string(v) + ", " + std::to_string(w) + ") is not tracked");
  return it->second;
}

void EmbeddingState::observe(AgentId v, const Vector& x) {
  check(v);
  if (!history_[v].empty() && history_[v].front().size() != x.size())
    throw KernelError("action context dimension changed for agent " + std::to_string(v));
  double own = 0.0;
  for (const auto& a : history_[v]) own += eval_kernel(spec_, a, x);
  self_[v] += 2.0 * own + eval_kernel(spec_, x, x);
  for (AgentId w : partners_[v]) {
    double s = 0.0;
    for (const auto& b : history_[w]) s += eval_kernel(spec_, x, b);
    cross_[key(v, w)] += s;
  }
  history_[v].push_back(x);
}

double empirical_mmd(const EmbeddingState& state, AgentId v, AgentId w) {
  const double t = state.count(v);
  const double u = state.count(w);
  if (t == 0 || u == 0) throw std::invalid_argument("MMD needs at least one observation per agent");
  if (v == w) return 0.0;
  const double sq = state.self_sum(v) / (t * t) + state.self_sum(w) / (u * u) - 2.0 * state.cross_sum(v, w) / (t * u);
  return std::sqrt(std::max(0.0, sq));
}

double empirical_network_kernel(const EmbeddingState& state, AgentId v, AgentId w, double sigma_z,
                                MmdExponent exponent) {
  if (!(sigma_z > 0.0)) throw std::invalid_argument("sigma_z must be positive");
  const double mmd = empirical_mmd(state, v, w);
  const double d = exponent == MmdExponent::squared ? mmd * mmd : mmd;
  return std::exp(-d / (2.0 * sigma_z * sigma_z));
}

EmpiricalNetworkKernel::EmpiricalNetworkKernel(int agents, double sigma_z, MmdExponent exponent)
    : snapshot_(Matrix::Identity(agents, agents)), sigma_z_(sigma_z), exponent_(exponent) {
  if (!(sigma_z > 0.0)) throw std::invalid_argument("sigma_z must be positive");
}

void EmpiricalNetworkKernel::update(const EmbeddingState& state) {
  if (state.agents() != snapshot_.rows()) throw std::invalid_argument("embedding state agent count mismatch");
  snapshot_.setIdentity();
  for (AgentId v = 0; v < state.agents(); ++v) {
    if (state.count(v) == 0) continue;
    for (AgentId w : state.partners(v)) {
      if (w < v || state.count(w) == 0) continue;
      const double k = empirical_network_kernel(state, v, w, sigma_z_, exponent_);
      snapshot_(v, w) = k;
      snapshot_(w, v) = k;
    }
  }
}

}  // namespace kcb
