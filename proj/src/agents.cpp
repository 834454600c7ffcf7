#include "kcb/agents.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kcb {

namespace {

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void add(double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  void add(const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) add(v[i]);
  }
};

std::size_t uniform_index(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  return pick(rng);
}

int find_arm(std::span<const Vector> set, const Vector& x) {
  for (std::size_t i = 0; i < set.size(); ++i)
    if (set[i].size() == x.size() && set[i] == x) return static_cast<int>(i);
  return -1;
}

}  // namespace

PolicyKind parse_policy(const std::string& name) {
  if (name == "coop") return PolicyKind::coop;
  if (name == "eager") return PolicyKind::eager;
  if (name == "dist") return PolicyKind::dist;
  if (name == "independent") return PolicyKind::independent;
  if (name == "linucb") return PolicyKind::linucb;
  if (name == "naive") return PolicyKind::naive;
  if (name == "omniscient") return PolicyKind::omniscient;
  throw std::invalid_argument("unknown policy '" + name + "'");
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::coop: return "coop";
    case PolicyKind::eager: return "eager";
    case PolicyKind::dist: return "dist";
    case PolicyKind::independent: return "independent";
    case PolicyKind::linucb: return "linucb";
    case PolicyKind::naive: return "naive";
    case PolicyKind::omniscient: return "omniscient";
  }
  return "?";
}

bool uses_kernel_state(PolicyKind kind) { return kind != PolicyKind::linucb && kind != PolicyKind::omniscient; }

std::size_t argmax_lowest_index(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("argmax of an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

int default_gamma(const DistanceMatrix& distances) {
  const int diam = distances.diameter();
  if (diam == std::numeric_limits<int>::max()) throw GraphError("graph is disconnected; gamma is undefined");
  return std::max(1, (diam + 1) / 2);
}

NetworkSetup::NetworkSetup(Graph g, int gamma_)
    : graph(std::move(g)),
      distances(all_pairs_distances(graph)),
      gamma(gamma_),
      power(graph_power(graph, distances, gamma_)),
      cover(greedy_clique_cover(power)) {
  const auto weights = neighborhood_weights(power);
  std::vector<int> degrees(power.vertex_count());
  for (int v = 0; v < power.vertex_count(); ++v) degrees[v] = power.degree(v);
  centrals = assign_peripherals(power, greedy_max_weight_independent_set(power, weights), degrees, distances);
}

std::size_t select_action(const Regressor& state, const Vector& z, AgentId agent,
                          std::span<const Vector> decision_set, int round, const UcbParams& params, Rng& rng) {
  if (decision_set.empty()) throw std::invalid_argument("select_action: empty decision set");
  if (round <= 1 || state.size() == 0) return uniform_index(decision_set.size(), rng);
  const double beta = confidence_multiplier(state, params);
  std::vector<double> scores(decision_set.size());
  for (std::size_t i = 0; i < decision_set.size(); ++i) {
    const auto p = state.predict({z, decision_set[i], agent});
    scores[i] = p.mean + beta * std::sqrt(p.variance);
  }
  return argmax_lowest_index(scores);
}

std::vector<Message> accept_messages(const AgentState& agent, PolicyKind kind, std::span<const Message> messages,
                                     const CliqueCover& cover) {
  std::vector<Message> out;
  switch (kind) {
    case PolicyKind::coop: {
      const int mine = cover.clique_of.at(agent.id);
      for (const auto& m : messages)
        if (cover.clique_of.at(m.origin) == mine) out.push_back(m);
      break;
    }
    case PolicyKind::eager:
    case PolicyKind::naive:
      out.assign(messages.begin(), messages.end());
      break;
    case PolicyKind::dist:
      if (agent.central) out.assign(messages.begin(), messages.end());
      break;
    case PolicyKind::independent:
    case PolicyKind::linucb:
    case PolicyKind::omniscient:
      break;
  }
  return out;
}

LinUcbState::LinUcbState(int dim, double lambda) : lambda_(lambda) {
  if (dim < 1) throw std::invalid_argument("LinUCB dimension must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("regularizer lambda must be positive");
  a_inv_ = Matrix::Identity(dim, dim) / lambda_;
  b_ = Vector::Zero(dim);
}

void LinUcbState::update(const Vector& x, double y) {
  if (x.size() != b_.size()) throw std::invalid_argument("LinUCB context dimension mismatch");
  const Vector u = a_inv_ * x;
  a_inv_ -= (u * u.transpose()) / (1.0 + x.dot(u));
  b_ += y * x;
  ++n_;
}

double LinUcbState::score(const Vector& x, double alpha) const {
  const Vector u = a_inv_ * x;
  return u.dot(b_) + alpha * std::sqrt(std::max(0.0, x.dot(u)));
}

std::size_t linucb_select(const LinUcbState& state, std::span<const Vector> decision_set, double alpha, Rng& rng) {
  if (decision_set.empty()) throw std::invalid_argument("linucb_select: empty decision set");
  if (state.size() == 0) return uniform_index(decision_set.size(), rng);
  std::vector<double> scores(decision_set.size());
  for (std::size_t i = 0; i < decision_set.size(); ++i) scores[i] = state.score(decision_set[i], alpha);
  return argmax_lowest_index(scores);
}

KzMode parse_kz_mode(const std::string& name) {
  if (name == "oracle") return KzMode::oracle;
  if (name == "empirical") return KzMode::empirical;
  throw std::invalid_argument("unknown K_z mode '" + name + "'");
}

std::string to_string(KzMode mode) { return mode == KzMode::oracle ? "oracle" : "empirical"; }

Matrix oracle_network_kernel(const NetworkContexts& contexts) {
  const auto n = static_cast<Eigen::Index>(contexts.z.size());
  Matrix k(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) k(a, b) = contexts.z[a].dot(contexts.z[b]);
  return k;
}

PolicyRun run_policy(PolicyKind kind, const BanditEnvironment& env, const NetworkSetup& net,
                     const PolicyOptions& options, int rounds, std::uint64_t master_seed, std::uint64_t trial) {
  if (rounds < 1) throw std::invalid_argument("need at least one round");
  const int agents = env.agents();
  if (agents != net.graph.vertex_count()) throw std::invalid_argument("environment and graph agent counts differ");
  if (kind == PolicyKind::dist && !env.decision_spec().fixed)
    throw std::invalid_argument("dist requires a fixed decision set (set fixed_decision_set = true)");
  options.ucb.validate();

  const bool kernel_policy = uses_kernel_state(kind);
  const bool empirical = kernel_policy && options.kz_mode == KzMode::empirical;

  std::shared_ptr<EmpiricalNetworkKernel> kz_hat;
  std::unique_ptr<EmbeddingState> embedding;
  std::shared_ptr<const ComposedKernel> kernel;
  if (empirical) {
    kz_hat = std::make_shared<EmpiricalNetworkKernel>(agents, options.sigma_z, options.mmd_exponent);
    embedding = std::make_unique<EmbeddingState>(agents, options.kernel_x);
    kernel = std::make_shared<const ComposedKernel>(kz_hat, options.kernel_x);
  } else {
    kernel = std::make_shared<const ComposedKernel>(KernelSpec::linear(), options.kernel_x);
  }

  std::vector<AgentState> state(agents);
  std::vector<LinUcbState> lin;
  for (AgentId v = 0; v < agents; ++v) {
    auto& a = state[v];
    a.id = v;
    a.z = env.network_context(v);
    a.clique = net.cover.clique_of.at(v);
    if (kind == PolicyKind::dist) {
      a.central = net.centrals.is_central.at(v);
      a.central_of = net.centrals.central_of.at(v);
      a.delay = net.centrals.delay.at(v);
    }
    if (kernel_policy) a.regressor = make_regressor(*kernel, options.lambda, empirical ? Solver::dual : options.solver);
    if (kind == PolicyKind::linucb) lin.emplace_back(env.decision_spec().dim, options.lambda);
  }

  // Every pair that can meet inside one agent's Gram matrix, so each agent
  // sees a fully estimated (PSD) block of the snapshot.
  if (embedding) {
    for (AgentId v = 0; v < agents; ++v) {
      std::vector<int> group;
      if (kind == PolicyKind::coop) {
        group = net.cover.cliques.at(state[v].clique);
      } else if (kind == PolicyKind::eager || (kind == PolicyKind::dist && state[v].central)) {
        group = net.power.neighbors(v);
        group.push_back(v);
      }
      for (std::size_t i = 0; i < group.size(); ++i)
        for (std::size_t j = i + 1; j < group.size(); ++j) embedding->track(group[i], group[j]);
    }
  }

  const bool messaging = kind == PolicyKind::coop || kind == PolicyKind::eager || kind == PolicyKind::naive ||
                         kind == PolicyKind::dist;
  MessageBus bus(net.distances, net.gamma);

  PolicyRun run;
  run.kind = kind;
  run.group_regret.assign(rounds, 0.0);
  run.actions.assign(agents, std::vector<int>(rounds, -1));
  run.points.assign(agents, {});
  run.chosen_variance.assign(agents, std::vector<double>(rounds, std::numeric_limits<double>::quiet_NaN()));
  run.state_size.assign(agents, std::vector<std::size_t>(rounds, 0));
  for (auto& p : run.points) p.reserve(rounds);

  Fnv1a digest;
  std::vector<std::vector<Message>> inbox(agents);
  std::vector<double> own_y(agents);
  std::vector<AugmentedContext> batch_points;
  std::vector<double> batch_y;

  for (int t = 1; t <= rounds; ++t) {
    if (messaging)
      for (AgentId v = 0; v < agents; ++v) inbox[v] = bus.deliver(t, v);

    for (AgentId v = 0; v < agents; ++v) {
      auto& a = state[v];
      const auto set = env.decision_set(v, t);
      for (const auto& x : set) digest.add(x);
      auto rng = make_stream(master_seed, Purpose::explore, trial, static_cast<std::uint64_t>(v),
                             static_cast<std::uint64_t>(t));

      const auto f = env.arm_values(v, set);
      std::size_t arm = 0;
      if (kind == PolicyKind::omniscient) {
        arm = argmax_lowest_index(f);
      } else if (kind == PolicyKind::linucb) {
        arm = linucb_select(lin[v], set, options.ucb.eta, rng);
      } else {
        if (kind == PolicyKind::dist && !a.central) {
          for (const auto& m : inbox[v])
            if (m.origin == a.central_of && m.round == t - a.delay) a.last_central_arm = find_arm(set, m.payload.x);
        }
        if (kind == PolicyKind::dist && !a.central && t > a.delay) {
          if (a.last_central_arm < 0) throw std::logic_error("dist peripheral has no central action to replay");
          arm = static_cast<std::size_t>(a.last_central_arm);
        } else {
          arm = select_action(*a.regressor, a.z, v, set, t, options.ucb, rng);
        }
      }

      const Vector& x = set[arm];
      const double noise = env.noise(v, t);
      digest.add(noise);
      const double y = f[arm] + noise;
      run.group_regret[t - 1] += *std::max_element(f.begin(), f.end()) - f[arm];
      run.actions[v][t - 1] = static_cast<int>(arm);
      const AugmentedContext point = env.augment(v, x);
      if (kernel_policy) run.chosen_variance[v][t - 1] = a.regressor->predict_variance(point);
      run.points[v].push_back(point);
      own_y[v] = y;
      if (messaging) bus.broadcast({t, v, point, y});
      if (embedding) embedding->observe(v, x);
    }

    for (AgentId v = 0; v < agents; ++v) {
      auto& a = state[v];
      if (kind == PolicyKind::linucb) {
        lin[v].update(run.points[v].back().x, own_y[v]);
        run.state_size[v][t - 1] = lin[v].size();
        continue;
      }
      if (!kernel_policy) continue;
      batch_points.assign(1, run.points[v].back());
      batch_y.assign(1, own_y[v]);
      if (messaging) {
        for (auto& m : accept_messages(a, kind, inbox[v], net.cover)) {
          if (kind == PolicyKind::naive) {
            m.payload.z = a.z;
            m.payload.agent = v;
          }
          batch_points.push_back(std::move(m.payload));
          batch_y.push_back(m.reward);
          ++run.messages_incorporated;
        }
        inbox[v].clear();
      }
      a.regressor->incorporate_batch(batch_points, batch_y);
      run.state_size[v][t - 1] = a.regressor->size();
    }

    if (empirical && (t == 1 || t % std::max(1, options.kz_refresh) == 0)) {
      kz_hat->update(*embedding);
      for (auto& a : state) a.regressor->refresh();
    }
  }

  run.environment_digest = digest.h;
  run.network_kernel = empirical ? kz_hat->matrix() : oracle_network_kernel(env.contexts());
  run.kernel = kernel;
  return run;
}

}  // namespace kcb
