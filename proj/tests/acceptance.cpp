// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include "kcb/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace kcb;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

AugmentedContext random_point(int zdim, int xdim, AgentId agent, Rng& rng) {
  return {sample_unit_sphere(zdim, rng), sample_unit_ball(xdim, rng), agent};
}

// 1 -------------------------------------------------------------------------
Outcome schur_oracle() {
  const ComposedKernel k(KernelSpec::rbf(1.0), KernelSpec::rbf(1.0));
  const int checkpoints[] = {1, 2, 5, 10, 25, 50, 100, 150, 200};
  double worst = 0.0;
  for (int seq = 0; seq < 20; ++seq) {
    Rng rng(1000 + seq);
    RegressionState s(k, 1.0);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::size_t next = 0;
    for (int n = 1; n <= 200; ++n) {
      s.incorporate(random_point(3, 5, n % 7, rng), noise(rng));
      if (next < std::size(checkpoints) && n == checkpoints[next]) {
        ++next;
        Matrix dense = build_gram(k, s.points());
        dense.diagonal().array() += 1.0;
        const Matrix oracle = dense.inverse();
        worst = std::max(worst, (s.inverse() - oracle).cwiseAbs().maxCoeff());
      }
    }
  }
  return {worst <= 1e-8, fmt("20 sequences x 200 points, max |M - (K + I)^-1| = %.3g", worst)};
}

// 2 -------------------------------------------------------------------------
Outcome variance_monotone() {
  const ComposedKernel kernels[] = {ComposedKernel(KernelSpec::rbf(1.0), KernelSpec::rbf(1.0)),
                                    ComposedKernel(KernelSpec::linear(), KernelSpec::matern(1.0, 1.5)),
                                    ComposedKernel(KernelSpec::linear(), KernelSpec::linear())};
  double worst = -1.0;
  int pairs = 0;
  for (int rep = 0; rep < 100; ++rep, ++pairs) {
    Rng rng(5000 + rep);
    const auto& k = kernels[rep % 3];
    const double lambda = rep % 2 == 0 ? 1.0 : 0.3;
    auto s = make_regressor(k, lambda);
    const auto query = random_point(3, 4, 0, rng);
    double prev = s->predict_variance(query);
    for (int n = 0; n < 60; ++n) {
      s->incorporate(random_point(3, 4, n % 5, rng), 0.0);
      const double cur = s->predict_variance(query);
      worst = std::max(worst, cur - prev);
      prev = cur;
    }
  }
  return {worst <= 1e-10, fmt("%d growth/query pairs, largest increase %.3g", pairs, worst)};
}

// 3 -------------------------------------------------------------------------
Outcome coverage() {
  const int runs = 1000, rounds = 50;
  UcbParams u;
  u.theoretical = true;
  u.norm_bound = 1.0;
  u.noise_scale = 0.1;
  u.delta = 0.1;
  u.agents = 1;
  const ComposedKernel k(KernelSpec::linear(), KernelSpec::rbf(1.0));
  const DecisionSetSpec spec{8, 5, false};
  int covered = 0;
  for (int r = 0; r < runs; ++r) {
    NetworkContexts ctx{{Vector::Ones(1)}, {0}};
    auto truth = make_ground_truth(k, 20, 1.0, ctx.z, spec.dim, derive_seed(77, {static_cast<std::uint64_t>(r)}));
    const BanditEnvironment env(std::move(truth), std::move(ctx), spec, u.noise_scale, 77,
                                static_cast<std::uint64_t>(r));
    RegressionState s(k, 1.0);
    bool ok = true;
    for (int t = 1; t <= rounds && ok; ++t) {
      const auto set = env.decision_set(0, t);
      const double beta = confidence_multiplier(s, u);
      for (const auto& x : set) {
        const auto p = s.predict(env.augment(0, x));
        if (std::abs(env.expected_reward(0, x) - p.mean) > beta * std::sqrt(p.variance)) ok = false;
      }
      auto rng = make_stream(77, Purpose::explore, static_cast<std::uint64_t>(r), 0, static_cast<std::uint64_t>(t));
      const auto arm = select_action(s, env.network_context(0), 0, set, t, u, rng);
      s.incorporate(env.augment(0, set[arm]), env.observe(0, t, set[arm]));
    }
    covered += ok;
  }
  const double frac = static_cast<double>(covered) / runs;
  return {frac >= 0.9, fmt("envelope held in %d/%d runs (%.1f%%)", covered, runs, 100.0 * frac)};
}

// 4 -------------------------------------------------------------------------
Outcome clique_variance_bound() {
  struct Case {
    const char* name;
    std::function<void(ExperimentConfig&)> set;
  };
  const Case cases[] = {
      {"complete V=20 identical", [](ExperimentConfig& c) {
         c.graph = "complete";
         c.contexts.mode = ContextModel::identical;
       }},
      {"erdos-renyi V=20 p=0.3 gamma=2 clustered", [](ExperimentConfig& c) { c.gamma = 2; }},
      {"path V=8 gamma=2 rbf", [](ExperimentConfig& c) {
         c.graph = "path";
         c.agents = 8;
         c.gamma = 2;
         c.kernel_x = KernelSpec::rbf(1.0);
       }},
      {"star V=10 rbf random-unit", [](ExperimentConfig& c) {
         c.graph = "star";
         c.agents = 10;
         c.kernel_x = KernelSpec::rbf(1.0);
         c.contexts.mode = ContextModel::random_unit;
         c.contexts.dim = 3;
       }},
  };
  int checks = 0, violations = 0;
  double worst = 0.0;
  std::string worst_case;
  for (const auto& cs : cases) {
    ExperimentConfig cfg;
    cfg.rounds = 300;
    cfg.trials = 2;
    cfg.policies = {PolicyKind::coop};
    cs.set(cfg);
    const auto res = run_experiment(cfg);
    for (const auto& tr : res.trials)
      for (const auto& c : tr.bound_checks) {
        ++checks;
        violations += !c.holds;
        const double ratio = c.measured / c.bound;
        if (ratio > worst) {
          worst = ratio;
          worst_case = cs.name;
        }
      }
  }
  return {violations == 0, fmt("%d/%d clique checks hold; worst measured/bound = %.4f (%s)", checks - violations,
                               checks, worst, worst_case.c_str())};
}

// 5 -------------------------------------------------------------------------
int exhaustive_min_cover(const Graph& g) {
  const int n = g.vertex_count();
  std::vector<int> cls(n, -1);
  int best = n;
  auto rec = [&](auto& self, int v, int used) -> void {
    if (used >= best) return;
    if (v == n) {
      best = used;
      return;
    }
    for (int c = 0; c <= used && c < best; ++c) {
      bool ok = true;
      for (int w = 0; w < v && ok; ++w) ok = cls[w] != c || g.adjacent(v, w);
      if (!ok) continue;
      cls[v] = c;
      self(self, v + 1, std::max(used, c + 1));
    }
    cls[v] = -1;
  };
  rec(rec, 0, 0);
  return best;
}

Outcome graph_partitions() {
  Rng rng(2024);
  std::uniform_int_distribution<int> size(2, 24);
  std::uniform_real_distribution<double> prob(0.1, 0.9);
  std::uniform_int_distribution<int> gam(1, 3);
  int bad = 0, small = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = size(rng);
    const Graph g = gen_erdos_renyi(n, prob(rng), 31 * static_cast<std::uint64_t>(rep) + 1);
    const Graph gp = graph_power(g, gam(rng));
    const auto cover = greedy_clique_cover(gp);

    std::vector<int> seen(n, 0);
    for (std::size_t c = 0; c < cover.cliques.size(); ++c)
      for (int a : cover.cliques[c]) {
        ++seen[a];
        bad += cover.clique_of[a] != static_cast<int>(c);
        for (int b : cover.cliques[c]) bad += a != b && !gp.adjacent(a, b);
      }
    for (int s : seen) bad += s != 1;

    const auto is = greedy_max_weight_independent_set(gp, neighborhood_weights(gp));
    std::vector<bool> in(n, false);
    for (int v : is) in[v] = true;
    for (int a : is)
      for (int b : is) bad += a != b && gp.adjacent(a, b);
    for (int v = 0; v < n; ++v) {
      if (in[v]) continue;
      bool blocked = false;
      for (int w : gp.neighbors(v)) blocked = blocked || in[w];
      bad += !blocked;
    }
    if (n <= 10) {
      ++small;
      bad += static_cast<int>(cover.size()) < exhaustive_min_cover(gp);
    }
  }
  return {bad == 0, fmt("200 graphs (%d with V <= 10 checked exhaustively), %d violations", small, bad)};
}

// 6 -------------------------------------------------------------------------
Outcome mmd_oracle() {
  const KernelSpec k = KernelSpec::rbf(1.0);
  double worst_sum = 0.0;
  for (int h = 0; h < 50; ++h) {
    Rng rng(300 + h);
    EmbeddingState s(3, k);
    s.track(0, 1);
    s.track(1, 2);
    std::uniform_int_distribution<int> len(1, 60);
    for (AgentId v = 0; v < 3; ++v) {
      const int n = len(rng);
      for (int i = 0; i < n; ++i) s.observe(v, sample_unit_ball(4, rng));
    }
    auto brute = [&](AgentId a, AgentId b) {
      double t = 0.0;
      for (const auto& x : s.history(a))
        for (const auto& y : s.history(b)) t += eval_kernel(k, x, y);
      return t;
    };
    for (AgentId v = 0; v < 3; ++v) worst_sum = std::max(worst_sum, std::abs(s.self_sum(v) - brute(v, v)));
    worst_sum = std::max(worst_sum, std::abs(s.cross_sum(0, 1) - brute(0, 1)));
    worst_sum = std::max(worst_sum, std::abs(s.cross_sum(1, 2) - brute(1, 2)));
  }

  bool singleton_exact = true;
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    EmbeddingState s(2, k);
    s.track(0, 1);
    const Vector a = sample_unit_ball(4, rng), b = sample_unit_ball(4, rng);
    s.observe(0, a);
    s.observe(1, b);
    singleton_exact = singleton_exact && empirical_mmd(s, 0, 1) == std::sqrt(2.0 - 2.0 * eval_kernel(k, a, b));
  }

  double avg = 0.0;
  for (int seed = 0; seed < 50; ++seed) {
    Rng r(700 + seed);
    EmbeddingState s(2, k);
    s.track(0, 1);
    for (int t = 0; t < 500; ++t) {
      s.observe(0, sample_unit_ball(4, r));
      s.observe(1, sample_unit_ball(4, r));
    }
    avg += empirical_network_kernel(s, 0, 1, 1.0) / 50.0;
  }
  const bool pass = worst_sum <= 1e-9 && singleton_exact && avg >= 0.9;
  return {pass, fmt("sum error %.3g, singleton closed form %s, mean K_hat at t=500 = %.4f", worst_sum,
                    singleton_exact ? "exact" : "MISMATCH", avg)};
}

// 7, 8 ----------------------------------------------------------------------
const PolicyTrace& trace_of(const ExperimentResult& r, PolicyKind k) {
  for (const auto& p : r.trace.policies)
    if (p.kind == k) return p;
  throw std::logic_error("policy missing from trace");
}

Outcome cooperation_benefit() {
  ExperimentConfig cfg;
  cfg.graph = "complete";
  cfg.agents = 20;
  cfg.gamma = 1;
  cfg.contexts.mode = ContextModel::identical;
  cfg.rounds = 500;
  cfg.trials = 20;
  cfg.policies = {PolicyKind::coop, PolicyKind::independent};
  const auto res = run_experiment(cfg);
  const double coop = trace_of(res, PolicyKind::coop).mean.back();
  const double ind = trace_of(res, PolicyKind::independent).mean.back();
  return {coop <= 0.5 * ind, fmt("coop %.4f vs independent %.4f (ratio %.3f)", coop, ind, coop / ind)};
}

Outcome policy_ordering() {
  ExperimentConfig cfg;
  cfg.graph = "erdos-renyi";
  cfg.agents = 20;
  cfg.edge_probability = 0.3;
  cfg.gamma = 2;
  cfg.contexts.mode = ContextModel::clustered;
  cfg.rounds = 500;
  cfg.trials = 20;
  cfg.policies = {PolicyKind::eager, PolicyKind::coop, PolicyKind::naive, PolicyKind::independent};
  const auto res = run_experiment(cfg);
  const PolicyKind order[] = {PolicyKind::eager, PolicyKind::coop, PolicyKind::naive, PolicyKind::independent};
  bool pass = true;
  std::string detail;
  for (int i = 0; i < 4; ++i) {
    const auto& p = trace_of(res, order[i]);
    detail += fmt("%s%s %.4f+-%.4f", i ? " <= " : "", to_string(order[i]).c_str(), p.mean.back(), p.stddev.back());
    if (i == 0) continue;
    const auto& q = trace_of(res, order[i - 1]);
    const double pooled = std::sqrt(0.5 * (p.stddev.back() * p.stddev.back() + q.stddev.back() * q.stddev.back()));
    pass = pass && q.mean.back() <= p.mean.back() + pooled;
  }
  return {pass, detail};
}

// 9 -------------------------------------------------------------------------
Outcome dist_mimicry() {
  int peripherals = 0, mismatches = 0;
  for (const char* graph : {"star", "erdos-renyi"}) {
    ExperimentConfig cfg;
    cfg.graph = graph;
    cfg.agents = 12;
    cfg.fixed_decision_set = true;
    cfg.rounds = 150;
    const auto net = build_network(cfg);
    for (int trial = 0; trial < 3; ++trial) {
      const auto env = make_environment(cfg, net, trial);
      const auto run = run_policy(PolicyKind::dist, env, net, cfg.policy_options(), cfg.rounds, cfg.seed,
                                  static_cast<std::uint64_t>(trial));
      const auto& c = net.centrals;
      for (AgentId v = 0; v < net.graph.vertex_count(); ++v) {
        if (c.is_central[v]) continue;
        ++peripherals;
        const int d = c.delay[v];
        for (int t = d + 1; t <= cfg.rounds; ++t)
          mismatches += run.actions[v][t - 1] != run.actions[c.central_of[v]][t - 1 - d];
      }
    }
  }
  return {mismatches == 0 && peripherals > 0,
          fmt("%d peripheral logs on star and Erdos-Renyi graphs, %d mismatched rounds", peripherals, mismatches)};
}

// 10 ------------------------------------------------------------------------
Outcome determinism() {
  ExperimentConfig cfg;
  cfg.agents = 12;
  cfg.rounds = 120;
  cfg.trials = 4;
  cfg.fixed_decision_set = true;
  cfg.seed = 20240101;
  const std::string a = "acceptance_run_a.csv", b = "acceptance_run_b.csv";
  write_csv(run_experiment(cfg).trace, std::filesystem::path(a));
  cfg.threads = 3;
  write_csv(run_experiment(cfg).trace, std::filesystem::path(b));
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const std::string ca = slurp(a), cb = slurp(b);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
  return {!ca.empty() && ca == cb, fmt("two runs (1 and 3 threads), %zu bytes each, %s", ca.size(),
                                       ca == cb ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"incremental inverse matches dense inversion", schur_oracle},
      {"posterior variance never increases", variance_monotone},
      {"confidence envelope coverage", coverage},
      {"per-clique variance-sum bound", clique_variance_bound},
      {"clique cover and independent set validity", graph_partitions},
      {"MMD sums, closed form and concentration", mmd_oracle},
      {"full cooperation halves regret", cooperation_benefit},
      {"eager <= coop <= naive <= independent", policy_ordering},
      {"dist peripherals mimic their central", dist_mimicry},
      {"byte-identical CSV on re-run", determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("[%s] %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures;
}
