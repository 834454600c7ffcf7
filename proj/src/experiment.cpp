#include "kcb/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace kcb {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename F>
auto wrap(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

}  // namespace

std::string normalize_key(std::string_view key) {
  std::string out = trim(key);
  for (auto& c : out) c = c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  while (!out.empty() && out.front() == '_') out.erase(out.begin());
  return out;
}

ConfigMap parse_config_text(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  ConfigMap out;
  auto add = [&](const std::string& raw, const std::string& value) {
    const std::string key = normalize_key(raw);
    if (key.empty()) throw ConfigError("config: empty key");
    if (!out.emplace(key, trim(value)).second) throw ConfigError("config: duplicate key '" + key + "'");
  };
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      add(name, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) add(key, leaf.data());
  }
  return out;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ExperimentConfig config_from_map(const ConfigMap& map) {
  ExperimentConfig c;
  for (const auto& [raw_key, value] : map) {
    const std::string key = normalize_key(raw_key);
    auto as_int = [&] { return parse_number<int>(key, value); };
    auto as_double = [&] { return parse_number<double>(key, value); };

    if (key == "graph") {
      c.graph = value;
    } else if (key == "v" || key == "agents") {
      c.agents = as_int();
    } else if (key == "p" || key == "edge_probability") {
      c.edge_probability = as_double();
    } else if (key == "edge_list") {
      c.edge_list = value;
      if (!value.empty()) c.graph = "edge-list";
    } else if (key == "subsample") {
      c.subsample = as_int();
    } else if (key == "gamma") {
      c.gamma = value == "auto" ? 0 : as_int();
    } else if (key == "t" || key == "rounds") {
      c.rounds = as_int();
    } else if (key == "trials") {
      c.trials = as_int();
    } else if (key == "policies") {
      c.policies.clear();
      for (const auto& name : split_list(value)) c.policies.push_back(wrap(key, [&] { return parse_policy(name); }));
    } else if (key == "kernel_x") {
      c.kernel_x.family = wrap(key, [&] { return parse_kernel_family(value); });
    } else if (key == "bandwidth") {
      c.kernel_x.bandwidth = as_double();
    } else if (key == "lengthscale") {
      c.kernel_x.lengthscale = as_double();
    } else if (key == "nu") {
      c.kernel_x.nu = as_double();
    } else if (key == "kz_mode") {
      c.kz_mode = wrap(key, [&] { return parse_kz_mode(value); });
    } else if (key == "sigma_z") {
      c.sigma_z = as_double();
    } else if (key == "mmd") {
      if (value == "squared") c.mmd_exponent = MmdExponent::squared;
      else if (value == "unsquared") c.mmd_exponent = MmdExponent::unsquared;
      else throw ConfigError("config key 'mmd': expected squared or unsquared");
    } else if (key == "kz_refresh") {
      c.kz_refresh = as_int();
    } else if (key == "arms" || key == "k") {
      c.arms = as_int();
    } else if (key == "dim") {
      c.dim = as_int();
    } else if (key == "fixed_decision_set") {
      c.fixed_decision_set = parse_bool(key, value);
    } else if (key == "lambda") {
      c.lambda = as_double();
    } else if (key == "eta") {
      c.eta = as_double();
    } else if (key == "b") {
      c.norm_bound = as_double();
    } else if (key == "r") {
      c.noise_scale = as_double();
    } else if (key == "delta") {
      c.delta = as_double();
    } else if (key == "beta") {
      if (value == "theoretical") c.theoretical_beta = true;
      else if (value == "scaled") c.theoretical_beta = false;
      else throw ConfigError("config key 'beta': expected scaled or theoretical");
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "contexts") {
      c.contexts.mode = wrap(key, [&] { return parse_context_model(value); });
    } else if (key == "z_dim") {
      c.contexts.dim = as_int();
    } else if (key == "cluster_similarity") {
      c.contexts.cluster_similarity = as_double();
    } else if (key == "max_clusters") {
      c.contexts.max_clusters = as_int();
    } else if (key == "anchors") {
      c.anchors = as_int();
    } else if (key == "threads") {
      c.threads = as_int();
    } else if (key == "solver") {
      c.solver = wrap(key, [&] { return parse_solver(value); });
    } else if (key == "out") {
      c.out = value;
    } else if (key == "metrics_out") {
      c.metrics_out = value;
    } else {
      throw ConfigError("unknown config key '" + raw_key + "'");
    }
  }
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(graph == "erdos-renyi" || graph == "edge-list" || graph == "complete" || graph == "path" || graph == "star",
          "graph must be erdos-renyi, edge-list, complete, path or star");
  require(graph != "edge-list" || !edge_list.empty(), "graph = edge-list needs edge_list = <path>");
  require(graph == "edge-list" || agents >= 2, "V must be at least 2");
  require(edge_probability > 0.0 && edge_probability <= 1.0, "p must lie in (0, 1]");
  require(subsample >= 0, "subsample must be non-negative");
  require(gamma >= 0, "gamma must be >= 1 (or 0 / auto for ceil(diameter/2))");
  require(rounds >= 1, "T must be >= 1");
  require(trials >= 1, "trials must be >= 1");
  require(lambda > 0.0, "lambda must be positive");
  require(eta >= 0.0, "eta must be non-negative");
  require(norm_bound > 0.0, "B must be positive");
  require(noise_scale >= 0.0, "R must be non-negative");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  require(arms >= 1, "arms must be >= 1");
  require(dim >= 1, "dim must be >= 1");
  require(sigma_z > 0.0, "sigma_z must be positive");
  require(kz_refresh >= 1, "kz_refresh must be >= 1");
  require(anchors >= 1, "anchors must be >= 1");
  require(threads >= 1, "threads must be >= 1");
  require(contexts.dim >= 1, "z_dim must be >= 1");
  require(contexts.cluster_similarity >= 0.0 && contexts.cluster_similarity <= 1.0,
          "cluster_similarity must lie in [0, 1]");
  require(contexts.max_clusters >= 0, "max_clusters must be non-negative");
  wrap("kernel_x", [&] {
    kernel_x.validate();
    return 0;
  });
  const auto pols = resolved_policies();
  require(fixed_decision_set || std::find(pols.begin(), pols.end(), PolicyKind::dist) == pols.end(),
          "policy dist requires fixed_decision_set = true");
  require(solver != Solver::primal || (kernel_x.family == KernelFamily::linear && kz_mode == KzMode::oracle),
          "solver = primal needs kernel_x = linear and kz_mode = oracle");
}

std::vector<PolicyKind> ExperimentConfig::resolved_policies() const {
  if (!policies.empty()) return policies;
  std::vector<PolicyKind> out{PolicyKind::coop, PolicyKind::eager, PolicyKind::naive, PolicyKind::independent,
                              PolicyKind::linucb};
  if (fixed_decision_set) out.push_back(PolicyKind::dist);
  return out;
}

PolicyOptions ExperimentConfig::policy_options() const {
  PolicyOptions o;
  o.lambda = lambda;
  o.ucb.eta = eta;
  o.ucb.theoretical = theoretical_beta;
  o.ucb.norm_bound = norm_bound;
  o.ucb.noise_scale = noise_scale;
  o.ucb.delta = delta;
  o.ucb.agents = 1;
  o.kernel_x = kernel_x;
  o.kz_mode = kz_mode;
  o.sigma_z = sigma_z;
  o.mmd_exponent = mmd_exponent;
  o.kz_refresh = kz_refresh;
  o.solver = solver;
  return o;
}

NetworkSetup build_network(const ExperimentConfig& cfg) {
  Graph g = [&] {
    if (cfg.graph == "edge-list") return load_edge_list_file(cfg.edge_list, {cfg.subsample});
    if (cfg.graph == "complete") return Graph::complete(cfg.agents);
    if (cfg.graph == "path") return Graph::path(cfg.agents);
    if (cfg.graph == "star") return Graph::star(cfg.agents);
    return gen_erdos_renyi(cfg.agents, cfg.edge_probability, cfg.seed);
  }();
  const int gamma = cfg.gamma > 0 ? cfg.gamma : default_gamma(all_pairs_distances(g));
  return NetworkSetup(std::move(g), gamma);
}

BanditEnvironment make_environment(const ExperimentConfig& cfg, const NetworkSetup& net, int trial) {
  const auto t = static_cast<std::uint64_t>(trial);
  const int agents = net.graph.vertex_count();
  auto contexts = gen_network_contexts(
      cfg.contexts, agents, net.power,
      derive_seed(cfg.seed, {static_cast<std::uint64_t>(Purpose::network_contexts), t}));
  const ComposedKernel kernel(KernelSpec::linear(), cfg.kernel_x);
  auto truth = make_ground_truth(kernel, cfg.anchors, cfg.norm_bound, contexts.z, cfg.dim,
                                 derive_seed(cfg.seed, {static_cast<std::uint64_t>(Purpose::ground_truth), t}));
  return BanditEnvironment(std::move(truth), std::move(contexts), {cfg.arms, cfg.dim, cfg.fixed_decision_set},
                           cfg.noise_scale, cfg.seed, t);
}

std::vector<CliqueBoundCheck> variance_bound_checks(const PolicyRun& run, const NetworkSetup& net, double lambda,
                                                    double norm_bound, int trial) {
  std::vector<CliqueBoundCheck> out;
  const int rounds = run.group_regret.empty() ? 0 : static_cast<int>(run.group_regret.size());
  for (std::size_t c = 0; c < net.cover.cliques.size(); ++c) {
    const auto& members = net.cover.cliques[c];
    CliqueBoundCheck chk;
    chk.trial = trial;
    chk.clique = static_cast<int>(c);
    chk.size = static_cast<int>(members.size());
    std::vector<AugmentedContext> pts;
    for (int v : members) {
      for (int t = std::max(1, net.gamma); t <= rounds; ++t) chk.measured += run.chosen_variance.at(v).at(t - 1);
      pts.insert(pts.end(), run.points.at(v).begin(), run.points.at(v).end());
    }
    chk.log_det = log_det_gram(*run.kernel, pts, lambda);
    chk.bound = net.gamma * chk.size * norm_bound + std::max(1.0, 1.0 / lambda) * chk.log_det;
    chk.holds = chk.measured <= chk.bound * (1.0 + 1e-6);
    out.push_back(chk);
  }
  return out;
}

TrialResult run_trial(const ExperimentConfig& cfg, const NetworkSetup& net, int trial) {
  const auto env = make_environment(cfg, net, trial);
  const auto options = cfg.policy_options();
  const double agents = net.graph.vertex_count();

  TrialResult res;
  res.trial = trial;
  res.policies = cfg.resolved_policies();
  bool have_kernel = false;
  for (PolicyKind kind : res.policies) {
    const auto run = run_policy(kind, env, net, options, cfg.rounds, cfg.seed, static_cast<std::uint64_t>(trial));
    std::vector<double> cum(run.group_regret.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < cum.size(); ++t) {
      acc += run.group_regret[t];
      cum[t] = acc / agents;
    }
    res.cumulative.push_back(std::move(cum));
    res.digests.push_back(run.environment_digest);
    if (kind == PolicyKind::coop) {
      auto checks = variance_bound_checks(run, net, cfg.lambda, cfg.norm_bound, trial);
      res.bound_checks.insert(res.bound_checks.end(), checks.begin(), checks.end());
    }
    if (!have_kernel && uses_kernel_state(kind) && kind != PolicyKind::naive) {
      res.network_kernel = run.network_kernel;
      have_kernel = true;
    }
  }
  if (!have_kernel) res.network_kernel = oracle_network_kernel(env.contexts());
  return res;
}

void aggregate_traces(const std::vector<std::vector<double>>& traces, std::vector<double>& mean,
                      std::vector<double>& stddev) {
  if (traces.empty()) throw std::invalid_argument("aggregate: no traces");
  const std::size_t n = traces.front().size();
  for (const auto& t : traces)
    if (t.size() != n) throw std::invalid_argument("aggregate: traces have mismatched lengths");
  mean.assign(n, 0.0);
  stddev.assign(n, 0.0);
  const double k = static_cast<double>(traces.size());
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& t : traces) s += t[i];
    const double m = s / k;
    double ss = 0.0;
    for (const auto& t : traces) ss += (t[i] - m) * (t[i] - m);
    mean[i] = m;
    stddev[i] = std::sqrt(ss / k);
  }
}

RegretTrace aggregate(const std::vector<TrialResult>& trials) {
  if (trials.empty()) throw std::invalid_argument("aggregate: no trials");
  auto kinds = trials.front().policies;
  std::sort(kinds.begin(), kinds.end(), [](PolicyKind a, PolicyKind b) { return to_string(a) < to_string(b); });
  RegretTrace out;
  for (PolicyKind kind : kinds) {
    PolicyTrace p{kind, {}, {}, {}};
    for (const auto& tr : trials) {
      const auto it = std::find(tr.policies.begin(), tr.policies.end(), kind);
      if (it == tr.policies.end()) throw std::invalid_argument("aggregate: trial lacks policy " + to_string(kind));
      p.raw.push_back(tr.cumulative[static_cast<std::size_t>(it - tr.policies.begin())]);
    }
    aggregate_traces(p.raw, p.mean, p.stddev);
    out.policies.push_back(std::move(p));
  }
  return out;
}

void write_csv(const RegretTrace& trace, std::ostream& out) {
  out << "round,policy,mean_per_agent_regret,std_per_agent_regret\n";
  if (trace.policies.empty()) return;
  const std::size_t rounds = trace.policies.front().mean.size();
  char buf[128];
  for (std::size_t t = 0; t < rounds; ++t)
    for (const auto& p : trace.policies) {
      std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g\n", t + 1, to_string(p.kind).c_str(), p.mean.at(t),
                    p.stddev.at(t));
      out << buf;
    }
}

void write_csv(const RegretTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(trace, out);
  out.flush();
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult res{build_network(cfg), {}, {}};
  res.trials.resize(cfg.trials);

  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(cfg.trials);
  auto worker = [&] {
    for (int i = next++; i < cfg.trials; i = next++) {
      try {
        res.trials[i] = run_trial(cfg, res.network, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::min(cfg.threads, cfg.trials);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  res.trace = aggregate(res.trials);
  return res;
}

nlohmann::json metrics_report(const ExperimentConfig& cfg, const ExperimentResult& result) {
  using nlohmann::json;
  const auto& net = result.network;
  json j;
  j["graph"] = {{"vertices", net.graph.vertex_count()},
                {"edges", net.graph.edge_count()},
                {"diameter", net.distances.diameter()},
                {"gamma", net.gamma}};
  j["clique_cover"] = {{"size", net.cover.size()}, {"cliques", net.cover.cliques}};
  j["independent_set"] = {{"size", net.centrals.centrals.size()}, {"members", net.centrals.centrals}};

  const Matrix& kz = result.trials.front().network_kernel;
  j["network_kernel"] = {{"mode", to_string(cfg.kz_mode)},
                         {"upsilon_z", numerical_rank(kz)},
                         {"min_eigenvalue", min_eigenvalue(kz)}};

  json final = json::object();
  for (const auto& p : result.trace.policies)
    final[to_string(p.kind)] = {{"mean", p.mean.back()}, {"std", p.stddev.back()}};
  j["final_per_agent_regret"] = final;

  bool paired = true;
  for (const auto& tr : result.trials)
    for (auto d : tr.digests) paired = paired && d == tr.digests.front();
  j["paired_environments"] = paired;

  json checks = json::array();
  bool all_hold = true;
  for (const auto& tr : result.trials)
    for (const auto& c : tr.bound_checks) {
      checks.push_back({{"trial", c.trial},
                        {"clique", c.clique},
                        {"size", c.size},
                        {"measured", c.measured},
                        {"information_gain", c.log_det},
                        {"bound", c.bound},
                        {"holds", c.holds}});
      all_hold = all_hold && c.holds;
    }
  j["variance_bound"] = {{"checks", checks}, {"all_hold", all_hold}};
  return j;
}

}  // namespace kcb
