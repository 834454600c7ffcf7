#include "kcb/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kcb {

GroundTruth::GroundTruth(ComposedKernel kernel, std::vector<AugmentedContext> anchors, Vector weights)
    : kernel_(std::move(kernel)), anchors_(std::move(anchors)), weights_(std::move(weights)) {
  if (anchors_.empty()) throw std::invalid_argument("ground truth needs at least one anchor");
  if (static_cast<Eigen::Index>(anchors_.size()) != weights_.size())
    throw std::invalid_argument("ground truth anchor and weight counts differ");
}

double GroundTruth::operator()(const AugmentedContext& p) const {
  double f = 0.0;
  for (std::size_t j = 0; j < anchors_.size(); ++j) f += weights_[static_cast<Eigen::Index>(j)] * kernel_(p, anchors_[j]);
  return f;
}

GroundTruth::Slice GroundTruth::slice(const Vector& z, AgentId agent) const {
  Slice s;
  s.action_ = kernel_.action_spec();
  s.weights_.resize(weights_.size());
  for (std::size_t j = 0; j < anchors_.size(); ++j) {
    const AugmentedContext probe{z, anchors_[j].x, agent};
    s.weights_[static_cast<Eigen::Index>(j)] = weights_[static_cast<Eigen::Index>(j)] * kernel_.network_value(probe, anchors_[j]);
    s.anchors_x_.push_back(anchors_[j].x);
  }
  s.linear_ = s.action_.family == KernelFamily::linear;
  if (s.linear_) {
    s.theta_ = Vector::Zero(anchors_.front().x.size());
    for (std::size_t j = 0; j < anchors_.size(); ++j) s.theta_ += s.weights_[static_cast<Eigen::Index>(j)] * anchors_[j].x;
  }
  return s;
}

double GroundTruth::Slice::operator()(const Vector& x) const {
  if (linear_) {
    if (x.size() != theta_.size()) throw KernelError("action context dimension mismatch");
    return theta_.dot(x);
  }
  double f = 0.0;
  for (std::size_t j = 0; j < anchors_x_.size(); ++j)
    f += weights_[static_cast<Eigen::Index>(j)] * eval_kernel(action_, x, anchors_x_[j]);
  return f;
}

double GroundTruth::rkhs_norm() const {
  const Matrix k = build_gram(kernel_, anchors_);
  return std::sqrt(std::max(0.0, weights_.dot(k * weights_)));
}

Vector sample_unit_sphere(int dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  double norm = 0.0;
  while (norm < 1e-12) {
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
    norm = v.norm();
  }
  return v / norm;
}

Vector sample_unit_ball(int dim, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Vector dir = sample_unit_sphere(dim, rng);
  const double radius = std::pow(unif(rng), 1.0 / dim);
  return radius * dir;
}

GroundTruth make_ground_truth(const ComposedKernel& kernel, int anchors, double norm_bound,
                              std::span<const Vector> network_contexts, int action_dim, std::uint64_t seed) {
  if (anchors < 1) throw std::invalid_argument("ground truth needs m >= 1 anchors");
  if (!(norm_bound > 0.0)) throw std::invalid_argument("RKHS norm bound B must be positive");
  if (network_contexts.empty()) throw std::invalid_argument("ground truth needs network contexts");

  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(Purpose::ground_truth), attempt}));
    std::uniform_int_distribution<std::size_t> pick(0, network_contexts.size() - 1);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<AugmentedContext> pts;
    pts.reserve(anchors);
    for (int j = 0; j < anchors; ++j) {
      const std::size_t owner = pick(rng);
      Vector x = sample_unit_ball(action_dim, rng);
      pts.push_back({network_contexts[owner], std::move(x), static_cast<AgentId>(owner)});
    }
    Vector alpha(anchors);
    for (int j = 0; j < anchors; ++j) alpha[j] = normal(rng);

    const Matrix k = build_gram(kernel, pts);
    const double norm = std::sqrt(std::max(0.0, alpha.dot(k * alpha)));
    if (norm < 1e-9) continue;  // degenerate draw
    alpha *= norm_bound / norm;
    return GroundTruth(kernel, std::move(pts), std::move(alpha));
  }
  throw std::runtime_error("could not draw a non-degenerate ground truth");
}

double reward(const GroundTruth& truth, const AugmentedContext& point, double noise_scale, Rng& rng) {
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("noise scale R must be non-negative");
  const double f = truth(point);
  if (noise_scale == 0.0) return f;
  std::normal_distribution<double> normal(0.0, noise_scale);
  return f + normal(rng);
}

double instant_regret(const GroundTruth& truth, const Vector& z, AgentId agent,
                      std::span<const Vector> decision_set, std::size_t chosen) {
  if (decision_set.empty()) throw std::invalid_argument("instant_regret: empty decision set");
  if (chosen >= decision_set.size()) throw std::out_of_range("instant_regret: chosen index out of range");
  double best = -std::numeric_limits<double>::infinity();
  double picked = 0.0;
  for (std::size_t i = 0; i < decision_set.size(); ++i) {
    const double f = truth({z, decision_set[i], agent});
    best = std::max(best, f);
    if (i == chosen) picked = f;
  }
  return best - picked;
}

ContextModel parse_context_model(const std::string& name) {
  if (name == "identical") return ContextModel::identical;
  if (name == "clustered") return ContextModel::clustered;
  if (name == "random-unit" || name == "random_unit") return ContextModel::random_unit;
  throw std::invalid_argument("unknown network-context model '" + name + "'");
}

std::string to_string(ContextModel model) {
  switch (model) {
    case ContextModel::identical: return "identical";
    case ContextModel::clustered: return "clustered";
    case ContextModel::random_unit: return "random-unit";
  }
  return "?";
}

std::vector<int> independent_set_clusters(const Graph& gpow) {
  const int n = gpow.vertex_count();
  std::vector<int> cluster(n, -1);
  std::vector<int> remaining(n);
  std::iota(remaining.begin(), remaining.end(), 0);
  int colour = 0;
  while (!remaining.empty()) {
    // Induced subgraph on the remaining vertices, relabelled 0..k-1.
    std::vector<int> local(n, -1);
    for (std::size_t i = 0; i < remaining.size(); ++i) local[remaining[i]] = static_cast<int>(i);
    std::vector<Edge> e;
    for (int v : remaining)
      for (int w : gpow.neighbors(v))
        if (local[w] > local[v]) e.emplace_back(local[v], local[w]);
    const auto sub = Graph::unchecked(static_cast<int>(remaining.size()), e);
    const auto chosen = greedy_max_weight_independent_set(sub, neighborhood_weights(sub));
    for (int c : chosen) cluster[remaining[c]] = colour;
    std::erase_if(remaining, [&](int v) { return cluster[v] >= 0; });
    ++colour;
  }
  return cluster;
}

NetworkContexts gen_network_contexts(const NetworkContextModel& model, int agents, const Graph& gpow,
                                     std::uint64_t seed) {
  if (agents < 1) throw std::invalid_argument("need at least one agent");
  NetworkContexts out;
  out.cluster.assign(agents, 0);
  switch (model.mode) {
    case ContextModel::identical:
      out.z.assign(agents, Vector::Ones(1));
      break;
    case ContextModel::clustered: {
      const double rho = model.cluster_similarity;
      if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("cluster similarity must lie in [0, 1]");
      out.cluster = independent_set_clusters(gpow);
      if (model.max_clusters > 0)
        for (auto& c : out.cluster) c %= model.max_clusters;
      const int count = *std::max_element(out.cluster.begin(), out.cluster.end()) + 1;
      for (int v = 0; v < agents; ++v) {
        Vector z = Vector::Zero(1 + count);
        z[0] = std::sqrt(rho);
        z[1 + out.cluster[v]] = std::sqrt(1.0 - rho);
        out.z.push_back(std::move(z));
      }
      break;
    }
    case ContextModel::random_unit: {
      if (model.dim < 1) throw std::invalid_argument("network context dimension must be positive");
      for (int v = 0; v < agents; ++v) {
        auto rng = make_stream(seed, Purpose::network_contexts, 0, static_cast<std::uint64_t>(v), 0);
        out.z.push_back(sample_unit_sphere(model.dim, rng));
        out.cluster[v] = v;
      }
      break;
    }
  }
  return out;
}

void DecisionSetSpec::validate() const {
  if (arms < 1) throw std::invalid_argument("decision sets need k >= 1 arms");
  if (dim < 1) throw std::invalid_argument("action dimension must be positive");
}

std::vector<Vector> sample_decision_set(const DecisionSetSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<Vector> out;
  out.reserve(spec.arms);
  for (int i = 0; i < spec.arms; ++i) out.push_back(sample_unit_ball(spec.dim, rng));
  return out;
}

BanditEnvironment::BanditEnvironment(GroundTruth truth, NetworkContexts contexts, DecisionSetSpec decisions,
                                     double noise_scale, std::uint64_t master_seed, std::uint64_t trial)
    : truth_(std::move(truth)),
      contexts_(std::move(contexts)),
      decisions_(decisions),
      noise_scale_(noise_scale),
      master_seed_(master_seed),
      trial_(trial) {
  decisions_.validate();
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("noise scale R must be non-negative");
  if (decisions_.fixed) {
    auto rng = make_stream(master_seed_, Purpose::decision_set, trial_, 0, 0);
    fixed_set_ = sample_decision_set(decisions_, rng);
  }
  for (AgentId v = 0; v < agents(); ++v) slices_.push_back(truth_.slice(contexts_.z[v], v));
}

std::vector<double> BanditEnvironment::arm_values(AgentId v, std::span<const Vector> decision_set) const {
  const auto& f = slices_.at(v);
  std::vector<double> out;
  out.reserve(decision_set.size());
  for (const auto& x : decision_set) out.push_back(f(x));
  return out;
}

double BanditEnvironment::regret(AgentId v, std::span<const Vector> decision_set, std::size_t chosen) const {
  if (decision_set.empty()) throw std::invalid_argument("regret: empty decision set");
  if (chosen >= decision_set.size()) throw std::out_of_range("regret: chosen index out of range");
  const auto f = arm_values(v, decision_set);
  return *std::max_element(f.begin(), f.end()) - f[chosen];
}

std::vector<Vector> BanditEnvironment::decision_set(AgentId v, int round) const {
  if (decisions_.fixed) return fixed_set_;
  auto rng = make_stream(master_seed_, Purpose::decision_set, trial_, static_cast<std::uint64_t>(v),
                         static_cast<std::uint64_t>(round));
  return sample_decision_set(decisions_, rng);
}

double BanditEnvironment::noise(AgentId v, int round) const {
  if (noise_scale_ == 0.0) return 0.0;
  auto rng = make_stream(master_seed_, Purpose::noise, trial_, static_cast<std::uint64_t>(v),
                         static_cast<std::uint64_t>(round));
  std::normal_distribution<double> normal(0.0, noise_scale_);
  return normal(rng);
}

}  // namespace kcb
