#include "doctest.h"

#include "kcb/environment.hpp"
#include "kcb/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace kcb;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// sqrt(alpha^T K alpha), evaluated from scratch.
double quadratic_norm(const GroundTruth& gt) {
  const auto& c = gt.anchors();
  const Vector& a = gt.weights();
  double q = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) q += a[i] * a[j] * gt.kernel()(c[i], c[j]);
  return std::sqrt(q);
}

BanditEnvironment small_env(ContextModel mode, bool fixed, double noise, std::uint64_t seed) {
  const Graph g = Graph::path(6);
  NetworkContextModel m;
  m.mode = mode;
  m.dim = 4;
  auto contexts = gen_network_contexts(m, 6, graph_power(g, 1), seed);
  const ComposedKernel k(KernelSpec::linear(), KernelSpec::rbf(1.0));
  auto truth = make_ground_truth(k, 20, 1.0, contexts.z, 3, seed);
  DecisionSetSpec spec;
  spec.arms = 5;
  spec.dim = 3;
  spec.fixed = fixed;
  return BanditEnvironment(std::move(truth), std::move(contexts), spec, noise, seed, 0);
}

}  // namespace

TEST_CASE("single-anchor ground truth") {
  const ComposedKernel k(KernelSpec::linear(), KernelSpec::rbf(1.0));
  const std::vector<Vector> zs{vec({1.0})};
  const auto gt = make_ground_truth(k, 1, 2.5, zs, 3, 8);
  REQUIRE(gt.anchors().size() == 1);
  const auto& c = gt.anchors()[0];
  CHECK(std::abs(gt.weights()[0]) * std::sqrt(k(c, c)) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(gt(c) == doctest::Approx(gt.weights()[0] * k(c, c)).epsilon(1e-12));
  CHECK(gt.rkhs_norm() == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("ground-truth norm matches the quadratic form") {
  const ComposedKernel kernels[] = {
      ComposedKernel(KernelSpec::linear(), KernelSpec::linear()),
      ComposedKernel(KernelSpec::rbf(1.0), KernelSpec::rbf(0.7)),
      ComposedKernel(KernelSpec::linear(), KernelSpec::matern(1.0, 1.5)),
  };
  Rng rng(4);
  std::vector<Vector> zs;
  for (int v = 0; v < 5; ++v) zs.push_back(sample_unit_sphere(3, rng));
  for (const auto& k : kernels)
    for (int m : {1, 2, 7, 20, 50}) {
      const auto gt = make_ground_truth(k, m, 1.7, zs, 4, 100 + m);
      CHECK(std::abs(quadratic_norm(gt) - 1.7) <= 1e-10);
      for (const auto& c : gt.anchors()) CHECK(c.x.norm() <= 1.0 + 1e-12);
    }
  CHECK_THROWS(make_ground_truth(kernels[0], 0, 1.0, zs, 4, 1));
  CHECK_THROWS(make_ground_truth(kernels[0], 3, 0.0, zs, 4, 1));
}

TEST_CASE("slices agree with direct evaluation") {
  const ComposedKernel kernels[] = {ComposedKernel(KernelSpec::linear(), KernelSpec::linear()),
                                    ComposedKernel(KernelSpec::rbf(0.9), KernelSpec::matern(0.8, 2.5))};
  Rng rng(12);
  std::vector<Vector> zs;
  for (int v = 0; v < 4; ++v) zs.push_back(sample_unit_sphere(2, rng));
  for (const auto& k : kernels) {
    const auto gt = make_ground_truth(k, 15, 1.0, zs, 3, 77);
    for (int v = 0; v < 4; ++v) {
      const auto s = gt.slice(zs[v], v);
      for (int i = 0; i < 10; ++i) {
        const Vector x = sample_unit_ball(3, rng);
        CHECK(s(x) == doctest::Approx(gt({zs[v], x, v})).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("reward noise") {
  const ComposedKernel k(KernelSpec::linear(), KernelSpec::rbf(1.0));
  const std::vector<Vector> zs{vec({1.0})};
  const auto gt = make_ground_truth(k, 10, 1.0, zs, 2, 3);
  const AugmentedContext p{vec({1.0}), vec({0.2, -0.1}), 0};
  Rng r0(1);
  CHECK(reward(gt, p, 0.0, r0) == gt(p));

  const double big_r = 0.5;
  const int n = 100000;
  Rng rng(2);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += reward(gt, p, big_r, rng);
  CHECK(std::abs(sum / n - gt(p)) <= 4.0 * big_r / std::sqrt(static_cast<double>(n)));

  Rng a(5), b(5);
  for (int i = 0; i < 20; ++i) CHECK(reward(gt, p, big_r, a) == reward(gt, p, big_r, b));
}

TEST_CASE("instant regret") {
  // Linear F(x) = theta . x with a single anchor: F values 0.3 and 0.7.
  const ComposedKernel k(KernelSpec::linear(), KernelSpec::linear());
  const GroundTruth gt(k, {{vec({1.0}), vec({1.0, 0.0}), 0}}, vec({1.0}));
  const std::vector<Vector> set{vec({0.3, 0.5}), vec({0.7, -0.2})};
  CHECK(instant_regret(gt, vec({1.0}), 0, set, 0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(instant_regret(gt, vec({1.0}), 0, set, 1) == 0.0);
  CHECK_THROWS(instant_regret(gt, vec({1.0}), 0, std::vector<Vector>{}, 0));
}

TEST_CASE("network context models") {
  const Graph g = gen_erdos_renyi(20, 0.2, 6);
  const Graph g2 = graph_power(g, 2);

  const auto same = gen_network_contexts({}, 20, g2, 1);
  for (const auto& z : same.z) CHECK(z == vec({1.0}));

  NetworkContextModel cm;
  cm.mode = ContextModel::clustered;
  const auto cl = gen_network_contexts(cm, 20, g2, 1);
  const int clusters = *std::max_element(cl.cluster.begin(), cl.cluster.end()) + 1;
  Matrix kz(20, 20);
  for (int a = 0; a < 20; ++a)
    for (int b = 0; b < 20; ++b) kz(a, b) = cl.z[a].dot(cl.z[b]);
  CHECK(numerical_rank(kz) <= clusters);
  for (int a = 0; a < 20; ++a) {
    CHECK(cl.z[a].norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (int b = 0; b < 20; ++b) {
      if (cl.cluster[a] == cl.cluster[b]) CHECK(cl.z[a] == cl.z[b]);
      else CHECK(kz(a, b) == doctest::Approx(0.5).epsilon(1e-12));
      // Clusters are independent sets of G_gamma.
      if (a != b && g2.adjacent(a, b)) CHECK(cl.cluster[a] != cl.cluster[b]);
    }
  }

  cm.max_clusters = 2;
  const auto capped = gen_network_contexts(cm, 20, g2, 1);
  CHECK(*std::max_element(capped.cluster.begin(), capped.cluster.end()) <= 1);

  NetworkContextModel rm;
  rm.mode = ContextModel::random_unit;
  rm.dim = 6;
  const auto ru = gen_network_contexts(rm, 20, g2, 9);
  for (const auto& z : ru.z) {
    CHECK(z.size() == 6);
    CHECK(std::abs(z.norm() - 1.0) <= 1e-12);
  }
  CHECK(parse_context_model("random-unit") == ContextModel::random_unit);
  CHECK(to_string(parse_context_model("clustered")) == "clustered");
  CHECK_THROWS(parse_context_model("ring"));
}

TEST_CASE("decision sets lie in the unit ball") {
  Rng rng(10);
  DecisionSetSpec spec;
  for (int rep = 0; rep < 200; ++rep) {
    const auto set = sample_decision_set(spec, rng);
    CHECK(set.size() == 8);
    for (const auto& x : set) {
      CHECK(x.size() == 10);
      CHECK(x.norm() <= 1.0);
    }
  }
  spec.arms = 0;
  CHECK_THROWS(spec.validate());
}

TEST_CASE("environment streams are deterministic and fixed sets stay fixed") {
  const auto a = small_env(ContextModel::random_unit, false, 0.1, 3);
  const auto b = small_env(ContextModel::random_unit, false, 0.1, 3);
  for (int v = 0; v < 6; ++v)
    for (int t = 1; t <= 5; ++t) {
      CHECK(a.decision_set(v, t) == b.decision_set(v, t));
      CHECK(a.noise(v, t) == b.noise(v, t));
    }
  CHECK(a.decision_set(0, 1) != a.decision_set(0, 2));
  CHECK(a.decision_set(0, 1) != a.decision_set(1, 1));

  const auto f = small_env(ContextModel::identical, true, 0.1, 3);
  for (int v = 0; v < 6; ++v)
    for (int t = 1; t <= 5; ++t) CHECK(f.decision_set(v, t) == f.decision_set(0, 1));

  const auto quiet = small_env(ContextModel::clustered, false, 0.0, 3);
  const auto set = quiet.decision_set(2, 4);
  CHECK(quiet.observe(2, 4, set[1]) == quiet.expected_reward(2, set[1]));
}

TEST_CASE("omniscient play has zero regret") {
  const auto env = small_env(ContextModel::clustered, false, 0.1, 21);
  for (int v = 0; v < env.agents(); ++v)
    for (int t = 1; t <= 30; ++t) {
      const auto set = env.decision_set(v, t);
      const auto f = env.arm_values(v, set);
      const auto best = static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
      CHECK(env.regret(v, set, best) == 0.0);
      for (std::size_t i = 0; i < set.size(); ++i) {
        CHECK(env.regret(v, set, i) >= 0.0);
        CHECK(f[i] == doctest::Approx(env.truth()(env.augment(v, set[i]))).epsilon(1e-12));
        CHECK(env.regret(v, set, i) ==
              doctest::Approx(instant_regret(env.truth(), env.network_context(v), v, set, i)).epsilon(1e-12));
      }
    }
}
