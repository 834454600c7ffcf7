#include "kcb/kernel.hpp"

#include <cmath>

namespace kcb {

void KernelSpec::validate() const {
  switch (family) {
    case KernelFamily::linear:
      return;
    case KernelFamily::rbf:
      if (!(bandwidth > 0.0)) throw KernelError("rbf bandwidth must be positive");
      return;
    case KernelFamily::matern:
      if (!(lengthscale > 0.0)) throw KernelError("matern lengthscale must be positive");
      if (nu != 0.5 && nu != 1.5 && nu != 2.5)
        throw KernelError("matern smoothness must be one of 0.5, 1.5, 2.5");
      return;
  }
}

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "linear") return KernelFamily::linear;
  if (name == "rbf" || name == "gaussian") return KernelFamily::rbf;
  if (name == "matern") return KernelFamily::matern;
  throw KernelError("unknown kernel family '" + name + "'");
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::linear: return "linear";
    case KernelFamily::rbf: return "rbf";
    case KernelFamily::matern: return "matern";
  }
  return "?";
}

double eval_kernel(const KernelSpec& spec, const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw KernelError("kernel inputs differ in dimension: " + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()));
  switch (spec.family) {
    case KernelFamily::linear:
      return a.dot(b);
    case KernelFamily::rbf: {
      if (!(spec.bandwidth > 0.0)) throw KernelError("rbf bandwidth must be positive");
      const double sq = (a - b).squaredNorm();
      return std::exp(-sq / (2.0 * spec.bandwidth * spec.bandwidth));
    }
    case KernelFamily::matern: {
      if (!(spec.lengthscale > 0.0)) throw KernelError("matern lengthscale must be positive");
      const double r = (a - b).norm() / spec.lengthscale;
      if (spec.nu == 0.5) return std::exp(-r);
      if (spec.nu == 1.5) {
        const double s = std::sqrt(3.0) * r;
        return (1.0 + s) * std::exp(-s);
      }
      if (spec.nu == 2.5) {
        const double s = std::sqrt(5.0) * r;
        return (1.0 + s + s * s / 3.0) * std::exp(-s);
      }
      throw KernelError("matern smoothness must be one of 0.5, 1.5, 2.5");
    }
  }
  throw KernelError("unknown kernel family");
}

ComposedKernel::ComposedKernel(KernelSpec network, KernelSpec action)
    : network_(network), action_(action) {
  network.validate();
  action.validate();
}

ComposedKernel::ComposedKernel(std::shared_ptr<const AgentKernel> network, KernelSpec action)
    : agent_kernel_(std::move(network)), action_(action) {
  if (!agent_kernel_) throw KernelError("agent kernel handle is null");
  action.validate();
}

double ComposedKernel::network_value(const AugmentedContext& p, const AugmentedContext& q) const {
  if (agent_kernel_) return agent_kernel_->value(p.agent, q.agent);
  return eval_kernel(*network_, p.z, q.z);
}

bool ComposedKernel::has_finite_features() const {
  return network_ && network_->family == KernelFamily::linear &&
         action_.family == KernelFamily::linear;
}

Vector ComposedKernel::features(const AugmentedContext& p) const {
  const auto nz = p.z.size();
  const auto nx = p.x.size();
  Vector phi(nz * nx);
  for (Eigen::Index i = 0; i < nz; ++i) phi.segment(i * nx, nx) = p.z[i] * p.x;
  return phi;
}

double eval_composed(const ComposedKernel& kernel, const AugmentedContext& p, const AugmentedContext& q) {
  return kernel(p, q);
}

Matrix build_gram(const ComposedKernel& kernel, std::span<const AugmentedContext> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel(points[i], points[j]);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Matrix gram_compose(const Matrix& a, const Matrix& b, GramComposition mode) {
  switch (mode) {
    case GramComposition::hadamard:
    case GramComposition::sum:
      if (a.rows() != b.rows() || a.cols() != b.cols())
        throw KernelError("gram_compose: shapes differ for entrywise composition");
      return mode == GramComposition::hadamard ? Matrix(a.cwiseProduct(b)) : Matrix(a + b);
    case GramComposition::kronecker: {
      Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
          out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
      return out;
    }
  }
  throw KernelError("unknown composition");
}

int numerical_rank(const Matrix& g, double tol) {
  if (g.size() == 0) throw KernelError("numerical_rank: empty matrix");
  if (!(tol > 0.0)) throw KernelError("numerical_rank: tolerance must be positive");
  Eigen::BDCSVD<Matrix> svd(g);
  const auto& s = svd.singularValues();
  const double top = s.size() ? s[0] : 0.0;
  if (top <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > tol * top) ++rank;
  return rank;
}

double min_eigenvalue(const Matrix& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace kcb
