#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kcb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using AgentId = int;

/// Raised for invalid kernel parameters or mismatched inputs.
class KernelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class KernelFamily { linear, rbf, matern };

// Matérn is supported for nu in {1/2, 3/2, 5/2} only (closed forms).
struct KernelSpec {
  KernelFamily family = KernelFamily::rbf;
  double bandwidth = 1.0;
  double lengthscale = 1.0;
  double nu = 2.5;

  static KernelSpec linear() { return {KernelFamily::linear, 1.0, 1.0, 2.5}; }
  static KernelSpec rbf(double bandwidth) { return {KernelFamily::rbf, bandwidth, 1.0, 2.5}; }
  static KernelSpec matern(double lengthscale, double nu) {
    return {KernelFamily::matern, 1.0, lengthscale, nu};
  }

  void validate() const;
};

KernelFamily parse_kernel_family(const std::string& name);
std::string to_string(KernelFamily family);

/// K(a, b) for one of the supported families.
double eval_kernel(const KernelSpec& spec, const Vector& a, const Vector& b);

/// Network context z, action context x, and the agent that owns z.
/// The agent id is what an empirical network kernel keys on.
struct AugmentedContext {
  Vector z;
  Vector x;
  AgentId agent = -1;
};

/// Network kernel defined directly on agent ids (for instance an
/// estimate built from observed contexts). Implementations must be
/// symmetric and return 1 on the diagonal.
class AgentKernel {
 public:
  virtual ~AgentKernel() = default;
  virtual double value(AgentId a, AgentId b) const = 0;
};

/// K((z,x),(z',x')) = K_z(z,z') * K_x(x,x').
///
/// K_z is either a KernelSpec on the z vectors or an AgentKernel looked up
/// by agent id. The AgentKernel is held by shared_ptr and may change
/// between calls; the composed kernel itself never mutates.
class ComposedKernel {
 public:
  ComposedKernel(KernelSpec network, KernelSpec action);
  ComposedKernel(std::shared_ptr<const AgentKernel> network, KernelSpec action);

  double operator()(const AugmentedContext& p, const AugmentedContext& q) const {
    return network_value(p, q) * eval_kernel(action_, p.x, q.x);
  }

  double network_value(const AugmentedContext& p, const AugmentedContext& q) const;
  double action_value(const Vector& x, const Vector& y) const { return eval_kernel(action_, x, y); }

  const KernelSpec& action_spec() const { return action_; }
  const std::optional<KernelSpec>& network_spec() const { return network_; }
  bool uses_agent_kernel() const { return agent_kernel_ != nullptr; }

  /// Both factors linear: K is the dot product of z (x) x, so an explicit
  /// feature map of dimension dim(z)*dim(x) exists.
  bool has_finite_features() const;
  /// Kronecker feature vector z (x) x. Only valid when has_finite_features().
  Vector features(const AugmentedContext& p) const;

 private:
  std::optional<KernelSpec> network_;
  std::shared_ptr<const AgentKernel> agent_kernel_;
  KernelSpec action_;
};

double eval_composed(const ComposedKernel& kernel, const AugmentedContext& p, const AugmentedContext& q);

/// Symmetric n x n matrix of pairwise composed-kernel values.
Matrix build_gram(const ComposedKernel& kernel, std::span<const AugmentedContext> points);

enum class GramComposition { hadamard, sum, kronecker };

Matrix gram_compose(const Matrix& a, const Matrix& b, GramComposition mode);

/// Number of singular values above tol * (largest singular value).
int numerical_rank(const Matrix& g, double tol = 1e-8);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& g);

}  // namespace kcb
