#pragma once

#include "kcb/kernel.hpp"

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace kcb {

/// Signals numerical corruption of a regression state (non-positive Schur
/// complement, variance well below zero, failed refactorization).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exploration settings for the UCB index.
///
/// Default mode scales the posterior standard deviation by eta/sqrt(lambda).
/// Theoretical mode uses the self-normalized confidence radius
///   B + (R/sqrt(lambda)) * sqrt(log det(I + K/lambda) + 2 log(agents/delta)).
struct UcbParams {
  double eta = 1.0;
  bool theoretical = false;
  double norm_bound = 1.0;   // B
  double noise_scale = 0.1;  // R
  double delta = 0.1;
  int agents = 1;

  void validate() const;
};

inline constexpr double kVarianceClampTolerance = 1e-10;
inline constexpr std::size_t kDefaultRefreshInterval = 512;

/// Kernel ridge regression with regularizer lambda, grown one observation at
/// a time. Implementations agree exactly in exact arithmetic; they differ in
/// what they store.
class Regressor {
 public:
  virtual ~Regressor() = default;

  virtual std::size_t size() const = 0;
  virtual double lambda() const = 0;
  virtual const ComposedKernel& kernel() const = 0;

  virtual void incorporate(const AugmentedContext& point, double y) = 0;
  /// Same final state as incorporating the points one by one, in order.
  virtual void incorporate_batch(std::span<const AugmentedContext> points, std::span<const double> y);
  /// Mean and variance proxy at `point`. An empty state returns the prior
  /// (mean 0, variance K(p,p)).
  virtual Prediction predict(const AugmentedContext& point) const = 0;
  /// log det(I + K/lambda) over the stored points.
  virtual double log_det_regularized() const = 0;

  virtual std::unique_ptr<Regressor> clone() const = 0;
  /// Rebuild derived quantities from the stored data and current kernel values.
  virtual void refresh() = 0;

  double predict_mean(const AugmentedContext& point) const { return predict(point).mean; }
  double predict_variance(const AugmentedContext& point) const { return predict(point).variance; }
};

/// Dual form: stores the points and M = (K + lambda I)^-1, grown by
/// Schur-complement block updates in O(n^2) per point. M is rebuilt from a
/// dense Cholesky solve every `refresh_interval` incorporations.
class RegressionState final : public Regressor {
 public:
  RegressionState(ComposedKernel kernel, double lambda, std::size_t refresh_interval = kDefaultRefreshInterval);

  std::size_t size() const override { return n_; }
  double lambda() const override { return lambda_; }
  const ComposedKernel& kernel() const override { return kernel_; }

  void incorporate(const AugmentedContext& point, double y) override;
  Prediction predict(const AugmentedContext& point) const override;
  double log_det_regularized() const override;
  std::unique_ptr<Regressor> clone() const override { return std::make_unique<RegressionState>(*this); }

  /// Full symmetric copy of M.
  Matrix inverse() const;
  Vector rewards() const;
  const std::vector<AugmentedContext>& points() const { return points_; }

  /// Recompute M from the current kernel values by dense factorization.
  void refresh() override;

 private:
  void reserve(Eigen::Index capacity);
  Vector kernel_column(const AugmentedContext& point) const;

  ComposedKernel kernel_;
  double lambda_;
  std::size_t refresh_interval_;
  std::size_t since_refresh_ = 0;

  std::vector<AugmentedContext> points_;
  std::vector<double> y_;
  Eigen::Index n_ = 0;
  Matrix m_;       // lower triangle of the leading n x n block is authoritative
  Vector alpha_;   // M y, leading n entries
  double log_det_shifted_ = 0.0;  // log det(K + lambda I)
};

RegressionState init_state(const AugmentedContext& point, double y, double lambda, const ComposedKernel& kernel);

/// Primal form for kernels with an explicit finite feature map phi:
/// keeps A^-1 = (Phi^T Phi + lambda I)^-1 (both triangles) and Phi^T y.
/// Batches use a Woodbury update. Mean is
/// phi^T A^-1 Phi^T y and the variance proxy lambda * phi^T A^-1 phi, which
/// equal the dual expressions exactly.
class FeatureRegressionState final : public Regressor {
 public:
  FeatureRegressionState(ComposedKernel kernel, double lambda,
                         std::size_t refresh_interval = kDefaultRefreshInterval);

  std::size_t size() const override { return n_; }
  double lambda() const override { return lambda_; }
  const ComposedKernel& kernel() const override { return kernel_; }

  void incorporate(const AugmentedContext& point, double y) override;
  void incorporate_batch(std::span<const AugmentedContext> points, std::span<const double> y) override;
  Prediction predict(const AugmentedContext& point) const override;
  double log_det_regularized() const override { return log_det_; }
  std::unique_ptr<Regressor> clone() const override { return std::make_unique<FeatureRegressionState>(*this); }
  void refresh() override;

 private:
  void initialize(Eigen::Index dim);

  ComposedKernel kernel_;
  double lambda_;
  std::size_t refresh_interval_;
  std::size_t since_refresh_ = 0;

  std::size_t n_ = 0;
  Matrix a_inv_;
  Matrix gram_;   // Phi^T Phi, lower triangle authoritative
  Vector b_;
  double log_det_ = 0.0;
};

enum class Solver { automatic, dual, primal };

Solver parse_solver(const std::string& name);

/// automatic picks the primal form whenever the kernel has finite features.
std::unique_ptr<Regressor> make_regressor(const ComposedKernel& kernel, double lambda, Solver solver = Solver::automatic);

/// Multiplier applied to the posterior standard deviation.
double confidence_multiplier(const Regressor& state, const UcbParams& params);

double ucb_score(const Regressor& state, const AugmentedContext& point, const UcbParams& params);

/// log det(I + K/lambda) for the Gram matrix of `points`, via features when
/// available and a dense Cholesky factorization otherwise.
double log_det_gram(const ComposedKernel& kernel, std::span<const AugmentedContext> points, double lambda);

}  // namespace kcb
