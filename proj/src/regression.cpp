#include "kcb/regression.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace kcb {

namespace {

double clamp_variance(double v) {
  if (v >= 0.0) return v;
  if (v >= -kVarianceClampTolerance) return 0.0;
  throw NumericalError("negative posterior variance " + std::to_string(v));
}

// Indices of the nonzero entries of phi. Kronecker features of one-hot-like
// network contexts are mostly zero.
std::vector<Eigen::Index> support(const Vector& phi) {
  std::vector<Eigen::Index> nz;
  nz.reserve(static_cast<std::size_t>(phi.size()));
  for (Eigen::Index j = 0; j < phi.size(); ++j)
    if (phi[j] != 0.0) nz.push_back(j);
  return nz;
}

// A phi for a fully stored symmetric A, touching only the support of phi.
Vector sparse_product(const Matrix& a, const Vector& phi, const std::vector<Eigen::Index>& nz) {
  if (2 * nz.size() > static_cast<std::size_t>(phi.size())) return a * phi;
  Vector u = Vector::Zero(phi.size());
  for (Eigen::Index j : nz) u.noalias() += phi[j] * a.col(j);
  return u;
}

void add_outer(Matrix& lower, const Vector& phi, const std::vector<Eigen::Index>& nz) {
  for (Eigen::Index j : nz)
    for (Eigen::Index i : nz)
      if (i >= j) lower(i, j) += phi[i] * phi[j];
}

}  // namespace

void UcbParams::validate() const {
  if (!(eta >= 0.0)) throw std::invalid_argument("exploration scale eta must be non-negative");
  if (theoretical) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    if (agents < 1) throw std::invalid_argument("agent count must be positive");
    if (!(noise_scale >= 0.0) || !(norm_bound >= 0.0))
      throw std::invalid_argument("B and R must be non-negative");
  }
}

void Regressor::incorporate_batch(std::span<const AugmentedContext> points, std::span<const double> y) {
  if (points.size() != y.size()) throw std::invalid_argument("incorporate_batch: points and rewards differ in length");
  for (std::size_t i = 0; i < points.size(); ++i) incorporate(points[i], y[i]);
}

// ---------------------------------------------------------------- dual form

RegressionState::RegressionState(ComposedKernel kernel, double lambda, std::size_t refresh_interval)
    : kernel_(std::move(kernel)), lambda_(lambda), refresh_interval_(refresh_interval) {
  if (!(lambda > 0.0)) throw std::invalid_argument("regularizer lambda must be positive");
}

void RegressionState::reserve(Eigen::Index capacity) {
  if (capacity <= m_.rows()) return;
  Eigen::Index cap = std::max<Eigen::Index>(16, m_.rows());
  while (cap < capacity) cap *= 2;
  Matrix grown(cap, cap);
  grown.topLeftCorner(n_, n_) = m_.topLeftCorner(n_, n_);
  m_.swap(grown);
  Vector a(cap);
  a.head(n_) = alpha_.head(n_);
  alpha_.swap(a);
}

Vector RegressionState::kernel_column(const AugmentedContext& point) const {
  Vector k(n_);
  for (Eigen::Index i = 0; i < n_; ++i) k[i] = kernel_(points_[i], point);
  return k;
}

void RegressionState::incorporate(const AugmentedContext& point, double y) {
  const double kpp = kernel_(point, point);
  reserve(n_ + 1);

  if (n_ == 0) {
    const double s = kpp + lambda_;
    if (!(s > 0.0)) throw NumericalError("non-positive initial pivot");
    m_(0, 0) = 1.0 / s;
    alpha_[0] = y / s;
    log_det_shifted_ = std::log(s);
  } else {
    const Vector kappa = kernel_column(point);
    const auto block = m_.topLeftCorner(n_, n_);
    const Vector u = block.selfadjointView<Eigen::Lower>() * kappa;
    const double s = kpp + lambda_ - kappa.dot(u);
    if (!(s > 0.0))
      throw NumericalError("non-positive Schur complement " + std::to_string(s) + " at size " + std::to_string(n_));

    m_.topLeftCorner(n_, n_).selfadjointView<Eigen::Lower>().rankUpdate(u, 1.0 / s);
    m_.row(n_).head(n_) = -u.transpose() / s;
    m_(n_, n_) = 1.0 / s;

    double uy = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) uy += u[i] * y_[i];
    const double r = (y - uy) / s;
    alpha_.head(n_) -= r * u;
    alpha_[n_] = r;
    log_det_shifted_ += std::log(s);
  }

  points_.push_back(point);
  y_.push_back(y);
  ++n_;

  if (refresh_interval_ > 0 && ++since_refresh_ >= refresh_interval_) refresh();
}

void RegressionState::refresh() {
  since_refresh_ = 0;
  if (n_ == 0) return;
  Matrix a = build_gram(kernel_, points_);
  a.diagonal().array() += lambda_;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("regularized Gram matrix is not positive definite");
  const Matrix inv = llt.solve(Matrix::Identity(n_, n_));
  m_.topLeftCorner(n_, n_) = inv;
  const Eigen::Map<const Vector> y(y_.data(), n_);
  alpha_.head(n_) = inv * y;
  log_det_shifted_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Prediction RegressionState::predict(const AugmentedContext& point) const {
  const double kpp = kernel_(point, point);
  if (n_ == 0) return {0.0, kpp};
  const Vector kappa = kernel_column(point);
  const Vector u = m_.topLeftCorner(n_, n_).selfadjointView<Eigen::Lower>() * kappa;
  return {kappa.dot(alpha_.head(n_)), clamp_variance(kpp - kappa.dot(u))};
}

double RegressionState::log_det_regularized() const {
  return log_det_shifted_ - static_cast<double>(n_) * std::log(lambda_);
}

Matrix RegressionState::inverse() const {
  Matrix full = m_.topLeftCorner(n_, n_).selfadjointView<Eigen::Lower>();
  return full;
}

Vector RegressionState::rewards() const { return Eigen::Map<const Vector>(y_.data(), n_); }

RegressionState init_state(const AugmentedContext& point, double y, double lambda, const ComposedKernel& kernel) {
  RegressionState s(kernel, lambda);
  s.incorporate(point, y);
  return s;
}

// -------------------------------------------------------------- primal form

FeatureRegressionState::FeatureRegressionState(ComposedKernel kernel, double lambda, std::size_t refresh_interval)
    : kernel_(std::move(kernel)), lambda_(lambda), refresh_interval_(refresh_interval) {
  if (!(lambda > 0.0)) throw std::invalid_argument("regularizer lambda must be positive");
  if (!kernel_.has_finite_features())
    throw std::invalid_argument("primal regression needs a kernel with an explicit feature map");
}

void FeatureRegressionState::initialize(Eigen::Index dim) {
  a_inv_ = Matrix::Identity(dim, dim) / lambda_;
  gram_ = Matrix::Zero(dim, dim);
  b_ = Vector::Zero(dim);
}

void FeatureRegressionState::incorporate(const AugmentedContext& point, double y) {
  const Vector phi = kernel_.features(point);
  if (n_ == 0 && a_inv_.size() == 0) initialize(phi.size());
  if (phi.size() != b_.size()) throw KernelError("feature dimension changed between observations");

  const auto nz = support(phi);
  const Vector u = sparse_product(a_inv_, phi, nz);
  const double c = 1.0 + phi.dot(u);
  if (!(c > 0.0)) throw NumericalError("non-positive Sherman-Morrison pivot");
  a_inv_.noalias() -= (u / c) * u.transpose();
  add_outer(gram_, phi, nz);
  b_ += y * phi;
  log_det_ += std::log(c);
  ++n_;

  if (refresh_interval_ > 0 && ++since_refresh_ >= refresh_interval_) refresh();
}

void FeatureRegressionState::incorporate_batch(std::span<const AugmentedContext> points, std::span<const double> y) {
  if (points.size() != y.size()) throw std::invalid_argument("incorporate_batch: points and rewards differ in length");
  if (points.size() < 2) {
    if (!points.empty()) incorporate(points.front(), y.front());
    return;
  }
  const auto m = static_cast<Eigen::Index>(points.size());
  const Vector first = kernel_.features(points.front());
  if (n_ == 0 && a_inv_.size() == 0) initialize(first.size());
  const Eigen::Index d = b_.size();

  // Woodbury: A^-1 -= U S^-1 U^T with U = A^-1 Phi, S = I + Phi^T U.
  Matrix phi(d, m), u(d, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Vector f = k == 0 ? first : kernel_.features(points[static_cast<std::size_t>(k)]);
    if (f.size() != d) throw KernelError("feature dimension changed between observations");
    const auto nz = support(f);
    phi.col(k) = f;
    u.col(k) = sparse_product(a_inv_, f, nz);
    add_outer(gram_, f, nz);
    b_ += y[static_cast<std::size_t>(k)] * f;
  }
  Matrix s = phi.transpose() * u;
  s.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError("batch update matrix is not positive definite");
  const Matrix w = llt.matrixL().solve(u.transpose()).transpose();  // U L^-T
  a_inv_.noalias() -= w * w.transpose();
  log_det_ += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  n_ += static_cast<std::size_t>(m);

  since_refresh_ += static_cast<std::size_t>(m);
  if (refresh_interval_ > 0 && since_refresh_ >= refresh_interval_) refresh();
}

void FeatureRegressionState::refresh() {
  since_refresh_ = 0;
  Matrix a = gram_.selfadjointView<Eigen::Lower>();
  a.diagonal().array() += lambda_;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("regularized feature Gram is not positive definite");
  a_inv_ = llt.solve(Matrix::Identity(a.rows(), a.cols()));
  a_inv_ = (0.5 * (a_inv_ + a_inv_.transpose())).eval();
  log_det_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum() -
             static_cast<double>(a.rows()) * std::log(lambda_);
}

Prediction FeatureRegressionState::predict(const AugmentedContext& point) const {
  const Vector phi = kernel_.features(point);
  if (n_ == 0) return {0.0, phi.squaredNorm()};
  const Vector u = sparse_product(a_inv_, phi, support(phi));
  return {u.dot(b_), clamp_variance(lambda_ * phi.dot(u))};
}

// ----------------------------------------------------------------- helpers

Solver parse_solver(const std::string& name) {
  if (name == "auto" || name == "automatic") return Solver::automatic;
  if (name == "dual") return Solver::dual;
  if (name == "primal") return Solver::primal;
  throw std::invalid_argument("unknown solver '" + name + "'");
}

std::unique_ptr<Regressor> make_regressor(const ComposedKernel& kernel, double lambda, Solver solver) {
  const bool primal = solver == Solver::primal || (solver == Solver::automatic && kernel.has_finite_features());
  if (primal) return std::make_unique<FeatureRegressionState>(kernel, lambda);
  return std::make_unique<RegressionState>(kernel, lambda);
}

double confidence_multiplier(const Regressor& state, const UcbParams& params) {
  const double lambda = state.lambda();
  if (!params.theoretical) return params.eta / std::sqrt(lambda);
  const double info = std::max(0.0, state.log_det_regularized());
  const double conf = 2.0 * std::log(static_cast<double>(params.agents) / params.delta);
  return params.norm_bound + params.noise_scale / std::sqrt(lambda) * std::sqrt(info + conf);
}

double ucb_score(const Regressor& state, const AugmentedContext& point, const UcbParams& params) {
  const auto p = state.predict(point);
  return p.mean + confidence_multiplier(state, params) * std::sqrt(p.variance);
}

double log_det_gram(const ComposedKernel& kernel, std::span<const AugmentedContext> points, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("regularizer lambda must be positive");
  if (points.empty()) return 0.0;
  if (kernel.has_finite_features()) {
    const Eigen::Index dim = kernel.features(points.front()).size();
    Matrix g = Matrix::Zero(dim, dim);
    for (const auto& p : points) g.selfadjointView<Eigen::Lower>().rankUpdate(kernel.features(p), 1.0);
    Matrix a = g.selfadjointView<Eigen::Lower>();
    a /= lambda;
    a.diagonal().array() += 1.0;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) throw NumericalError("log_det_gram: factorization failed");
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  Matrix a = build_gram(kernel, points) / lambda;
  a.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("log_det_gram: factorization failed");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace kcb
