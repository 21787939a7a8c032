#include "optrlsvi/linalg.hpp"

#include <cmath>
#include <string>

#include "optrlsvi/errors.hpp"

namespace optrlsvi {

DesignState::DesignState(std::size_t dim, double lambda,
                         std::size_t recompute_period)
    : dim_(dim), lambda_(lambda), recompute_period_(recompute_period) {
  if (dim == 0) throw InvalidArgument("design dimension must be positive");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("ridge lambda must be positive, got " +
                          std::to_string(lambda));
  }
  if (recompute_period == 0) {
    throw InvalidArgument("recompute_period must be positive");
  }
  sigma_ = lambda * Matrix::Identity(dim, dim);
  sigma_inv_ = (1.0 / lambda) * Matrix::Identity(dim, dim);
  chol_inv_.compute(sigma_inv_);
}

void DesignState::check_dim(const Eigen::Ref<const Vector>& phi) const {
  if (static_cast<std::size_t>(phi.size()) != dim_) {
    throw InvalidArgument("feature has length " + std::to_string(phi.size()) +
                          ", design expects " + std::to_string(dim_));
  }
}

void DesignState::rank_one_update(const Eigen::Ref<const Vector>& phi) {
  check_dim(phi);
  if (!phi.allFinite()) throw NumericError("non-finite feature in rank-one update");
  if (phi.isZero(0.0)) return;

  sigma_.noalias() += phi * phi.transpose();
  ++update_count_;

  if (update_count_ % recompute_period_ == 0) {
    refactorize();
    return;
  }

  const Vector u = sigma_inv_ * phi;
  const double denom = 1.0 + phi.dot(u);
  if (!std::isfinite(denom) || denom <= 0.0) {
    throw NumericError("Sherman-Morrison denominator is not positive");
  }
  sigma_inv_.noalias() -= (u * u.transpose()) / denom;
  chol_inv_.rankUpdate(u, -1.0 / denom);
  if (chol_inv_.info() != Eigen::Success) refactorize();
}

void DesignState::refactorize() {
  Eigen::LLT<Matrix> forward(sigma_);
  if (forward.info() != Eigen::Success) {
    throw NumericError("design matrix lost positive definiteness");
  }
  sigma_inv_ = forward.solve(Matrix::Identity(dim_, dim_));
  sigma_inv_ = 0.5 * (sigma_inv_ + sigma_inv_.transpose()).eval();
  chol_inv_.compute(sigma_inv_);
  if (chol_inv_.info() != Eigen::Success) {
    throw NumericError("inverse design matrix is not positive definite");
  }
}

double DesignState::inverse_quadratic_form(
    const Eigen::Ref<const Vector>& phi) const {
  check_dim(phi);
  return std::max(0.0, phi.dot(sigma_inv_ * phi));
}

double DesignState::mahalanobis_norm(const Eigen::Ref<const Vector>& phi,
                                     NormKind which) const {
  check_dim(phi);
  const Matrix& m = which == NormKind::kInverse ? sigma_inv_ : sigma_;
  return std::sqrt(std::max(0.0, phi.dot(m * phi)));
}

Vector DesignState::solve(const Eigen::Ref<const Vector>& rhs) const {
  check_dim(rhs);
  return sigma_inv_ * rhs;
}

Vector DesignState::sample_gaussian(double variance_scale, Rng& rng) const {
  if (!(variance_scale >= 0.0) || !std::isfinite(variance_scale)) {
    throw InvalidArgument("variance scale must be a finite nonnegative number");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(dim_);
  for (std::size_t i = 0; i < dim_; ++i) z[i] = normal(rng);
  if (variance_scale == 0.0) return Vector::Zero(dim_);
  Vector sample = chol_inv_.matrixL() * z;
  sample *= std::sqrt(variance_scale);
  return sample;
}

std::size_t DesignState::memory_bytes() const {
  return sizeof(*this) + 3 * dim_ * dim_ * sizeof(double);
}

}  // namespace optrlsvi
