#pragma once

#include <cstddef>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace optrlsvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

namespace tolerance {
// Structural agreement between maintained factors (Σ·Σ⁻¹ ≈ I, L·Lᵀ ≈ Σ⁻¹).
inline constexpr double kStructural = 1e-8;
// Accounting identities (reconstructed sums, feature-sum bounds).
inline constexpr double kAccounting = 1e-9;
}  // namespace tolerance

inline constexpr std::size_t kDefaultRecomputePeriod = 64;

enum class NormKind { kInverse, kForward };

/// Regularized design matrix Σ = λI + Σ φφᵀ for one timestep.
///
/// Keeps Σ, Σ⁻¹ and a lower Cholesky factor L of Σ⁻¹ (L·Lᵀ = Σ⁻¹) in sync.
/// Updates cost O(d²): Σ⁻¹ follows Sherman-Morrison and L follows a rank-one
/// downdate. Every `recompute_period` updates both are rebuilt from Σ by a
/// direct factorization so round-off cannot accumulate.
class DesignState {
 public:
  DesignState(std::size_t dim, double lambda,
              std::size_t recompute_period = kDefaultRecomputePeriod);

  std::size_t dim() const { return dim_; }
  double lambda() const { return lambda_; }
  std::size_t update_count() const { return update_count_; }
  std::size_t recompute_period() const { return recompute_period_; }

  const Matrix& sigma() const { return sigma_; }
  const Matrix& sigma_inv() const { return sigma_inv_; }
  Matrix chol_inv() const { return chol_inv_.matrixL(); }

  /// Σ ← Σ + φφᵀ. A zero φ leaves the state untouched.
  void rank_one_update(const Eigen::Ref<const Vector>& phi);

  /// √(φᵀΣ⁻¹φ) or √(φᵀΣφ).
  double mahalanobis_norm(const Eigen::Ref<const Vector>& phi,
                          NormKind which = NormKind::kInverse) const;
  /// φᵀΣ⁻¹φ without the square root.
  double inverse_quadratic_form(const Eigen::Ref<const Vector>& phi) const;

  /// Ridge solution Σ⁻¹·rhs.
  Vector solve(const Eigen::Ref<const Vector>& rhs) const;

  /// Draw from N(0, variance_scale·Σ⁻¹). Always consumes exactly dim()
  /// standard normals from rng, even when variance_scale is zero.
  Vector sample_gaussian(double variance_scale, Rng& rng) const;

  std::size_t memory_bytes() const;

 private:
  void check_dim(const Eigen::Ref<const Vector>& phi) const;
  void refactorize();

  std::size_t dim_;
  double lambda_;
  std::size_t recompute_period_;
  std::size_t update_count_ = 0;
  Matrix sigma_;
  Matrix sigma_inv_;
  Eigen::LLT<Matrix> chol_inv_;
};

/// max |a_ij - b_ij|.
inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace optrlsvi
