#pragma once

#include <Eigen/Core>

#include "kcrc/types.hpp"

namespace kcrc {

/// Precomputed ridge coding basis P = (D^T D + mu I)^-1 D^T.
class RlsProjection {
 public:
  RlsProjection(Eigen::MatrixXd basis, double mu) : basis_(std::move(basis)), mu_(mu) {}

  const Eigen::MatrixXd& matrix() const noexcept { return basis_; }
  double mu() const noexcept { return mu_; }
  /// Number of dictionary columns (length of the coding vector).
  Index dict_cols() const noexcept { return basis_.rows(); }
  /// Length of the vectors it projects.
  Index input_dim() const noexcept { return basis_.cols(); }

 private:
  Eigen::MatrixXd basis_;
  double mu_;
};

/// Solves (D^T D + mu I) P = D^T with a Cholesky factorisation.
RlsProjection rls_precompute(const Eigen::MatrixXd& dict, double mu);

Eigen::VectorXd rls_solve(const RlsProjection& projection,
                          const Eigen::Ref<const Eigen::VectorXd>& y);

/// Entrywise soft thresholding: h - alpha above alpha, h + alpha below -alpha,
/// zero in between.
Eigen::VectorXd shrink(double alpha, const Eigen::Ref<const Eigen::VectorXd>& h);

struct AlmConfig {
  double mu = 1e-3;
  double sigma0 = 1.0;
  double rho = 1.2;
  double tau = 1e-6;
  int max_iter = 500;
  // Penalty growth stops here; beyond it the x-update regulariser 2 mu / sigma
  // underflows against the spectrum of D.
  double sigma_max = 1e6;

  /// Throws ArgumentError unless every field is positive and rho > 1.
  void validate() const;
};

struct AlmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd e;
  int iterations = 0;
  bool converged = false;
  double final_gap = 0.0;  // ||x_{k+1} - x_k||_2 at the last iteration
};

/// Augmented Lagrangian solver for
///
///   min ||e||_1 + mu ||x||_2^2   s.t.   y = D x + e
///
/// with alternating closed-form updates
///
///   x <- (D^T D + 2 mu / sigma I)^-1 D^T (y - e + z / sigma)
///   e <- S_{1/sigma}(y - D x + z / sigma)
///   z <- z + sigma (y - D x - e),      sigma <- min(rho sigma, sigma_max)
///
/// starting from x = e = z = 0, and stopping once ||x_{k+1} - x_k|| <= tau.
/// The per-sigma coding bases all come from one thin SVD of D, computed at
/// construction, so a solver can serve many queries.
class AlmSolver {
 public:
  AlmSolver(Eigen::MatrixXd dict, AlmConfig cfg);

  AlmResult solve(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  const Eigen::MatrixXd& dictionary() const noexcept { return dict_; }
  const AlmConfig& config() const noexcept { return cfg_; }

 private:
  Eigen::MatrixXd dict_;
  AlmConfig cfg_;
  Eigen::MatrixXd u_;  // left singular vectors (rows x r)
  Eigen::VectorXd s_;  // singular values
  Eigen::MatrixXd v_;  // right singular vectors (cols x r)
};

AlmResult alm_solve(const Eigen::MatrixXd& dict, const Eigen::Ref<const Eigen::VectorXd>& y,
                    const AlmConfig& cfg);

}  // namespace kcrc
