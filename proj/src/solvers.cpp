#include "kcrc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "kcrc/errors.hpp"

namespace kcrc {

RlsProjection rls_precompute(const Eigen::MatrixXd& dict, double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ArgumentError("ridge parameter mu must be positive");
  if (!dict.allFinite()) throw ArgumentError("dictionary has non-finite entries");
  Eigen::MatrixXd normal = dict.transpose() * dict;
  normal.diagonal().array() += mu;
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("ridge normal matrix is not positive definite");
  }
  return RlsProjection(llt.solve(dict.transpose()), mu);
}

Eigen::VectorXd rls_solve(const RlsProjection& projection,
                          const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() != projection.input_dim()) {
    throw ArgumentError("rls input has length " + std::to_string(y.size()) + ", expected " +
                        std::to_string(projection.input_dim()));
  }
  return projection.matrix() * y;
}

Eigen::VectorXd shrink(double alpha, const Eigen::Ref<const Eigen::VectorXd>& h) {
  if (!(alpha >= 0.0)) throw ArgumentError("shrinkage threshold must be non-negative");
  Eigen::VectorXd out(h.size());
  for (Index i = 0; i < h.size(); ++i) {
    const double v = h(i);
    out(i) = v >= alpha ? v - alpha : (v <= -alpha ? v + alpha : 0.0);
  }
  return out;
}

void AlmConfig::validate() const {
  const bool ok = mu > 0.0 && sigma0 > 0.0 && rho > 1.0 && tau > 0.0 && max_iter > 0 &&
                  sigma_max >= sigma0 && std::isfinite(mu) && std::isfinite(sigma0) &&
                  std::isfinite(rho) && std::isfinite(tau) && std::isfinite(sigma_max);
  if (!ok) {
    throw ArgumentError("invalid ALM configuration (need mu, sigma0, tau, max_iter > 0, rho > 1, "
                        "sigma_max >= sigma0)");
  }
}

AlmSolver::AlmSolver(Eigen::MatrixXd dict, AlmConfig cfg) : dict_(std::move(dict)), cfg_(cfg) {
  cfg_.validate();
  if (!dict_.allFinite()) throw ArgumentError("dictionary has non-finite entries");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dict_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  u_ = svd.matrixU();
  s_ = svd.singularValues();
  v_ = svd.matrixV();
}

AlmResult AlmSolver::solve(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (y.size() != dict_.rows()) {
    throw ArgumentError("alm input has length " + std::to_string(y.size()) + ", expected " +
                        std::to_string(dict_.rows()));
  }
  AlmResult out;
  out.x = Eigen::VectorXd::Zero(dict_.cols());
  out.e = Eigen::VectorXd::Zero(dict_.rows());
  Eigen::VectorXd z = Eigen::VectorXd::Zero(dict_.rows());
  double sigma = cfg_.sigma0;

  for (int k = 1; k <= cfg_.max_iter; ++k) {
    const double reg = 2.0 * cfg_.mu / sigma;
    const Eigen::VectorXd rhs = y - out.e + z / sigma;
    // (D^T D + reg I)^-1 D^T = V diag(s / (s^2 + reg)) U^T
    const Eigen::VectorXd filter = s_.array() / (s_.array().square() + reg);
    Eigen::VectorXd x = v_ * (filter.asDiagonal() * (u_.transpose() * rhs));
    const Eigen::VectorXd residual = y - dict_ * x;
    Eigen::VectorXd e = shrink(1.0 / sigma, residual + z / sigma);
    z += sigma * (residual - e);

    out.final_gap = (x - out.x).norm();
    out.x = std::move(x);
    out.e = std::move(e);
    out.iterations = k;
    if (!out.x.allFinite() || !out.e.allFinite() || !z.allFinite()) {
      throw DivergenceError("ALM iterate became non-finite at iteration " + std::to_string(k));
    }
    if (out.final_gap <= cfg_.tau) {
      out.converged = true;
      break;
    }
    sigma = std::min(sigma * cfg_.rho, cfg_.sigma_max);
  }
  return out;
}

AlmResult alm_solve(const Eigen::MatrixXd& dict, const Eigen::Ref<const Eigen::VectorXd>& y,
                    const AlmConfig& cfg) {
  return AlmSolver(dict, cfg).solve(y);
}

}  // namespace kcrc
