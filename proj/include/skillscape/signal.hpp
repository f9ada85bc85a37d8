#pragma once

#include <Eigen/Dense>

namespace skillscape {

// Beliefs over a stack of origin-major-destination wage cells.
struct GaussianBelief {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Diagonal of the signal precision matrix: (s2 + s2hat)^-1 * kappa * M * delta.
// Throws ModelError("degenerate signal variance") when s2 + s2hat == 0.
double signal_precision(double sigma2_xi, double sigma2_xihat, double kappa_obs, double mig_share,
                        double major_share);

// Posterior variance under a diffuse prior, 1 / signal_precision. Returns
// +infinity when the cell receives no observations.
double posterior_diffuse(double sigma2_xi, double sigma2_xihat, double kappa_obs, double mig_share,
                         double major_share);

// Same as posterior_diffuse but takes the total signal variance directly
// (used with per-cell variance overrides).
double posterior_diffuse_total(double total_variance, double kappa_obs, double mig_share, double major_share);

// Conjugate normal update of `prior` with signals of mean `signal_mean` and
// diagonal precision `precision`. Uses the Cholesky factor of the prior
// covariance; throws ModelError("prior not invertible") if it is not positive
// definite.
GaussianBelief posterior_update(const GaussianBelief& prior, const Eigen::VectorXd& signal_mean,
                                const Eigen::VectorXd& precision);

}  // namespace skillscape
