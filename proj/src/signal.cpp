#include "skillscape/signal.hpp"

#include <cmath>
#include <limits>

#include "skillscape/errors.hpp"

namespace skillscape {

namespace {

void check_signal_inputs(double total_variance, double kappa_obs, double mig_share, double major_share) {
    if (!(total_variance > 0.0)) throw ModelError("degenerate signal variance");
    if (!(kappa_obs > 0.0)) throw ModelError("kappa_obs must be positive");
    if (!(mig_share >= 0.0 && mig_share <= 1.0)) throw ModelError("migration share out of [0,1]");
    if (!(major_share >= 0.0 && major_share <= 1.0)) throw ModelError("major share out of [0,1]");
}

}  // namespace

double signal_precision(double sigma2_xi, double sigma2_xihat, double kappa_obs, double mig_share,
                        double major_share) {
    if (sigma2_xi < 0.0 || sigma2_xihat < 0.0) throw ModelError("signal variances must be nonnegative");
    const double total = sigma2_xi + sigma2_xihat;
    check_signal_inputs(total, kappa_obs, mig_share, major_share);
    return kappa_obs * mig_share * major_share / total;
}

double posterior_diffuse_total(double total_variance, double kappa_obs, double mig_share, double major_share) {
    check_signal_inputs(total_variance, kappa_obs, mig_share, major_share);
    const double observations = kappa_obs * mig_share * major_share;
    if (observations == 0.0) return std::numeric_limits<double>::infinity();
    return total_variance / observations;
}

double posterior_diffuse(double sigma2_xi, double sigma2_xihat, double kappa_obs, double mig_share,
                         double major_share) {
    if (sigma2_xi < 0.0 || sigma2_xihat < 0.0) throw ModelError("signal variances must be nonnegative");
    return posterior_diffuse_total(sigma2_xi + sigma2_xihat, kappa_obs, mig_share, major_share);
}

GaussianBelief posterior_update(const GaussianBelief& prior, const Eigen::VectorXd& signal_mean,
                                const Eigen::VectorXd& precision) {
    const Eigen::Index n = prior.mean.size();
    if (prior.cov.rows() != n || prior.cov.cols() != n || signal_mean.size() != n || precision.size() != n) {
        throw ModelError("posterior_update: dimension mismatch");
    }
    if ((precision.array() < 0.0).any()) throw ModelError("posterior_update: negative precision");

    const Eigen::LLT<Eigen::MatrixXd> prior_chol(prior.cov);
    if (prior_chol.info() != Eigen::Success) throw ModelError("prior not invertible");
    if (precision.isZero(0.0)) return prior;

    // With Sigma = L L^T:
    //   (Sigma^-1 + P)^-1 = L (I + L^T P L)^-1 L^T
    //   mean = L (I + L^T P L)^-1 (L^-1 mu0 + L^T P mu)
    const Eigen::MatrixXd L = prior_chol.matrixL();
    Eigen::MatrixXd inner = L.transpose() * precision.asDiagonal() * L;
    inner.diagonal().array() += 1.0;
    const Eigen::LLT<Eigen::MatrixXd> inner_chol(inner);
    if (inner_chol.info() != Eigen::Success) throw ModelError("posterior_update: factorization failed");

    const Eigen::VectorXd whitened_prior = prior_chol.matrixL().solve(prior.mean);
    const Eigen::VectorXd rhs = whitened_prior + L.transpose() * precision.cwiseProduct(signal_mean);

    GaussianBelief post;
    post.mean = L * inner_chol.solve(rhs);
    post.cov = L * inner_chol.solve(L.transpose());
    post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
    return post;
}

}  // namespace skillscape
