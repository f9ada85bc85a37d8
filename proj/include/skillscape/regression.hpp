#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace skillscape {

using Labels = std::vector<std::string>;

struct RegressionResult {
    std::vector<std::string> names;
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    Eigen::VectorXd pvalue;
    Eigen::MatrixXd vcov;
    Eigen::VectorXd residuals;
    double r2 = 0.0;         // on the (within-transformed) data
    int n_obs = 0;
    int n_clusters = 0;
    int dof_model = 0;       // regressors plus absorbed fixed effects

    double coefficient(const std::string& name) const;
    double std_error(const std::string& name) const;
    double p_value(const std::string& name) const;
};

struct FixedEffectsResult {
    RegressionResult fit;
    // One map per absorbed dimension, label -> effect. With two dimensions the
    // second is normalised to mean zero and the first carries the level.
    std::vector<std::map<std::string, double>> effects;
};

// OLS with CR1 cluster-robust covariance:
//   V = (X'X)^-1 (sum_g X_g' e_g e_g' X_g) (X'X)^-1 * G/(G-1) * (N-1)/(N-K).
// `extra_dof` is added to K (absorbed fixed effects). p-values use a t
// distribution with G-1 degrees of freedom. Throws EstimationError naming the
// offending columns if X is rank deficient.
RegressionResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const std::vector<std::string>& names,
                     const Labels& cluster, int extra_dof = 0);

// Within estimator absorbing one or two sets of group fixed effects by
// alternating projections.
FixedEffectsResult fe_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const std::vector<std::string>& names,
                          const std::vector<Labels>& groups, const Labels& cluster);

// Two-sided p-value of a t statistic with `df` degrees of freedom.
double t_pvalue(double t, int df);

// Subtracts group means along every dimension in `groups` until the data are
// orthogonal to all of them (exact in one pass for a single dimension).
Eigen::MatrixXd demean(const Eigen::MatrixXd& data, const std::vector<Labels>& groups);

}  // namespace skillscape
