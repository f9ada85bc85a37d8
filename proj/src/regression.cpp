#include "skillscape/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "skillscape/errors.hpp"

namespace skillscape {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Encoded {
    std::vector<int> id;
    std::vector<std::string> labels;  // sorted
};

Encoded encode(const Labels& raw) {
    Encoded e;
    e.labels = raw;
    std::sort(e.labels.begin(), e.labels.end());
    e.labels.erase(std::unique(e.labels.begin(), e.labels.end()), e.labels.end());
    e.id.reserve(raw.size());
    for (const auto& s : raw)
        e.id.push_back(static_cast<int>(std::lower_bound(e.labels.begin(), e.labels.end(), s) - e.labels.begin()));
    return e;
}

// Subtracts per-group column means in place; returns the largest adjustment.
double sweep(MatrixXd& data, const Encoded& g) {
    const auto n_groups = static_cast<Index>(g.labels.size());
    MatrixXd sums = MatrixXd::Zero(n_groups, data.cols());
    VectorXd counts = VectorXd::Zero(n_groups);
    for (Index i = 0; i < data.rows(); ++i) {
        sums.row(g.id[static_cast<std::size_t>(i)]) += data.row(i);
        counts(g.id[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (Index k = 0; k < n_groups; ++k) sums.row(k) /= counts(k);
    double change = 0.0;
    for (Index i = 0; i < data.rows(); ++i) {
        const auto row = sums.row(g.id[static_cast<std::size_t>(i)]);
        data.row(i) -= row;
        change = std::max(change, row.cwiseAbs().maxCoeff());
    }
    return change;
}

std::vector<double> group_means(const VectorXd& v, const Encoded& g) {
    std::vector<double> sum(g.labels.size(), 0.0);
    std::vector<double> count(g.labels.size(), 0.0);
    for (Index i = 0; i < v.size(); ++i) {
        sum[static_cast<std::size_t>(g.id[static_cast<std::size_t>(i)])] += v(i);
        count[static_cast<std::size_t>(g.id[static_cast<std::size_t>(i)])] += 1.0;
    }
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] /= count[k];
    return sum;
}

}  // namespace

double t_pvalue(double t, int df) {
    if (df < 1) return std::numeric_limits<double>::quiet_NaN();
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    const boost::math::students_t dist(static_cast<double>(df));
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

namespace {

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw EstimationError("no coefficient named " + name);
    return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

double RegressionResult::coefficient(const std::string& name) const {
    return coef(static_cast<Index>(index_of(names, name)));
}
double RegressionResult::std_error(const std::string& name) const {
    return se(static_cast<Index>(index_of(names, name)));
}
double RegressionResult::p_value(const std::string& name) const {
    return pvalue(static_cast<Index>(index_of(names, name)));
}

RegressionResult ols(const VectorXd& y, const MatrixXd& X, const std::vector<std::string>& names,
                     const Labels& cluster, int extra_dof) {
    const Index n = X.rows();
    const Index p = X.cols();
    if (y.size() != n || static_cast<Index>(cluster.size()) != n || static_cast<Index>(names.size()) != p) {
        throw EstimationError("ols: dimension mismatch");
    }
    if (p == 0) throw EstimationError("ols: no regressors");
    if (n <= p + extra_dof) throw EstimationError("ols: not enough observations");

    const Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
    if (qr.rank() < p) {
        std::string cols;
        const auto perm = qr.colsPermutation().indices();
        for (Index k = qr.rank(); k < p; ++k) {
            if (!cols.empty()) cols += ", ";
            cols += names[static_cast<std::size_t>(perm(k))];
        }
        throw EstimationError("rank deficient design; collinear columns: " + cols);
    }

    RegressionResult r;
    r.names = names;
    r.coef = qr.solve(y);
    r.residuals = y - X * r.coef;
    r.n_obs = static_cast<int>(n);
    r.dof_model = static_cast<int>(p) + extra_dof;

    const Encoded g = encode(cluster);
    const auto G = static_cast<Index>(g.labels.size());
    r.n_clusters = static_cast<int>(G);

    const MatrixXd xtx_inv = (X.transpose() * X).ldlt().solve(MatrixXd::Identity(p, p));
    MatrixXd scores = MatrixXd::Zero(G, p);
    for (Index i = 0; i < n; ++i) scores.row(g.id[static_cast<std::size_t>(i)]) += r.residuals(i) * X.row(i);
    const MatrixXd meat = scores.transpose() * scores;
    double scale = std::numeric_limits<double>::quiet_NaN();
    if (G > 1) {
        scale = static_cast<double>(G) / static_cast<double>(G - 1) * static_cast<double>(n - 1) /
                static_cast<double>(n - r.dof_model);
    }
    r.vcov = scale * xtx_inv * meat * xtx_inv;
    r.vcov = 0.5 * (r.vcov + r.vcov.transpose()).eval();
    r.se = r.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();

    r.pvalue = VectorXd(p);
    for (Index k = 0; k < p; ++k) {
        if (r.se(k) == 0.0) {
            r.pvalue(k) = r.coef(k) == 0.0 ? 1.0 : 0.0;
        } else {
            r.pvalue(k) = t_pvalue(r.coef(k) / r.se(k), static_cast<int>(G) - 1);
        }
    }

    const double mean = y.mean();
    const double sst = (y.array() - mean).square().sum();
    const double ssr = r.residuals.squaredNorm();
    r.r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
    return r;
}

MatrixXd demean(const MatrixXd& data, const std::vector<Labels>& groups) {
    std::vector<Encoded> enc;
    for (const auto& g : groups) {
        if (static_cast<Index>(g.size()) != data.rows()) throw EstimationError("demean: group length mismatch");
        enc.push_back(encode(g));
    }
    MatrixXd out = data;
    if (enc.empty()) return out;
    const double scale = std::max(1.0, data.cwiseAbs().maxCoeff());
    for (int it = 0; it < 10000; ++it) {
        double change = 0.0;
        for (const auto& e : enc) change = std::max(change, sweep(out, e));
        if (enc.size() == 1 || change <= 1e-15 * scale) return out;
    }
    throw EstimationError("demean: alternating projections did not converge");
}

FixedEffectsResult fe_ols(const VectorXd& y, const MatrixXd& X, const std::vector<std::string>& names,
                          const std::vector<Labels>& groups, const Labels& cluster) {
    if (groups.empty() || groups.size() > 2) throw EstimationError("fe_ols: one or two fixed-effect dimensions");
    const Index n = X.rows();
    if (y.size() != n) throw EstimationError("fe_ols: dimension mismatch");

    MatrixXd stacked(n, X.cols() + 1);
    stacked << y, X;
    const MatrixXd within = demean(stacked, groups);

    for (Index k = 0; k < X.cols(); ++k) {
        const double before = X.col(k).norm();
        const double after = within.col(k + 1).norm();
        if (!(after > 1e-10 * std::max(before, 1e-300))) {
            throw EstimationError("column '" + names[static_cast<std::size_t>(k)] +
                                  "' has no variation after absorbing fixed effects");
        }
    }

    std::vector<Encoded> enc;
    int absorbed = 0;
    for (const auto& g : groups) {
        enc.push_back(encode(g));
        absorbed += static_cast<int>(enc.back().labels.size());
    }
    absorbed -= static_cast<int>(groups.size()) - 1;

    FixedEffectsResult out;
    out.fit = ols(within.col(0), within.rightCols(X.cols()), names, cluster, absorbed);

    const VectorXd partial = y - X * out.fit.coef;
    std::vector<std::vector<double>> fe(enc.size());
    if (enc.size() == 1) {
        fe[0] = group_means(partial, enc[0]);
    } else {
        fe[1].assign(enc[1].labels.size(), 0.0);
        for (int it = 0; it < 10000; ++it) {
            VectorXd r = partial;
            for (Index i = 0; i < n; ++i) r(i) -= fe[1][static_cast<std::size_t>(enc[1].id[static_cast<std::size_t>(i)])];
            fe[0] = group_means(r, enc[0]);
            r = partial;
            for (Index i = 0; i < n; ++i) r(i) -= fe[0][static_cast<std::size_t>(enc[0].id[static_cast<std::size_t>(i)])];
            const std::vector<double> next = group_means(r, enc[1]);
            double change = 0.0;
            for (std::size_t k = 0; k < next.size(); ++k) change = std::max(change, std::abs(next[k] - fe[1][k]));
            fe[1] = next;
            if (change <= 1e-14 * std::max(1.0, partial.cwiseAbs().maxCoeff())) break;
        }
        double shift = 0.0;
        for (double v : fe[1]) shift += v;
        shift /= static_cast<double>(fe[1].size());
        for (double& v : fe[1]) v -= shift;
        for (double& v : fe[0]) v += shift;
    }
    for (std::size_t d = 0; d < enc.size(); ++d) {
        std::map<std::string, double> m;
        for (std::size_t k = 0; k < enc[d].labels.size(); ++k) m.emplace(enc[d].labels[k], fe[d][k]);
        out.effects.push_back(std::move(m));
    }
    return out;
}

}  // namespace skillscape
