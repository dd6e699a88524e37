#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "qsp/chebyshev.hpp"
#include "qsp/qsp_eval.hpp"

namespace qsp {

/// Target, node grid and target values, frozen at construction.
class ObjectiveContext {
public:
    /// d < 0 takes the nominal degree of the target.
    explicit ObjectiveContext(ChebCoeffs target, int d = -1) : target_(std::move(target)) {
        if (target_.kind != Kind::first)
            throw invalid_argument("target must be a first-kind Chebyshev series");
        d_ = d < 0 ? target_.degree() : d;
        if (d_ < 1) throw invalid_argument("target degree must be >= 1");
        if (target_.effective_degree() > d_)
            throw invalid_argument("target degree exceeds the requested phase degree");
        if (!target_.is_zero() && target_.parity != parity_of(d_))
            throw invalid_argument("target parity must match the parity of d");
        const SupEstimate sup = max_norm_estimate(target_);
        if (sup.value >= 1.0)
            throw invalid_argument("target violates ||f||_inf < 1 (sampled sup-norm " +
                                   std::to_string(sup.value) + ")");
        sup_ = sup;
        grid_ = cheb_nodes(reduced_length(d_));
        values_.reserve(grid_.nodes.size());
        for (double x : grid_.nodes) values_.push_back(eval_series(target_, x));
    }

    [[nodiscard]] const ChebCoeffs& target() const { return target_; }
    [[nodiscard]] int d() const { return d_; }
    [[nodiscard]] int d_tilde() const { return grid_.d_tilde; }
    [[nodiscard]] Parity parity() const { return parity_of(d_); }
    [[nodiscard]] const NodeGrid& grid() const { return grid_; }
    [[nodiscard]] const std::vector<double>& target_values() const { return values_; }
    [[nodiscard]] const SupEstimate& sup_norm() const { return sup_; }

    void check(const ReducedPhases& r) const {
        if (r.d_tilde() != d_tilde() || r.parity != parity())
            throw invalid_argument("phase vector does not match target degree/parity");
    }

private:
    ChebCoeffs target_;
    int d_ = 0;
    NodeGrid grid_;
    std::vector<double> values_;
    SupEstimate sup_;
};

/// F = (1/d~) sum_k (g(x_k) - f(x_k))^2.
[[nodiscard]] inline double cost(const ObjectiveContext& ctx, const ReducedPhases& r) {
    ctx.check(r);
    double s = 0.0;
    const auto& xs = ctx.grid().nodes;
    for (size_t k = 0; k < xs.size(); ++k) {
        const double res = g_value(xs[k], r) - ctx.target_values()[k];
        s += res * res;
    }
    return s / ctx.d_tilde();
}

/// Cost and gradient (2/d~) sum_k res_k grad g(x_k).
inline double cost_gradient(const ObjectiveContext& ctx, const ReducedPhases& r,
                            std::vector<double>& grad) {
    ctx.check(r);
    const size_t n = r.phases.size();
    grad.assign(n, 0.0);
    std::vector<double> gk(n);
    double s = 0.0;
    const auto& xs = ctx.grid().nodes;
    for (size_t k = 0; k < xs.size(); ++k) {
        const double res = g_value_gradient(xs[k], r, gk) - ctx.target_values()[k];
        s += res * res;
        for (size_t j = 0; j < n; ++j) grad[j] += res * gk[j];
    }
    const double dt = ctx.d_tilde();
    for (double& v : grad) v *= 2.0 / dt;
    return s / dt;
}

[[nodiscard]] inline std::vector<double> gradient(const ObjectiveContext& ctx, const ReducedPhases& r) {
    std::vector<double> g;
    cost_gradient(ctx, r, g);
    return g;
}

/// A[k][j] = g_j(x_k).
[[nodiscard]] inline Eigen::MatrixXd jacobian(const ObjectiveContext& ctx, const ReducedPhases& r) {
    ctx.check(r);
    const Eigen::Index n = r.d_tilde();
    Eigen::MatrixXd a(n, n);
    const auto& xs = ctx.grid().nodes;
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto row = g_gradient(xs[static_cast<size_t>(k)], r);
        for (Eigen::Index j = 0; j < n; ++j) a(k, j) = row[static_cast<size_t>(j)];
    }
    return a;
}

/// Jacobian of the node values with respect to all d+1 entries of a full
/// (unconstrained) phase vector; rank is at most d~.
[[nodiscard]] inline Eigen::MatrixXd asymmetric_jacobian(const ObjectiveContext& ctx,
                                                         std::span<const double> full) {
    if (static_cast<int>(full.size()) != ctx.d() + 1)
        throw invalid_argument("asymmetric_jacobian: expected d+1 phases");
    const auto& xs = ctx.grid().nodes;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(full.size()));
    for (size_t k = 0; k < xs.size(); ++k) {
        const auto row = g_gradient_full(xs[k], full);
        for (size_t j = 0; j < row.size(); ++j)
            a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = row[j];
    }
    return a;
}

struct HessianReport {
    Eigen::MatrixXd hessian;
    Eigen::MatrixXd jacobian_part;  // (2/d~) A^T A
    Eigen::MatrixXd residual_part;  // R
    Eigen::VectorXd eigenvalues;    // descending
    double sigma_min_jacobian = 0.0;
};

/// Descending eigenvalues of a symmetric matrix.
[[nodiscard]] inline Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw numerical_failure("symmetric eigensolver failed");
    return es.eigenvalues().reverse();
}

[[nodiscard]] inline double smallest_singular_value(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    return s.size() == 0 ? 0.0 : s(s.size() - 1);
}

/// Hess = (2/d~) A^T A - R with R_ij = -(2/d~) sum_k res_k g_ij(x_k).
[[nodiscard]] inline HessianReport hessian(const ObjectiveContext& ctx, const ReducedPhases& r) {
    ctx.check(r);
    const Eigen::Index n = r.d_tilde();
    const double scale = 2.0 / static_cast<double>(n);
    Eigen::MatrixXd a(n, n);
    Eigen::MatrixXd rterm = Eigen::MatrixXd::Zero(n, n);
    const auto& xs = ctx.grid().nodes;
    std::vector<double> gk(static_cast<size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        const double x = xs[static_cast<size_t>(k)];
        const double res = g_value_gradient(x, r, gk) - ctx.target_values()[static_cast<size_t>(k)];
        for (Eigen::Index j = 0; j < n; ++j) a(k, j) = gk[static_cast<size_t>(j)];
        if (res != 0.0) rterm -= res * g_hessian(x, r);
    }
    HessianReport rep;
    rep.jacobian_part = scale * a.transpose() * a;
    rep.residual_part = scale * rterm;
    rep.hessian = rep.jacobian_part - rep.residual_part;
    rep.hessian = 0.5 * (rep.hessian + rep.hessian.transpose()).eval();
    rep.eigenvalues = symmetric_eigenvalues(rep.hessian);
    rep.sigma_min_jacobian = smallest_singular_value(a);
    return rep;
}

}  // namespace qsp
