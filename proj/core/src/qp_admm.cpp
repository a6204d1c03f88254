#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "ctmflow/errors.hpp"
#include "ctmflow/solver.hpp"

namespace ctmflow {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

// l <= A x <= u with program rows scaled to unit norm and variable bounds appended as rows.
struct SplitForm {
    SpMat A;
    Vec l, u;
    Vec q;
    Vec pdiag;  // P = diag(pdiag)
    int program_rows = 0;
};

SplitForm split_form(const ConvexProgram& P) {
    SplitForm s;
    const int n = P.variable_count();
    std::vector<Triplet> trip;
    std::vector<double> l, u;
    int r = 0;
    for (const Row& row : P.rows) {
        if (row.terms.empty()) continue;
        double norm = 0.0;
        for (const auto& [j, a] : row.terms) norm += a * a;
        norm = std::sqrt(norm);
        for (const auto& [j, a] : row.terms) trip.emplace_back(r, j, a / norm);
        u.push_back(row.rhs / norm);
        l.push_back(row.sense == RowSense::Equal ? row.rhs / norm : -kInf);
        ++r;
    }
    s.program_rows = r;
    for (int j = 0; j < n; ++j) {
        if (!std::isfinite(P.lower[j]) && !std::isfinite(P.upper[j])) continue;
        trip.emplace_back(r++, j, 1.0);
        l.push_back(P.lower[j]);
        u.push_back(P.upper[j]);
    }
    s.A.resize(r, n);
    s.A.setFromTriplets(trip.begin(), trip.end());
    s.A.makeCompressed();
    s.l = Eigen::Map<Vec>(l.data(), r);
    s.u = Eigen::Map<Vec>(u.data(), r);
    s.q = Eigen::Map<const Vec>(P.linear.data(), n);
    s.pdiag.resize(n);
    for (int j = 0; j < n; ++j) s.pdiag[j] = 2.0 * P.quadratic[j];
    return s;
}

Vec project(const Vec& v, const Vec& l, const Vec& u) { return v.cwiseMax(l).cwiseMin(u); }

double box_violation(const Vec& ax, const Vec& l, const Vec& u) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < ax.size(); ++i) v = std::max({v, l[i] - ax[i], ax[i] - u[i]});
    return v;
}

struct Polished {
    Vec x;
    Vec y;                      ///< multipliers on every row of the split form, zero when inactive
    double stationarity = 0.0;  ///< ||P x + q + A^T y||_inf
};

// Equality-constrained QP on the active set guessed from (z, y), refined until the candidate is
// feasible and every active inequality has a multiplier of the right sign. Such a point satisfies
// the KKT conditions, so it is optimal regardless of how far the splitting iterates had come.
bool polish(const SplitForm& s, const Vec& z, const Vec& y, Polished& out) {
    const Eigen::Index m = s.A.rows(), n = s.A.cols();
    // 0 inactive, -1 at lower, +1 at upper, 2 equality
    std::vector<int> act(m, 0);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (s.l[i] == s.u[i]) act[i] = 2;
        else if (std::isfinite(s.l[i]) && z[i] - s.l[i] < -y[i]) act[i] = -1;
        else if (std::isfinite(s.u[i]) && s.u[i] - z[i] < y[i]) act[i] = 1;
    }
    const SpMat At = s.A.transpose();
    const double delta = 1e-9;
    // Primal-dual active set: add violated rows, drop rows whose multiplier has the wrong sign.
    for (int round = 0; round < 25; ++round) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < m; ++i)
            if (act[i] != 0) rows.push_back(i);
        const auto na = static_cast<Eigen::Index>(rows.size());
        std::vector<Triplet> trip;
        for (Eigen::Index j = 0; j < n; ++j) trip.emplace_back(j, j, s.pdiag[j] + delta);
        Vec rhs(n + na);
        rhs.head(n) = -s.q;
        for (Eigen::Index k = 0; k < na; ++k) {
            const auto i = rows[k];
            for (SpMat::InnerIterator it(At, i); it; ++it) {
                trip.emplace_back(it.row(), n + k, it.value());
                trip.emplace_back(n + k, it.row(), it.value());
            }
            trip.emplace_back(n + k, n + k, -delta);
            rhs[n + k] = act[i] == 1 ? s.u[i] : s.l[i];
        }
        SpMat K(n + na, n + na);
        K.setFromTriplets(trip.begin(), trip.end());
        SpMat K0 = K;
        for (Eigen::Index j = 0; j < n + na; ++j) K0.coeffRef(j, j) -= (j < n ? delta : -delta);
        K.makeCompressed();
        Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(K);
        if (lu.info() != Eigen::Success) return false;
        Vec sol = lu.solve(rhs);
        for (int it = 0; it < 8; ++it) {
            Vec r = rhs - K0 * sol;
            sol += lu.solve(r);
        }
        const Vec x = sol.head(n);
        const Vec ax = s.A * x;
        bool changed = false;
        for (Eigen::Index k = 0; k < na; ++k) {
            const auto i = rows[k];
            const double lam = sol[n + k];  // stationarity: Px + q + A^T lam = 0
            if ((act[i] == 1 && lam < -1e-9) || (act[i] == -1 && lam > 1e-9)) {
                act[i] = 0;
                changed = true;
            }
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            if (act[i] != 0) continue;
            if (ax[i] < s.l[i] - 1e-10) { act[i] = -1; changed = true; }
            else if (ax[i] > s.u[i] + 1e-10) { act[i] = 1; changed = true; }
        }
        if (!changed) {
            if (box_violation(ax, s.l, s.u) > 1e-9) return false;
            out.x = x;
            out.y = Vec::Zero(m);
            for (Eigen::Index k = 0; k < na; ++k) out.y[rows[k]] = sol[n + k];
            out.stationarity = (s.pdiag.cwiseProduct(x) + s.q + At * out.y).lpNorm<Eigen::Infinity>();
            return out.stationarity <= 1e-8 * (1.0 + s.q.lpNorm<Eigen::Infinity>());
        }
    }
    return false;
}

double program_residual(const ConvexProgram& P, const Vec& x) {
    return P.primal_residual(std::vector<double>(x.data(), x.data() + x.size()));
}

}  // namespace

Solution solve_qp(const ConvexProgram& P, const AdmmOptions& opt) {
    Solution sol;
    sol.method = "admm";
    const int n = P.variable_count();
    const SplitForm s = split_form(P);
    const Eigen::Index m = s.A.rows();

    // Step size from the objective-to-constraint norm ratio.
    const double pnorm = s.pdiag.norm();
    const double anorm = std::sqrt(static_cast<double>(s.A.squaredNorm()));
    const double rho0 = std::clamp(anorm > 0 ? 0.1 * std::max(pnorm, 1.0) / anorm * std::sqrt(double(m)) / std::sqrt(double(std::max(n, 1))) : 0.1, 1e-4, 1e2);
    Vec rho(m);
    for (Eigen::Index i = 0; i < m; ++i) rho[i] = s.l[i] == s.u[i] ? 1e3 * rho0 : rho0;

    const SpMat At = s.A.transpose();
    SpMat K = At * rho.asDiagonal() * s.A;
    for (int j = 0; j < n; ++j) K.coeffRef(j, j) += s.pdiag[j] + opt.sigma;
    Eigen::SimplicialLDLT<SpMat> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw SolverError("admm: factorization failed");

    Vec x = Vec::Zero(n), z = Vec::Zero(m), y = Vec::Zero(m);
    z = project(z, s.l, s.u);
    const double a = opt.over_relaxation;
    double rp = kInf, rd = kInf;
    Polished pol;
    bool polished = false;
    long next_checkpoint = 1000;  // early polish and step rescaling at 1000, 2000, 4000, ...
    long it = 0;
    for (; it < opt.max_iterations; ++it) {
        const Vec rhs = opt.sigma * x - s.q + At * (rho.cwiseProduct(z) - y);
        const Vec xt = ldlt.solve(rhs);
        const Vec zt = s.A * xt;
        const Vec xn = a * xt + (1 - a) * x;
        const Vec zr = a * zt + (1 - a) * z;
        const Vec zn = project(zr + y.cwiseQuotient(rho), s.l, s.u);
        y += rho.cwiseProduct(zr - zn);
        x = xn;
        z = zn;
        if ((it + 1) % opt.check_every == 0) {
            rp = (s.A * x - z).lpNorm<Eigen::Infinity>();
            rd = (s.pdiag.cwiseProduct(x) + s.q + At * y).lpNorm<Eigen::Infinity>();
            // rows are scaled, so also hold the unscaled program residual to the tolerance
            if (rp <= opt.tolerance && rd <= opt.tolerance) rp = std::max(rp, program_residual(P, x));
            if (rp <= opt.tolerance && rd <= opt.tolerance) {
                ++it;
                break;
            }
        }
        if (it + 1 == next_checkpoint) {
            next_checkpoint *= 2;
            if (opt.polish && polish(s, z, y, pol)) {
                polished = true;
                ++it;
                break;
            }
            if (opt.rebalance_rho) {
                // Rescale the step when the normalized residuals are far apart (refactors K).
                const Vec ax = s.A * x;
                const Vec px = s.pdiag.cwiseProduct(x);
                const Vec aty = At * y;
                const double rpn = (ax - z).lpNorm<Eigen::Infinity>() /
                                   std::max({ax.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>(), 1e-12});
                const double rdn = (px + s.q + aty).lpNorm<Eigen::Infinity>() /
                                   std::max({px.lpNorm<Eigen::Infinity>(), aty.lpNorm<Eigen::Infinity>(),
                                             s.q.lpNorm<Eigen::Infinity>(), 1e-12});
                const double scale = std::clamp(std::sqrt(rpn / std::max(rdn, 1e-300)), 1e-3, 1e3);
                if (scale > 5.0 || scale < 0.2) {
                    rho *= scale;
                    K = At * rho.asDiagonal() * s.A;
                    for (int j = 0; j < n; ++j) K.coeffRef(j, j) += s.pdiag[j] + opt.sigma;
                    ldlt.compute(K);
                    if (ldlt.info() != Eigen::Success) throw SolverError("admm: factorization failed");
                }
            }
        }
    }
    sol.iterations = it;
    const bool converged = rp <= opt.tolerance && rd <= opt.tolerance;
    if (opt.polish && !polished) polished = polish(s, z, y, pol);

    Vec xf = x;
    if (polished) {
        xf = pol.x;
        y = pol.y;
        rd = pol.stationarity;
    }
    sol.values.assign(xf.data(), xf.data() + n);
    sol.objective = P.objective(sol.values);
    sol.residuals.primal = P.primal_residual(sol.values);
    sol.residuals.dual = rd;
    {
        const Vec ax = s.A * xf;
        double comp = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double dist = y[i] > 0 ? std::abs(s.u[i] - ax[i]) : (y[i] < 0 ? std::abs(ax[i] - s.l[i]) : 0.0);
            if (std::isfinite(dist)) comp = std::max(comp, std::abs(y[i]) * dist);
        }
        sol.residuals.complementarity = comp;
    }
    if (polished) sol.method = "admm+polish";
    sol.status = (converged || polished) && sol.residuals.primal <= 1e-6 ? SolveStatus::Optimal
                                                                         : SolveStatus::IterationLimit;
    return sol;
}

}  // namespace ctmflow
