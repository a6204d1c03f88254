#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "ctmflow/errors.hpp"
#include "ctmflow/solver.hpp"

namespace ctmflow {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

double binomial_sum(int m, int lo, int hi) {
    double total = 0.0;
    for (int s = lo; s <= hi; ++s) {
        double c = 1.0;
        for (int i = 0; i < s; ++i) c = c * (m - i) / (i + 1);
        total += c;
    }
    return total;
}

}  // namespace

Solution brute_force_oracle(const ConvexProgram& P, int max_free_dims, long max_subsets) {
    Solution sol;
    sol.method = "oracle";
    const int n = P.variable_count();

    std::vector<Eigen::RowVectorXd> eq_rows, in_rows;
    std::vector<double> eq_rhs, in_rhs;
    auto dense = [n](const Row& r) {
        Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(n);
        for (const auto& [j, v] : r.terms) a[j] += v;
        return a;
    };
    for (const Row& r : P.rows) {
        if (r.sense == RowSense::Equal) {
            eq_rows.push_back(dense(r));
            eq_rhs.push_back(r.rhs);
        } else {
            in_rows.push_back(dense(r));
            in_rhs.push_back(r.rhs);
        }
    }
    for (int j = 0; j < n; ++j) {
        Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
        e[j] = 1.0;
        if (P.lower[j] == P.upper[j]) {
            eq_rows.push_back(e);
            eq_rhs.push_back(P.lower[j]);
            continue;
        }
        if (std::isfinite(P.upper[j])) {
            in_rows.push_back(e);
            in_rhs.push_back(P.upper[j]);
        }
        if (std::isfinite(P.lower[j])) {
            in_rows.push_back(-e);
            in_rhs.push_back(-P.lower[j]);
        }
    }

    // v = v0 + N theta spans the equality-feasible affine set.
    Vec v0 = Vec::Zero(n);
    Mat N = Mat::Identity(n, n);
    if (!eq_rows.empty()) {
        const auto me = static_cast<Eigen::Index>(eq_rows.size());
        Mat Ae(me, n);
        Vec be(me);
        for (Eigen::Index i = 0; i < me; ++i) {
            Ae.row(i) = eq_rows[i];
            be[i] = eq_rhs[i];
        }
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(Ae);
        v0 = cod.solve(be);
        if ((Ae * v0 - be).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + be.lpNorm<Eigen::Infinity>())) {
            sol.status = SolveStatus::Infeasible;
            return sol;
        }
        Eigen::FullPivLU<Mat> lu(Ae);
        lu.setThreshold(1e-10);
        N = lu.kernel();
        if (lu.rank() == n) N.resize(n, 0);
    }
    const auto k = static_cast<int>(N.cols());
    if (k > max_free_dims)
        throw ConfigError("oracle: " + std::to_string(k) + " free dimensions exceed the limit of " +
                          std::to_string(max_free_dims));

    const auto mi = static_cast<Eigen::Index>(in_rows.size());
    Mat G(mi, k);
    Vec h(mi);
    for (Eigen::Index i = 0; i < mi; ++i) {
        G.row(i) = in_rows[i] * N;
        h[i] = in_rhs[i] - in_rows[i].dot(v0);
    }
    Vec c = Eigen::Map<const Vec>(P.linear.data(), n);
    Vec q = Eigen::Map<const Vec>(P.quadratic.data(), n);
    const bool quad = P.is_quadratic();
    const Mat H = 2.0 * N.transpose() * q.asDiagonal() * N;
    const Vec g = N.transpose() * (c + 2.0 * q.cwiseProduct(v0));

    const int smin = quad ? 0 : std::min<int>(k, static_cast<int>(mi));
    const int smax = std::min<int>(k, static_cast<int>(mi));
    if (binomial_sum(static_cast<int>(mi), smin, smax) > static_cast<double>(max_subsets))
        throw ConfigError("oracle: too many active-set candidates");

    double best = kInf;
    Vec best_v;
    long tried = 0;
    const double feas_tol = 1e-9 * (1.0 + (mi > 0 ? h.lpNorm<Eigen::Infinity>() : 0.0));
    for (int s = smin; s <= smax; ++s) {
        std::vector<int> idx(s);
        for (int i = 0; i < s; ++i) idx[i] = i;
        while (true) {
            ++tried;
            Mat K = Mat::Zero(k + s, k + s);
            Vec rhs(k + s);
            K.topLeftCorner(k, k) = H;
            rhs.head(k) = -g;
            for (int a = 0; a < s; ++a) {
                K.block(0, k + a, k, 1) = G.row(idx[a]).transpose();
                K.block(k + a, 0, 1, k) = G.row(idx[a]);
                rhs[k + a] = h[idx[a]];
            }
            Vec th = Vec::Zero(k);
            bool ok = true;
            if (k + s > 0) {
                Eigen::CompleteOrthogonalDecomposition<Mat> cod(K);
                const Vec x = cod.solve(rhs);
                ok = (K * x - rhs).lpNorm<Eigen::Infinity>() <= 1e-8 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
                th = x.head(k);
            }
            if (ok && (mi == 0 || (G * th - h).maxCoeff() <= feas_tol)) {
                const Vec v = v0 + N * th;
                std::vector<double> vs(v.data(), v.data() + n);
                const double obj = P.objective(vs);
                if (obj < best) {
                    best = obj;
                    best_v = v;
                }
            }
            int p = s - 1;
            while (p >= 0 && idx[p] == static_cast<int>(mi) - s + p) --p;
            if (p < 0) break;
            ++idx[p];
            for (int r = p + 1; r < s; ++r) idx[r] = idx[r - 1] + 1;
        }
    }
    sol.iterations = tried;
    if (!std::isfinite(best)) {
        sol.status = SolveStatus::Infeasible;
        return sol;
    }
    sol.values.assign(best_v.data(), best_v.data() + n);
    sol.objective = P.objective(sol.values);
    sol.residuals.primal = P.primal_residual(sol.values);
    sol.status = SolveStatus::Optimal;
    return sol;
}

}  // namespace ctmflow
