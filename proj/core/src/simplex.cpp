#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdint>

#include "ctmflow/errors.hpp"
#include "ctmflow/solver.hpp"

namespace ctmflow {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

enum class State : std::uint8_t { Basic, AtLower, AtUpper, Free };

// Bound origin: -1 is the program's own bound, otherwise (row, coefficient) of a folded singleton row.
struct BoundOrigin {
    int row = -1;
    double coef = 0.0;
};

struct StandardForm {
    int m = 0;
    int structural = 0;
    std::vector<std::vector<std::pair<int, double>>> cols;
    std::vector<double> b, lo, hi;
    std::vector<int> program_row;   // kept row -> program row
    std::vector<double> row_scale;  // kept row = program row / scale
    std::vector<BoundOrigin> lo_origin, hi_origin;
    bool infeasible = false;
    std::vector<double> certificate;  // program-row multipliers when presolve proves infeasibility
};

StandardForm presolve(const ConvexProgram& P, double tol) {
    StandardForm sf;
    const int n = P.variable_count();
    sf.structural = n;
    sf.lo = P.lower;
    sf.hi = P.upper;
    sf.lo_origin.assign(n, {});
    sf.hi_origin.assign(n, {});

    auto fail_rows = [&](std::vector<std::pair<int, double>> mult) {
        sf.infeasible = true;
        sf.certificate.assign(P.row_count(), 0.0);
        for (auto [r, y] : mult)
            if (r >= 0) sf.certificate[r] += y;
    };

    std::vector<int> kept;
    for (int r = 0; r < P.row_count() && !sf.infeasible; ++r) {
        const Row& row = P.rows[r];
        if (row.terms.empty()) {
            const bool bad = row.sense == RowSense::Equal ? std::abs(row.rhs) > tol : row.rhs < -tol;
            if (bad) fail_rows({{r, row.sense == RowSense::Equal && row.rhs > 0 ? -1.0 : 1.0}});
            continue;
        }
        if (row.terms.size() > 1) {
            kept.push_back(r);
            continue;
        }
        const auto [j, a] = row.terms.front();
        const double v = row.rhs / a;
        const bool sets_upper = row.sense == RowSense::Equal || a > 0;
        const bool sets_lower = row.sense == RowSense::Equal || a < 0;
        if (sets_upper && v < sf.hi[j]) {
            sf.hi[j] = v;
            sf.hi_origin[j] = {r, a};
        }
        if (sets_lower && v > sf.lo[j]) {
            sf.lo[j] = v;
            sf.lo_origin[j] = {r, a};
        }
        if (sf.lo[j] > sf.hi[j] + tol) {
            // lower origin (row or bound) contradicts upper origin
            std::vector<std::pair<int, double>> mult;
            const auto lo_o = sf.lo_origin[j], hi_o = sf.hi_origin[j];
            // for a row with coefficient a defining the bound, multiplier 1/|a| (sign follows sense)
            if (hi_o.row >= 0) mult.emplace_back(hi_o.row, 1.0 / hi_o.coef);
            if (lo_o.row >= 0) mult.emplace_back(lo_o.row, -1.0 / lo_o.coef);
            fail_rows(mult);
        } else if (sf.lo[j] > sf.hi[j]) {
            sf.lo[j] = sf.hi[j] = 0.5 * (sf.lo[j] + sf.hi[j]);
        }
    }
    if (sf.infeasible) return sf;

    sf.m = static_cast<int>(kept.size());
    sf.cols.assign(n, {});
    sf.b.resize(sf.m);
    sf.row_scale.resize(sf.m);
    sf.program_row = kept;
    for (int k = 0; k < sf.m; ++k) {
        const Row& row = P.rows[kept[k]];
        double norm = 0.0;
        for (const auto& [j, a] : row.terms) norm += a * a;
        norm = std::sqrt(norm);
        sf.row_scale[k] = norm;
        for (const auto& [j, a] : row.terms) sf.cols[j].emplace_back(k, a / norm);
        sf.b[k] = row.rhs / norm;
    }
    for (int k = 0; k < sf.m; ++k) {
        if (P.rows[kept[k]].sense != RowSense::LessEqual) continue;
        sf.cols.push_back({{k, 1.0}});
        sf.lo.push_back(0.0);
        sf.hi.push_back(kInf);
    }
    return sf;
}

class RevisedSimplex {
public:
    RevisedSimplex(StandardForm& sf, const SimplexOptions& opt) : sf_(sf), opt_(opt), m_(sf.m) {}

    // Returns status of the combined two-phase run.
    SolveStatus run(const std::vector<double>& cost) {
        setup_initial_basis();
        std::vector<double> c1(cols().size(), 0.0);
        bool need_phase1 = false;
        for (std::size_t j = first_artificial_; j < cols().size(); ++j) {
            c1[j] = 1.0;
            need_phase1 = true;
        }
        if (need_phase1) {
            const auto st = iterate(c1);
            if (st == SolveStatus::IterationLimit) return st;
            double infeas = 0.0;
            for (std::size_t j = first_artificial_; j < cols().size(); ++j) infeas += value(static_cast<int>(j));
            if (infeas > 1e-8 * std::max(1.0, bnorm_)) {
                phase1_pi_ = btran_costs(c1);
                return SolveStatus::Infeasible;
            }
            for (std::size_t j = first_artificial_; j < cols().size(); ++j) {
                sf_.hi[j] = 0.0;
                if (state_[j] != State::Basic) {
                    state_[j] = State::AtLower;
                    x_[j] = 0.0;
                }
            }
            refactor();
        }
        cost_ = cost;
        cost_.resize(cols().size(), 0.0);
        return iterate(cost_);
    }

    const std::vector<std::vector<std::pair<int, double>>>& cols() const { return sf_.cols; }

    double value(int j) const { return state_[j] == State::Basic ? xb_[pos_[j]] : x_[j]; }

    std::vector<double> primal() const {
        std::vector<double> v(cols().size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = value(static_cast<int>(j));
        return v;
    }

    // Row multipliers for the given cost vector at the current basis (fresh factorization).
    std::vector<double> btran_costs(const std::vector<double>& cost) {
        refactor();
        Vec cb(m_);
        for (int r = 0; r < m_; ++r) cb[r] = cost[basis_[r]];
        return btran(cb);
    }

    long iterations() const { return iterations_; }
    State state(int j) const { return state_[j]; }

private:
    void setup_initial_basis() {
        const int ncols = static_cast<int>(cols().size());
        state_.assign(ncols, State::AtLower);
        x_.assign(ncols, 0.0);
        std::vector<double> r(sf_.b);
        bnorm_ = 0.0;
        for (double v : sf_.b) bnorm_ = std::max(bnorm_, std::abs(v));
        for (int j = 0; j < ncols; ++j) {
            const double lo = sf_.lo[j], hi = sf_.hi[j];
            if (std::isfinite(lo)) { state_[j] = State::AtLower; x_[j] = lo; }
            else if (std::isfinite(hi)) { state_[j] = State::AtUpper; x_[j] = hi; }
            else { state_[j] = State::Free; x_[j] = 0.0; }
            if (x_[j] != 0.0)
                for (const auto& [i, a] : cols()[j]) r[i] -= a * x_[j];
        }
        // slack columns come right after the structural ones, one per LessEqual row
        std::vector<int> slack_of_row(m_, -1);
        for (int j = sf_.structural; j < ncols; ++j) slack_of_row[cols()[j].front().first] = j;

        basis_.assign(m_, -1);
        pos_.assign(ncols, -1);
        first_artificial_ = ncols;
        xb_.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            const int s = slack_of_row[i];
            int j;
            if (s >= 0 && r[i] >= 0) {
                j = s;
            } else {
                j = static_cast<int>(sf_.cols.size());
                sf_.cols.push_back({{i, r[i] >= 0 ? 1.0 : -1.0}});
                sf_.lo.push_back(0.0);
                sf_.hi.push_back(kInf);
                state_.push_back(State::AtLower);
                x_.push_back(0.0);
                pos_.push_back(-1);
                if (s >= 0) {
                    // slack stays nonbasic at zero; r accounted for by the artificial
                }
            }
            basis_[i] = j;
            pos_[j] = i;
            state_[j] = State::Basic;
            xb_[i] = std::abs(r[i]);
        }
        refactor();
    }

    void refactor() {
        etas_.clear();
        since_refactor_ = 0;
        if (m_ == 0) return;  // no rows: nothing to factor
        std::vector<Eigen::Triplet<double>> trip;
        for (int r = 0; r < m_; ++r)
            for (const auto& [i, a] : cols()[basis_[r]]) trip.emplace_back(i, r, a);
        SpMat B(m_, m_);
        B.setFromTriplets(trip.begin(), trip.end());
        B.makeCompressed();
        lu_.analyzePattern(B);
        lu_.factorize(B);
        if (lu_.info() != Eigen::Success) throw SolverError("simplex: singular basis matrix");
        // recompute basic values from scratch
        Vec rhs = Eigen::Map<const Vec>(sf_.b.data(), m_);
        for (std::size_t j = 0; j < cols().size(); ++j) {
            if (state_[j] == State::Basic || x_[j] == 0.0) continue;
            for (const auto& [i, a] : cols()[j]) rhs[i] -= a * x_[j];
        }
        Vec xb = lu_.solve(rhs);
        for (int r = 0; r < m_; ++r) xb_[r] = xb[r];
    }

    Vec ftran(int j) const {
        Vec v = Vec::Zero(m_);
        if (m_ == 0) return v;
        for (const auto& [i, a] : cols()[j]) v[i] = a;
        v = lu_.solve(v).eval();
        for (const auto& e : etas_) {
            const double vr = v[e.r];
            if (vr == 0.0) continue;
            v[e.r] = 0.0;
            for (const auto& [i, h] : e.entries) v[i] += h * vr;
        }
        return v;
    }

    std::vector<double> btran(Vec v) {
        if (m_ == 0) return {};
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double s = 0.0;
            for (const auto& [i, h] : it->entries) s += h * v[i];
            v[it->r] = s;
        }
        Vec pi = lu_.transpose().solve(v);
        return {pi.data(), pi.data() + m_};
    }

    double reduced_cost(int j, const std::vector<double>& cost, const std::vector<double>& pi) const {
        double d = cost[j];
        for (const auto& [i, a] : cols()[j]) d -= pi[i] * a;
        return d;
    }

    SolveStatus iterate(const std::vector<double>& cost) {
        const int ncols = static_cast<int>(cols().size());
        int degenerate = 0;
        bool bland = false;
        while (true) {
            if (iterations_ >= opt_.max_iterations) return SolveStatus::IterationLimit;
            if (since_refactor_ >= opt_.refactor_every) refactor();

            Vec cb(m_);
            for (int r = 0; r < m_; ++r) cb[r] = cost[basis_[r]];
            const auto pi = btran(cb);

            int q = -1;
            double best = 0.0, dq = 0.0;
            for (int j = 0; j < ncols; ++j) {
                const State s = state_[j];
                if (s == State::Basic || sf_.lo[j] == sf_.hi[j]) continue;
                const double d = reduced_cost(j, cost, pi);
                double score = 0.0;
                if (s == State::AtLower && d < -opt_.optimality_tol) score = -d;
                else if (s == State::AtUpper && d > opt_.optimality_tol) score = d;
                else if (s == State::Free && std::abs(d) > opt_.optimality_tol) score = std::abs(d);
                if (score <= 0.0) continue;
                if (bland) {
                    q = j;
                    dq = d;
                    break;
                }
                if (score > best) {
                    best = score;
                    q = j;
                    dq = d;
                }
            }
            if (q < 0) return SolveStatus::Optimal;

            const Vec alpha = ftran(q);
            const double dir = dq < 0 ? 1.0 : -1.0;
            const double tol = opt_.feasibility_tol;
            const double piv_tol = 1e-9;

            // Harris pass 1: relaxed step bound
            double theta_relaxed = kInf;
            for (int r = 0; r < m_; ++r) {
                const double rate = dir * alpha[r];
                if (std::abs(rate) <= piv_tol) continue;
                const int b = basis_[r];
                if (rate > 0 && std::isfinite(sf_.lo[b]))
                    theta_relaxed = std::min(theta_relaxed, (xb_[r] - sf_.lo[b] + tol) / rate);
                else if (rate < 0 && std::isfinite(sf_.hi[b]))
                    theta_relaxed = std::min(theta_relaxed, (sf_.hi[b] - xb_[r] + tol) / -rate);
            }
            // pass 2: among rows within the relaxed bound pick the largest pivot (or smallest index)
            int leave = -1;
            double theta = kInf, best_piv = 0.0;
            bool leave_to_upper = false;
            for (int r = 0; r < m_; ++r) {
                const double rate = dir * alpha[r];
                if (std::abs(rate) <= piv_tol) continue;
                const int b = basis_[r];
                double lim;
                bool to_upper;
                if (rate > 0 && std::isfinite(sf_.lo[b])) { lim = (xb_[r] - sf_.lo[b]) / rate; to_upper = false; }
                else if (rate < 0 && std::isfinite(sf_.hi[b])) { lim = (sf_.hi[b] - xb_[r]) / -rate; to_upper = true; }
                else continue;
                if (lim > theta_relaxed) continue;
                bool take;
                if (bland) take = leave < 0 || lim < theta - 1e-12 || (lim <= theta + 1e-12 && b < basis_[leave]);
                else take = std::abs(rate) > best_piv;
                if (take) {
                    leave = r;
                    theta = lim;
                    best_piv = std::abs(rate);
                    leave_to_upper = to_upper;
                }
            }
            theta = std::max(theta, 0.0);
            const double flip = sf_.hi[q] - sf_.lo[q];
            ++iterations_;

            if (std::isfinite(flip) && flip <= theta) {
                // bound flip, basis unchanged
                for (int r = 0; r < m_; ++r) xb_[r] -= flip * dir * alpha[r];
                state_[q] = state_[q] == State::AtLower ? State::AtUpper : State::AtLower;
                x_[q] = state_[q] == State::AtLower ? sf_.lo[q] : sf_.hi[q];
                degenerate = 0;
                bland = false;
                continue;
            }
            if (leave < 0) return SolveStatus::Unbounded;

            if (theta <= 1e-12) {
                if (++degenerate >= opt_.bland_after) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }

            const double xq = x_[q] + dir * theta;
            for (int r = 0; r < m_; ++r) xb_[r] -= theta * dir * alpha[r];
            const int out = basis_[leave];
            state_[out] = leave_to_upper ? State::AtUpper : State::AtLower;
            x_[out] = leave_to_upper ? sf_.hi[out] : sf_.lo[out];
            pos_[out] = -1;
            basis_[leave] = q;
            pos_[q] = leave;
            state_[q] = State::Basic;
            xb_[leave] = xq;

            Eta e;
            e.r = leave;
            const double ar = alpha[leave];
            for (int r = 0; r < m_; ++r) {
                if (r == leave) e.entries.emplace_back(r, 1.0 / ar);
                else if (alpha[r] != 0.0) e.entries.emplace_back(r, -alpha[r] / ar);
            }
            etas_.push_back(std::move(e));
            ++since_refactor_;
        }
    }

    struct Eta {
        int r = 0;
        std::vector<std::pair<int, double>> entries;
    };

    StandardForm& sf_;
    SimplexOptions opt_;
    int m_;
    std::vector<State> state_;
    std::vector<double> x_;    // nonbasic values
    std::vector<double> xb_;   // basic values by row
    std::vector<int> basis_;   // row -> column
    std::vector<int> pos_;     // column -> row or -1
    std::size_t first_artificial_ = 0;
    std::vector<Eta> etas_;
    int since_refactor_ = 0;
    long iterations_ = 0;
    double bnorm_ = 0.0;
    std::vector<double> cost_;
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;

public:
    std::vector<double> phase1_pi_;
};

// Program-row multipliers from standard-form multipliers; singleton rows absorb the reduced
// cost of variables sitting at a bound they define.
std::vector<double> program_duals(const ConvexProgram& P, const StandardForm& sf, const std::vector<double>& pi,
                                  const std::vector<double>& cost, const std::vector<double>& x) {
    std::vector<double> y(P.row_count(), 0.0);
    for (int k = 0; k < sf.m; ++k) y[sf.program_row[k]] = pi[k] / sf.row_scale[k];
    for (int j = 0; j < sf.structural; ++j) {
        double d = cost[j];
        for (const auto& [i, a] : sf.cols[j]) d -= pi[i] * a;
        const double tol = 1e-9 * std::max(1.0, std::abs(x[j]));
        const BoundOrigin* o = nullptr;
        if (d > 0 && sf.lo_origin[j].row >= 0 && std::abs(x[j] - sf.lo[j]) <= tol) o = &sf.lo_origin[j];
        if (d < 0 && sf.hi_origin[j].row >= 0 && std::abs(x[j] - sf.hi[j]) <= tol) o = &sf.hi_origin[j];
        if (o) y[o->row] += d / o->coef;
    }
    return y;
}

}  // namespace

double farkas_gap(const ConvexProgram& P, const std::vector<double>& pi) {
    std::vector<double> g(P.variable_count(), 0.0);
    double rhs = 0.0;
    for (int r = 0; r < P.row_count(); ++r) {
        double y = pi[r];
        if (P.rows[r].sense == RowSense::LessEqual && y < 0) {
            if (y < -1e-9) return -kInf;
            y = 0.0;
        }
        for (const auto& [j, a] : P.rows[r].terms) g[j] += y * a;
        rhs += y * P.rows[r].rhs;
    }
    double mn = 0.0;
    for (int j = 0; j < P.variable_count(); ++j) {
        if (g[j] > 1e-12) mn += g[j] * P.lower[j];
        else if (g[j] < -1e-12) mn += g[j] * P.upper[j];
    }
    return mn - rhs;
}

Solution solve_lp(const ConvexProgram& P, const SimplexOptions& opt) {
    if (P.is_quadratic()) throw ConfigError("solve_lp: program has a quadratic objective");
    Solution sol;
    sol.method = "revised-simplex";
    StandardForm sf = presolve(P, opt.feasibility_tol);
    if (sf.infeasible) {
        sol.status = SolveStatus::Infeasible;
        sol.farkas = sf.certificate;
        sol.values.assign(P.variable_count(), 0.0);
        return sol;
    }
    std::vector<double> cost(P.linear);

    RevisedSimplex spx(sf, opt);
    const SolveStatus st = spx.run(cost);
    sol.iterations = spx.iterations();
    const auto all = spx.primal();
    sol.values.assign(all.begin(), all.begin() + P.variable_count());
    sol.objective = P.objective(sol.values);
    sol.residuals.primal = P.primal_residual(sol.values);
    sol.status = st;

    if (st == SolveStatus::Infeasible) {
        std::vector<double> c1(sf.cols.size(), 0.0);
        auto y = program_duals(P, sf, spx.phase1_pi_, c1, all);
        for (double& v : y) v = -v;
        if (farkas_gap(P, y) <= 0) for (double& v : y) v = -v;
        sol.farkas = std::move(y);
        return sol;
    }
    if (st != SolveStatus::Optimal) return sol;

    // Reconstruct duals from a fresh factorization of the final basis.
    std::vector<double> full_cost(cost);
    full_cost.resize(sf.cols.size(), 0.0);
    const auto pi = spx.btran_costs(full_cost);
    const auto refreshed = spx.primal();
    sol.values.assign(refreshed.begin(), refreshed.begin() + P.variable_count());
    sol.objective = P.objective(sol.values);
    sol.residuals.primal = P.primal_residual(sol.values);
    sol.duals = program_duals(P, sf, pi, full_cost, refreshed);

    // Dual objective and dual feasibility in program space.
    std::vector<double> d(P.linear);
    double dual_obj = 0.0, dual_res = 0.0, comp = 0.0;
    for (int r = 0; r < P.row_count(); ++r) {
        const double y = sol.duals[r];
        dual_obj += y * P.rows[r].rhs;
        for (const auto& [j, a] : P.rows[r].terms) d[j] -= y * a;
        if (P.rows[r].sense == RowSense::LessEqual) {
            dual_res = std::max(dual_res, y);
            comp = std::max(comp, std::abs(y) * std::abs(P.activity(r, sol.values) - P.rows[r].rhs));
        }
    }
    for (int j = 0; j < P.variable_count(); ++j) {
        const double dj = std::abs(d[j]) <= 1e-12 ? 0.0 : d[j];
        if (dj > 0) {
            if (std::isfinite(P.lower[j])) dual_obj += dj * P.lower[j];
            else dual_res = std::max(dual_res, dj);
            comp = std::max(comp, dj * std::abs(sol.values[j] - P.lower[j]));
        } else if (dj < 0) {
            if (std::isfinite(P.upper[j])) dual_obj += dj * P.upper[j];
            else dual_res = std::max(dual_res, -dj);
            comp = std::max(comp, -dj * std::abs(P.upper[j] - sol.values[j]));
        }
    }
    sol.dual_objective = dual_obj;
    sol.residuals.dual = dual_res;
    sol.residuals.complementarity = comp;
    if (sol.residuals.primal > 1e-8) sol.status = SolveStatus::IterationLimit;
    return sol;
}

}  // namespace ctmflow
