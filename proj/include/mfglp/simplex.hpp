#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mfglp/core.hpp"

namespace mfglp {

/// Compressed sparse column matrix (equality constraint system A v = rhs).
struct SparseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> col_ptr{0}; // cols + 1 offsets into rows/vals
    std::vector<int> row_idx;
    numvec vals;

    void add_column(const std::vector<int>& r, const numvec& v) {
        for (size_t q = 0; q < r.size(); ++q) {
            row_idx.push_back(r[q]);
            vals.push_back(v[q]);
        }
        col_ptr.push_back(static_cast<int>(row_idx.size()));
        ++cols;
    }
    int nnz() const { return static_cast<int>(row_idx.size()); }
};

/// ||A x - b||_inf, the primal feasibility residual.
inline double residual_inf(const SparseMatrix& A, const numvec& x, const numvec& b) {
    numvec r(b);
    for (int j = 0; j < A.cols; ++j) {
        const double xj = x[static_cast<size_t>(j)];
        if (xj == 0.0) continue;
        for (int q = A.col_ptr[static_cast<size_t>(j)]; q < A.col_ptr[static_cast<size_t>(j) + 1]; ++q)
            r[static_cast<size_t>(A.row_idx[static_cast<size_t>(q)])] -= A.vals[static_cast<size_t>(q)] * xj;
    }
    double worst = 0.0;
    for (double v : r) worst = std::max(worst, std::abs(v));
    return worst;
}

enum class LPStatus { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(LPStatus s) {
    switch (s) {
        case LPStatus::optimal: return "optimal";
        case LPStatus::infeasible: return "infeasible";
        case LPStatus::unbounded: return "unbounded";
        case LPStatus::iteration_limit: return "iteration-limit";
    }
    return "unknown";
}

struct SimplexOptions {
    double tol = 1e-9;   // optimality (reduced cost) tolerance
    long max_iters = -1; // <= 0 picks the default 10 * (rows + cols)
};

struct SimplexResult {
    LPStatus status = LPStatus::optimal;
    double value = 0.0;
    numvec x; // structural variables
    numvec y; // row multipliers (signs of the original rows)
    long iterations = 0;
    std::string warning;
};

namespace detail {

/**
 * Two-phase revised simplex for  max c^T v  s.t.  A v = b, v >= 0.
 *
 * The basis inverse is kept dense (row-major) and updated by the product
 * form; entering variables are picked by Dantzig pricing with lowest-index
 * tie-breaking, falling back to Bland's rule after a run of degenerate
 * pivots, which makes every run deterministic and cycling-free. A crash pass
 * seeds the basis with positive singleton columns (the exit-measure columns
 * of the occupation LP cover every row, so those instances skip phase 1
 * entirely); rows left uncovered get phase-1 artificials.
 */
class RevisedSimplex {
public:
    RevisedSimplex(const SparseMatrix& A, const numvec& b, const numvec& c,
                   const SimplexOptions& opts)
        : m_(A.rows), n_(A.cols), opts_(opts) {
        if (static_cast<int>(b.size()) != A.rows || static_cast<int>(c.size()) != A.cols)
            throw ShapeError("solve_lp: objective/rhs sizes do not match the constraint matrix");
        max_iters_ = opts.max_iters > 0 ? opts.max_iters : 10L * (A.rows + A.cols);
        // Normalize row signs so the right-hand side is nonnegative.
        sign_.assign(static_cast<size_t>(m_), 1.0);
        b_.resize(static_cast<size_t>(m_));
        for (int r = 0; r < m_; ++r) {
            sign_[static_cast<size_t>(r)] = b[static_cast<size_t>(r)] < 0.0 ? -1.0 : 1.0;
            b_[static_cast<size_t>(r)] = std::abs(b[static_cast<size_t>(r)]);
        }
        col_ptr_ = A.col_ptr;
        row_idx_ = A.row_idx;
        vals_ = A.vals;
        for (size_t q = 0; q < vals_.size(); ++q)
            vals_[q] *= sign_[static_cast<size_t>(row_idx_[q])];
        cost_ = c;
    }

    SimplexResult solve() {
        crash_basis();
        SimplexResult res;
        if (!artificial_rows_.empty()) {
            const LPStatus st = run_phase(/*phase1=*/true);
            res.iterations += iters_;
            if (st == LPStatus::iteration_limit) return finish(res, st, "iteration limit reached in phase 1");
            if (phase1_objective() < -feas_tol()) return finish(res, LPStatus::infeasible, "");
            drive_out_artificials();
        }
        const LPStatus st = run_phase(/*phase1=*/false);
        res.iterations += iters_;
        if (st == LPStatus::unbounded) return finish(res, st, "");
        if (st == LPStatus::iteration_limit)
            return finish(res, st, "iteration limit reached; returning best basis found");
        // Verify the postcondition; refactor once from scratch if drift crept in.
        if (solution_residual() > 1e-8) {
            refactor();
            if (solution_residual() > 1e-8)
                throw NumericError("solve_lp: basis residual " + std::to_string(solution_residual()) +
                                   " exceeds 1e-8 after refactorization");
        }
        return finish(res, LPStatus::optimal, "");
    }

private:
    int m_, n_;
    SimplexOptions opts_;
    long max_iters_ = 0;
    numvec sign_, b_, cost_;
    std::vector<int> col_ptr_, row_idx_;
    numvec vals_;

    // Basis state.
    std::vector<int> basis_;     // column per row; >= n_ means artificial
    numvec binv_;                // dense row-major m x m
    numvec xb_;                  // basic values
    std::vector<int> where_;     // col -> basic row, or -1
    std::vector<int> artificial_rows_;
    long iters_ = 0;

    double feas_tol() const {
        double bmax = 1.0;
        for (double v : b_) bmax = std::max(bmax, std::abs(v));
        return opts_.tol * bmax;
    }

    int ncols_total() const { return n_ + static_cast<int>(artificial_rows_.size()); }

    bool is_artificial(int col) const { return col >= n_; }

    // Column access that treats artificial columns as unit vectors.
    template <typename F>
    void for_column(int col, F&& fn) const {
        if (is_artificial(col)) {
            fn(artificial_rows_[static_cast<size_t>(col - n_)], 1.0);
            return;
        }
        for (int q = col_ptr_[static_cast<size_t>(col)]; q < col_ptr_[static_cast<size_t>(col) + 1]; ++q)
            fn(row_idx_[static_cast<size_t>(q)], vals_[static_cast<size_t>(q)]);
    }

    void crash_basis() {
        basis_.assign(static_cast<size_t>(m_), -1);
        where_.assign(static_cast<size_t>(n_), -1);
        numvec diag(static_cast<size_t>(m_), 1.0);
        for (int j = 0; j < n_; ++j) {
            const int lo = col_ptr_[static_cast<size_t>(j)];
            const int hi = col_ptr_[static_cast<size_t>(j) + 1];
            if (hi - lo != 1) continue;
            const int r = row_idx_[static_cast<size_t>(lo)];
            const double v = vals_[static_cast<size_t>(lo)];
            if (v > opts_.tol && basis_[static_cast<size_t>(r)] == -1) {
                basis_[static_cast<size_t>(r)] = j;
                where_[static_cast<size_t>(j)] = r;
                diag[static_cast<size_t>(r)] = v;
            }
        }
        artificial_rows_.clear();
        for (int r = 0; r < m_; ++r)
            if (basis_[static_cast<size_t>(r)] == -1) {
                basis_[static_cast<size_t>(r)] = n_ + static_cast<int>(artificial_rows_.size());
                artificial_rows_.push_back(r);
            }
        binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
        xb_.assign(static_cast<size_t>(m_), 0.0);
        for (int r = 0; r < m_; ++r) {
            binv_[static_cast<size_t>(r) * m_ + r] = 1.0 / diag[static_cast<size_t>(r)];
            xb_[static_cast<size_t>(r)] = b_[static_cast<size_t>(r)] / diag[static_cast<size_t>(r)];
        }
    }

    double phase1_objective() const {
        double s = 0.0;
        for (int r = 0; r < m_; ++r)
            if (is_artificial(basis_[static_cast<size_t>(r)])) s -= xb_[static_cast<size_t>(r)];
        return s;
    }

    double cost_of(int col, bool phase1) const {
        if (phase1) return is_artificial(col) ? -1.0 : 0.0;
        return is_artificial(col) ? 0.0 : cost_[static_cast<size_t>(col)];
    }

    void btran(bool phase1, numvec& y) const {
        y.assign(static_cast<size_t>(m_), 0.0);
        for (int r = 0; r < m_; ++r) {
            const double cb = cost_of(basis_[static_cast<size_t>(r)], phase1);
            if (cb == 0.0) continue;
            const double* row = binv_.data() + static_cast<size_t>(r) * m_;
            for (int q = 0; q < m_; ++q) y[static_cast<size_t>(q)] += cb * row[q];
        }
    }

    double reduced_cost(int j, bool phase1, const numvec& y) const {
        double rc = cost_of(j, phase1);
        for (int q = col_ptr_[static_cast<size_t>(j)]; q < col_ptr_[static_cast<size_t>(j) + 1]; ++q)
            rc -= y[static_cast<size_t>(row_idx_[static_cast<size_t>(q)])] * vals_[static_cast<size_t>(q)];
        return rc;
    }

    void ftran(int col, numvec& d) const {
        d.assign(static_cast<size_t>(m_), 0.0);
        for_column(col, [&](int i, double v) {
            const double* bc = binv_.data() + i; // column i of row-major binv_: stride m_
            double* out = d.data();
            for (int r = 0; r < m_; ++r) out[r] += v * bc[static_cast<size_t>(r) * m_];
        });
    }

    // Ratio test: min xb/d over d > tol; ties to the smallest basic column
    // index (Bland-compatible and deterministic).
    int ratio_test(const numvec& d) const {
        int leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < m_; ++r) {
            const double dr = d[static_cast<size_t>(r)];
            if (dr <= 1e-9) continue;
            const double ratio = std::max(xb_[static_cast<size_t>(r)], 0.0) / dr;
            if (ratio < best - 1e-12 ||
                (ratio <= best + 1e-12 && (leave == -1 || basis_[static_cast<size_t>(r)] < basis_[static_cast<size_t>(leave)])))
            {
                best = ratio;
                leave = r;
            }
        }
        return leave;
    }

    void pivot(int entering, int leave, const numvec& d) {
        const double dr = d[static_cast<size_t>(leave)];
        const double theta = std::max(xb_[static_cast<size_t>(leave)], 0.0) / dr;
        for (int r = 0; r < m_; ++r) xb_[static_cast<size_t>(r)] -= theta * d[static_cast<size_t>(r)];
        xb_[static_cast<size_t>(leave)] = theta;
        for (int r = 0; r < m_; ++r)
            if (xb_[static_cast<size_t>(r)] < 0.0 && xb_[static_cast<size_t>(r)] > -1e-11)
                xb_[static_cast<size_t>(r)] = 0.0;

        double* rowr = binv_.data() + static_cast<size_t>(leave) * m_;
        const double inv = 1.0 / dr;
        for (int q = 0; q < m_; ++q) rowr[q] *= inv;
        for (int r = 0; r < m_; ++r) {
            if (r == leave) continue;
            const double dr2 = d[static_cast<size_t>(r)];
            if (std::abs(dr2) < 1e-14) continue;
            double* rowi = binv_.data() + static_cast<size_t>(r) * m_;
            for (int q = 0; q < m_; ++q) rowi[q] -= dr2 * rowr[q];
        }

        const int old = basis_[static_cast<size_t>(leave)];
        if (!is_artificial(old)) where_[static_cast<size_t>(old)] = -1;
        basis_[static_cast<size_t>(leave)] = entering;
        if (!is_artificial(entering)) where_[static_cast<size_t>(entering)] = leave;
    }

    LPStatus run_phase(bool phase1) {
        iters_ = 0;
        bool bland = false;
        int degenerate_streak = 0;
        numvec y, d;
        while (iters_ < max_iters_) {
            btran(phase1, y);
            int entering = -1;
            double best_rc = opts_.tol;
            for (int j = 0; j < n_; ++j) {
                if (where_[static_cast<size_t>(j)] >= 0) continue;
                const double rc = reduced_cost(j, phase1, y);
                if (rc > best_rc) {
                    best_rc = rc;
                    entering = j;
                    if (bland) break; // Bland: first improving index
                }
            }
            if (entering == -1) return LPStatus::optimal;
            ftran(entering, d);
            const int leave = ratio_test(d);
            if (leave == -1) {
                if (phase1)
                    throw NumericError("solve_lp: unbounded phase-1 direction (numerical breakdown)");
                return LPStatus::unbounded;
            }
            const double theta = std::max(xb_[static_cast<size_t>(leave)], 0.0) / d[static_cast<size_t>(leave)];
            pivot(entering, leave, d);
            ++iters_;
            if (theta <= 1e-12) {
                if (++degenerate_streak > 50) bland = true;
            } else {
                degenerate_streak = 0;
                bland = false;
            }
            if (iters_ % 128 == 0) refresh_basics();
        }
        return LPStatus::iteration_limit;
    }

    // Recompute basic values from the inverse to shed accumulated drift.
    void refresh_basics() {
        for (int r = 0; r < m_; ++r) {
            const double* row = binv_.data() + static_cast<size_t>(r) * m_;
            double s = 0.0;
            for (int q = 0; q < m_; ++q) s += row[q] * b_[static_cast<size_t>(q)];
            xb_[static_cast<size_t>(r)] = s < 0.0 && s > -1e-11 ? 0.0 : s;
        }
    }

    // Pivot zero-valued artificials out of the basis; drop rows that prove
    // linearly dependent (their artificial cannot be replaced).
    void drive_out_artificials() {
        numvec d;
        for (int r = 0; r < m_; ++r) {
            if (!is_artificial(basis_[static_cast<size_t>(r)])) continue;
            int replacement = -1;
            const double* rowr = binv_.data() + static_cast<size_t>(r) * m_;
            for (int j = 0; j < n_ && replacement == -1; ++j) {
                if (where_[static_cast<size_t>(j)] >= 0) continue;
                double pr = 0.0;
                for (int q = col_ptr_[static_cast<size_t>(j)]; q < col_ptr_[static_cast<size_t>(j) + 1]; ++q)
                    pr += rowr[row_idx_[static_cast<size_t>(q)]] * vals_[static_cast<size_t>(q)];
                if (std::abs(pr) > 1e-7) replacement = j;
            }
            if (replacement >= 0) {
                ftran(replacement, d);
                // The leaving value is zero, so this pivot keeps feasibility
                // regardless of the direction's sign.
                xb_[static_cast<size_t>(r)] = 0.0;
                pivot(replacement, r, d);
            }
            // else: dependent row; the artificial stays basic at zero. It can
            // never grow because every later pivot rescales, never shifts, a
            // zero basic value, and it never re-enters pricing.
        }
    }

    double solution_residual() const {
        numvec x(static_cast<size_t>(n_), 0.0);
        for (int r = 0; r < m_; ++r)
            if (!is_artificial(basis_[static_cast<size_t>(r)]))
                x[static_cast<size_t>(basis_[static_cast<size_t>(r)])] = xb_[static_cast<size_t>(r)];
        numvec res(b_);
        for (int j = 0; j < n_; ++j) {
            const double xj = x[static_cast<size_t>(j)];
            if (xj == 0.0) continue;
            for (int q = col_ptr_[static_cast<size_t>(j)]; q < col_ptr_[static_cast<size_t>(j) + 1]; ++q)
                res[static_cast<size_t>(row_idx_[static_cast<size_t>(q)])] -= vals_[static_cast<size_t>(q)] * xj;
        }
        for (int r = 0; r < m_; ++r)
            if (is_artificial(basis_[static_cast<size_t>(r)])) res[static_cast<size_t>(r)] -= xb_[static_cast<size_t>(r)];
        double worst = 0.0;
        for (double v : res) worst = std::max(worst, std::abs(v));
        return worst;
    }

    // Rebuild the dense inverse from the current basis by Gauss-Jordan with
    // partial pivoting, then refresh the basic values.
    void refactor() {
        numvec B(static_cast<size_t>(m_) * m_, 0.0);
        for (int r = 0; r < m_; ++r)
            for_column(basis_[static_cast<size_t>(r)], [&](int i, double v) {
                B[static_cast<size_t>(i) * m_ + r] = v;
            });
        numvec inv(static_cast<size_t>(m_) * m_, 0.0);
        for (int r = 0; r < m_; ++r) inv[static_cast<size_t>(r) * m_ + r] = 1.0;
        for (int col = 0; col < m_; ++col) {
            int piv = col;
            double best = std::abs(B[static_cast<size_t>(col) * m_ + col]);
            for (int r = col + 1; r < m_; ++r) {
                const double v = std::abs(B[static_cast<size_t>(r) * m_ + col]);
                if (v > best) {
                    best = v;
                    piv = r;
                }
            }
            if (best < 1e-12) throw NumericError("solve_lp: singular basis during refactorization");
            if (piv != col) {
                for (int q = 0; q < m_; ++q) {
                    std::swap(B[static_cast<size_t>(piv) * m_ + q], B[static_cast<size_t>(col) * m_ + q]);
                    std::swap(inv[static_cast<size_t>(piv) * m_ + q], inv[static_cast<size_t>(col) * m_ + q]);
                }
            }
            const double p = B[static_cast<size_t>(col) * m_ + col];
            for (int q = 0; q < m_; ++q) {
                B[static_cast<size_t>(col) * m_ + q] /= p;
                inv[static_cast<size_t>(col) * m_ + q] /= p;
            }
            for (int r = 0; r < m_; ++r) {
                if (r == col) continue;
                const double factor = B[static_cast<size_t>(r) * m_ + col];
                if (factor == 0.0) continue;
                for (int q = 0; q < m_; ++q) {
                    B[static_cast<size_t>(r) * m_ + q] -= factor * B[static_cast<size_t>(col) * m_ + q];
                    inv[static_cast<size_t>(r) * m_ + q] -= factor * inv[static_cast<size_t>(col) * m_ + q];
                }
            }
        }
        binv_.swap(inv);
        refresh_basics();
    }

    SimplexResult finish(SimplexResult res, LPStatus status, const std::string& warning) {
        res.status = status;
        res.warning = warning;
        res.x.assign(static_cast<size_t>(n_), 0.0);
        if (status == LPStatus::optimal || status == LPStatus::iteration_limit) {
            for (int r = 0; r < m_; ++r) {
                const int col = basis_[static_cast<size_t>(r)];
                if (!is_artificial(col)) res.x[static_cast<size_t>(col)] = xb_[static_cast<size_t>(r)];
            }
            double v = 0.0;
            for (int j = 0; j < n_; ++j) v += cost_[static_cast<size_t>(j)] * res.x[static_cast<size_t>(j)];
            res.value = v;
            numvec y;
            btran(/*phase1=*/false, y);
            res.y.assign(static_cast<size_t>(m_), 0.0);
            for (int r = 0; r < m_; ++r)
                res.y[static_cast<size_t>(r)] = y[static_cast<size_t>(r)] * sign_[static_cast<size_t>(r)];
        }
        return res;
    }
};

} // namespace detail

/// Solves max c^T v s.t. A v = b, v >= 0 with the deterministic two-phase
/// revised simplex described above.
inline SimplexResult solve_simplex(const SparseMatrix& A, const numvec& b, const numvec& c,
                                   const SimplexOptions& opts = {}) {
    detail::RevisedSimplex solver(A, b, c, opts);
    return solver.solve();
}

} // namespace mfglp
