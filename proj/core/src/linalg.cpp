#include "memfem/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace memfem {

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

SparseSym SparseSym::from_triplets(int n, std::vector<Triplet> ts) {
    std::sort(ts.begin(), ts.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseSym m;
    m.n_ = n;
    m.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    m.col_.reserve(ts.size());
    m.val_.reserve(ts.size());

    std::size_t i = 0;
    for (int r = 0; r < n; ++r) {
        while (i < ts.size() && ts[i].row == r) {
            const int c = ts[i].col;
            double v = 0.0;
            while (i < ts.size() && ts[i].row == r && ts[i].col == c) {
                v += ts[i].value;
                ++i;
            }
            m.col_.push_back(c);
            m.val_.push_back(v);
        }
        m.row_ptr_[static_cast<std::size_t>(r) + 1] = static_cast<int>(m.col_.size());
    }
    return m;
}

void SparseSym::multiply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(static_cast<std::size_t>(n_), 0.0);
    for (int r = 0; r < n_; ++r) {
        double s = 0.0;
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += val_[k] * x[col_[k]];
        y[r] = s;
    }
}

std::vector<double> SparseSym::multiply(const std::vector<double>& x) const {
    std::vector<double> y;
    multiply(x, y);
    return y;
}

double SparseSym::quadratic(const std::vector<double>& u) const {
    double s = 0.0;
    for (int r = 0; r < n_; ++r) {
        double row = 0.0;
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) row += val_[k] * u[col_[k]];
        s += u[r] * row;
    }
    return s;
}

std::vector<double> SparseSym::diagonal() const {
    std::vector<double> d(static_cast<std::size_t>(n_), 0.0);
    for (int r = 0; r < n_; ++r) {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            if (col_[k] == r) d[r] = val_[k];
        }
    }
    return d;
}

SparseSym SparseSym::plus_scaled(const SparseSym& other, double s) const {
    if (n_ != other.n_ || row_ptr_ != other.row_ptr_ || col_ != other.col_)
        throw NumericError("matrix patterns differ in plus_scaled");
    SparseSym out = *this;
    for (std::size_t k = 0; k < val_.size(); ++k) out.val_[k] += s * other.val_[k];
    return out;
}

SolveReport cg_solve(const SparseSym& a, const std::vector<double>& b,
                     std::vector<double>& x, CgOptions opt) {
    const int n = a.size();
    x.assign(static_cast<std::size_t>(n), 0.0);

    SolveReport rep;
    const double bnorm = norm2(b);
    rep.initial_residual = bnorm;
    if (bnorm == 0.0) {
        rep.converged = true;
        return rep;
    }

    const std::vector<double> diag = a.diagonal();
    std::vector<double> inv_diag(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        if (!(diag[i] > 0.0))
            throw PreconditionerError("non-positive diagonal entry at row " +
                                      std::to_string(i));
        inv_diag[i] = 1.0 / diag[i];
    }

    std::vector<double> r = b;           // x starts at 0
    std::vector<double> z(r.size()), p, ap;
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);

    const double target = opt.tol * bnorm;
    double rnorm = bnorm;
    for (int it = 0; it < opt.max_iter; ++it) {
        if (rnorm <= target) {
            rep.iterations = it;
            rep.final_residual = rnorm / bnorm;
            rep.converged = true;
            return rep;
        }
        a.multiply(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            rep.iterations = it;
            rep.final_residual = rnorm / bnorm;
            throw SolverDiverged("conjugate gradients met a non-positive curvature direction", rep);
        }
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < r.size(); ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag[i] * r[i];
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < r.size(); ++i) p[i] = z[i] + beta * p[i];
        rnorm = norm2(r);
    }

    rep.iterations = opt.max_iter;
    rep.final_residual = rnorm / bnorm;
    if (rnorm <= target) {
        rep.converged = true;
        return rep;
    }
    throw SolverDiverged("conjugate gradients did not converge in " +
                             std::to_string(opt.max_iter) + " iterations",
                         rep);
}

SolveReport cg_solve_zero_mean(const SparseSym& a, const std::vector<double>& b,
                               const std::vector<double>& weights,
                               std::vector<double>& x, double compat_tol,
                               CgOptions opt) {
    const std::size_t n = b.size();
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        SolveReport rep;
        rep.converged = true;
        return rep;
    }

    double bsum = 0.0;
    for (double v : b) bsum += v;
    if (std::abs(bsum) > compat_tol * bnorm)
        throw IncompatibleSource("source sum " + std::to_string(bsum) +
                                 " exceeds compatibility tolerance");

    // Remove the (Euclidean) mean so the singular system is consistent to
    // roundoff; the kernel component of x is fixed afterwards instead.
    std::vector<double> b0 = b;
    const double mean = bsum / static_cast<double>(n);
    for (double& v : b0) v -= mean;

    SolveReport rep = cg_solve(a, b0, x, opt);

    double wsum = 0.0, wx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        wsum += weights[i];
        wx += weights[i] * x[i];
    }
    const double shift = wx / wsum;
    for (double& v : x) v -= shift;
    return rep;
}

std::vector<double> dense_solve(std::vector<double> a, int n, std::vector<double> b) {
    double amax = 0.0;
    for (double v : a) amax = std::max(amax, std::abs(v));
    if (amax == 0.0) throw SingularConstantsMatrix("constants matrix is zero");

    auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };

    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int r = k + 1; r < n; ++r) {
            if (std::abs(at(r, k)) > std::abs(at(piv, k))) piv = r;
        }
        if (std::abs(at(piv, k)) < 1e-14 * amax)
            throw SingularConstantsMatrix("pivot " + std::to_string(k) +
                                          " below singularity threshold");
        if (piv != k) {
            for (int c = 0; c < n; ++c) std::swap(at(piv, c), at(k, c));
            std::swap(b[piv], b[k]);
        }
        for (int r = k + 1; r < n; ++r) {
            const double f = at(r, k) / at(k, k);
            if (f == 0.0) continue;
            for (int c = k; c < n; ++c) at(r, c) -= f * at(k, c);
            b[r] -= f * b[k];
        }
    }
    for (int k = n - 1; k >= 0; --k) {
        double s = b[k];
        for (int c = k + 1; c < n; ++c) s -= at(k, c) * b[c];
        b[k] = s / at(k, k);
    }
    return b;
}

}  // namespace memfem
