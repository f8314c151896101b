#pragma once

#include <cstddef>
#include <vector>

#include "memfem/errors.hpp"

namespace memfem {

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

// Compressed sparse rows, both triangles stored. Duplicate triplets are summed;
// merged entries are kept even when the sum is zero so that two matrices
// assembled over the same mesh share one pattern and can be combined entrywise.
class SparseSym {
  public:
    SparseSym() = default;
    static SparseSym from_triplets(int n, std::vector<Triplet> triplets);

    int size() const { return n_; }
    std::size_t nonzeros() const { return val_.size(); }

    void multiply(const std::vector<double>& x, std::vector<double>& y) const;
    std::vector<double> multiply(const std::vector<double>& x) const;

    double quadratic(const std::vector<double>& u) const;  // u^T A u
    std::vector<double> diagonal() const;

    struct RowView {
        const int* cols;
        const double* vals;
        int count;
    };
    RowView row(int r) const {
        const int begin = row_ptr_[r];
        return {col_.data() + begin, val_.data() + begin, row_ptr_[r + 1] - begin};
    }

    // this + s * other; patterns must match exactly.
    SparseSym plus_scaled(const SparseSym& other, double s) const;

  private:
    int n_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_;
    std::vector<double> val_;
};

struct CgOptions {
    double tol = 1e-10;      // relative: ||r|| <= tol * ||b||
    int max_iter = 20000;
};

// Jacobi-preconditioned conjugate gradients, deterministic (fixed start x = 0,
// fixed reduction order). Throws PreconditionerError on a non-positive
// diagonal and SolverDiverged when the tolerance is not met within max_iter.
SolveReport cg_solve(const SparseSym& a, const std::vector<double>& b,
                     std::vector<double>& x, CgOptions opt = {});

// CG for a symmetric positive semidefinite system whose kernel is the constant
// vector. The source must be compatible: |sum b| <= compat_tol * ||b||, else
// IncompatibleSource. The mean of b is removed to make the system consistent
// to roundoff, and the returned x has zero weighted mean.
SolveReport cg_solve_zero_mean(const SparseSym& a, const std::vector<double>& b,
                               const std::vector<double>& weights,
                               std::vector<double>& x, double compat_tol = 1e-8,
                               CgOptions opt = {});

// Gaussian elimination with partial pivoting on a dense row-major matrix.
// Intended for the small flux-constants systems (m <= 64). Throws
// SingularConstantsMatrix when a pivot falls below 1e-14 * max |a_ij|.
std::vector<double> dense_solve(std::vector<double> a, int n, std::vector<double> b);

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a);

}  // namespace memfem
