#pragma once

#include "tdd/errors.hpp"

#include <lapacke.h>

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

namespace tdd {

/// Square band matrix in LAPACK general-band storage with kl extra rows
/// reserved for the fill-in of partial pivoting.
class BandedMatrix {
public:
    BandedMatrix(lapack_int n, lapack_int kl, lapack_int ku)
        : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1), ab_(static_cast<size_t>(ldab_) * n, 0.0) {
        if (n <= 0 || kl < 0 || ku < 0) throw Error(ErrorKind::invalid_dimension, "bad band matrix shape");
    }

    lapack_int size() const { return n_; }
    lapack_int lower() const { return kl_; }
    lapack_int upper() const { return ku_; }

    bool in_band(lapack_int i, lapack_int j) const { return j - i <= ku_ && i - j <= kl_; }

    double& at(lapack_int i, lapack_int j) {
        if (i < 0 || j < 0 || i >= n_ || j >= n_ || !in_band(i, j)) {
            throw Error(ErrorKind::invalid_dimension,
                        "entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside band");
        }
        return ab_[static_cast<size_t>(kl_ + ku_ + i - j) + static_cast<size_t>(j) * ldab_];
    }

    void add(lapack_int i, lapack_int j, double v) { at(i, j) += v; }

    /// Dense product, used for residual checks.
    std::vector<double> multiply(const std::vector<double>& x) const {
        std::vector<double> y(n_, 0.0);
        for (lapack_int j = 0; j < n_; ++j) {
            const lapack_int lo = std::max<lapack_int>(0, j - ku_);
            const lapack_int hi = std::min<lapack_int>(n_ - 1, j + kl_);
            for (lapack_int i = lo; i <= hi; ++i) {
                y[i] += ab_[static_cast<size_t>(kl_ + ku_ + i - j) + static_cast<size_t>(j) * ldab_] * x[j];
            }
        }
        return y;
    }

private:
    friend class BandedLU;
    lapack_int n_, kl_, ku_, ldab_;
    std::vector<double> ab_;
};

/// LU factorization with partial pivoting (dgbtrf), reusable for any number
/// of right-hand sides. Immutable after construction.
class BandedLU {
public:
    explicit BandedLU(BandedMatrix m) : m_(std::move(m)), ipiv_(m_.n_) {
        const lapack_int info =
            LAPACKE_dgbtrf(LAPACK_COL_MAJOR, m_.n_, m_.n_, m_.kl_, m_.ku_, m_.ab_.data(), m_.ldab_, ipiv_.data());
        if (info > 0) throw FactorizationError("banded LU of order " + std::to_string(m_.n_) + " is singular", info);
        if (info < 0) throw Error(ErrorKind::factorization, "dgbtrf argument " + std::to_string(-info) + " invalid");
    }

    lapack_int size() const { return m_.n_; }

    /// Overwrites rhs with the solution.
    void solve_in_place(double* rhs) const {
        const lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', m_.n_, m_.kl_, m_.ku_, 1, m_.ab_.data(),
                                               m_.ldab_, ipiv_.data(), rhs, m_.n_);
        if (info != 0) throw Error(ErrorKind::factorization, "dgbtrs failed with info " + std::to_string(info));
    }

private:
    BandedMatrix m_;
    std::vector<lapack_int> ipiv_;
};

}  // namespace tdd
