#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "dampwave/coefficients.hpp"
#include "dampwave/grid.hpp"

namespace dampwave {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

// Sparse symmetric real matrix. One-dimensional problems also keep the
// tridiagonal bands so the eigensolver can use Sturm sequences.
class SymmetricOperator {
public:
    SymmetricOperator() = default;

    explicit SymmetricOperator(SparseMatrix m) : matrix_(std::move(m)) { matrix_.makeCompressed(); }

    static SymmetricOperator tridiagonal(std::vector<double> diag, std::vector<double> off) {
        const int n = static_cast<int>(diag.size());
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(static_cast<std::size_t>(3 * n));
        for (int i = 0; i < n; ++i) {
            t.emplace_back(i, i, diag[static_cast<std::size_t>(i)]);
            if (i + 1 < n && off[static_cast<std::size_t>(i)] != 0.0) {
                t.emplace_back(i, i + 1, off[static_cast<std::size_t>(i)]);
                t.emplace_back(i + 1, i, off[static_cast<std::size_t>(i)]);
            }
        }
        SparseMatrix m(n, n);
        m.setFromTriplets(t.begin(), t.end());
        SymmetricOperator op(std::move(m));
        op.diag_ = std::move(diag);
        op.off_ = std::move(off);
        op.tridiagonal_ = true;
        return op;
    }

    int dimension() const { return static_cast<int>(matrix_.rows()); }
    const SparseMatrix& matrix() const { return matrix_; }
    bool is_tridiagonal() const { return tridiagonal_; }
    const std::vector<double>& diagonal_band() const { return diag_; }
    const std::vector<double>& off_band() const { return off_; }

    Vector apply(const Vector& x) const { return matrix_ * x; }

    // Infinity norm, an upper bound for the spectral radius.
    double norm_inf() const {
        Vector rs = Vector::Zero(dimension());
        for (int k = 0; k < matrix_.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) rs[it.row()] += std::abs(it.value());
        return rs.size() ? rs.maxCoeff() : 0.0;
    }

    // Gershgorin lower bound on the smallest eigenvalue.
    double gershgorin_lower() const {
        Vector lo = Vector::Zero(dimension());
        Vector diag = Vector::Zero(dimension());
        for (int k = 0; k < matrix_.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) {
                if (it.row() == it.col()) diag[it.row()] = it.value();
                else lo[it.row()] += std::abs(it.value());
            }
        return (diag - lo).minCoeff();
    }

    // Principal submatrix on the given (ascending) indices: the Dirichlet
    // restriction of the operator to that node set.
    SymmetricOperator restrict_to(const std::vector<int>& idx) const {
        if (tridiagonal_) {
            std::vector<double> d(idx.size()), e(idx.size(), 0.0);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                d[i] = diag_[static_cast<std::size_t>(idx[i])];
                if (i + 1 < idx.size() && idx[i + 1] == idx[i] + 1) e[i] = off_[static_cast<std::size_t>(idx[i])];
            }
            return tridiagonal(std::move(d), std::move(e));
        }
        std::vector<int> pos(static_cast<std::size_t>(dimension()), -1);
        for (std::size_t i = 0; i < idx.size(); ++i) pos[static_cast<std::size_t>(idx[i])] = static_cast<int>(i);
        std::vector<Eigen::Triplet<double>> t;
        for (int k = 0; k < matrix_.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) {
                const int r = pos[static_cast<std::size_t>(it.row())];
                const int c = pos[static_cast<std::size_t>(it.col())];
                if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
            }
        SparseMatrix m(static_cast<int>(idx.size()), static_cast<int>(idx.size()));
        m.setFromTriplets(t.begin(), t.end());
        return SymmetricOperator(std::move(m));
    }

private:
    SparseMatrix matrix_;
    std::vector<double> diag_;
    std::vector<double> off_;
    bool tridiagonal_ = false;
};

// Discrete Dirichlet Laplacian (-Delta) plus diag(b) + mu * diag(a), second
// order central differences.
inline SymmetricOperator assemble_schrodinger(const Grid& grid, const CoefficientSet& coeffs, double mu) {
    const int n = grid.size();
    if (coeffs.size() != n) throw ConfigError("coefficient samples do not match the grid");

    if (grid.dimension() == 1) {
        const double inv_h2 = 1.0 / (grid.axis(0).h * grid.axis(0).h);
        std::vector<double> d(static_cast<std::size_t>(n)), e(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            d[k] = 2.0 * inv_h2 + coeffs.b[k] + mu * coeffs.a[k];
            if (i + 1 < n) e[k] = -inv_h2;
        }
        return SymmetricOperator::tridiagonal(std::move(d), std::move(e));
    }

    const int nx = grid.axis(0).points;
    const int ny = grid.axis(1).points;
    const double cx = 1.0 / (grid.axis(0).h * grid.axis(0).h);
    const double cy = 1.0 / (grid.axis(1).h * grid.axis(1).h);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(5 * n));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int p = grid.index(i, j);
            const auto k = static_cast<std::size_t>(p);
            t.emplace_back(p, p, 2.0 * cx + 2.0 * cy + coeffs.b[k] + mu * coeffs.a[k]);
            if (i > 0) t.emplace_back(p, grid.index(i - 1, j), -cx);
            if (i + 1 < nx) t.emplace_back(p, grid.index(i + 1, j), -cx);
            if (j > 0) t.emplace_back(p, grid.index(i, j - 1), -cy);
            if (j + 1 < ny) t.emplace_back(p, grid.index(i, j + 1), -cy);
        }
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return SymmetricOperator(std::move(m));
}

// Discrete s0-norm: ||psi||^2 = vol * psi^T (S0 + (1 - b_min) I) psi, i.e.
// H^1 norm (L2 plus gradient) plus the (b - b_min)-weighted L2 norm.
class EnergyNorm {
public:
    EnergyNorm(SymmetricOperator s0, double b_min, double cell_volume)
        : s0_(std::move(s0)), shift_(1.0 - b_min), volume_(cell_volume) {}

    double s0_squared(const Vector& psi) const {
        return volume_ * (psi.dot(s0_.apply(psi)) + shift_ * psi.squaredNorm());
    }
    double s0_norm(const Vector& psi) const { return std::sqrt(std::max(0.0, s0_squared(psi))); }
    double l2_squared(const Vector& psi) const { return volume_ * psi.squaredNorm(); }
    double l2_norm(const Vector& psi) const { return std::sqrt(l2_squared(psi)); }

    double h_squared(const Vector& psi1, const Vector& psi2) const { return s0_squared(psi1) + l2_squared(psi2); }
    double h_norm(const Vector& psi1, const Vector& psi2) const { return std::sqrt(h_squared(psi1, psi2)); }

    const SymmetricOperator& s0() const { return s0_; }
    double volume() const { return volume_; }

private:
    SymmetricOperator s0_;
    double shift_;
    double volume_;
};

}  // namespace dampwave
