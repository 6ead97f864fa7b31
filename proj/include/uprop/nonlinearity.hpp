#pragma once

#include <Eigen/Core>
#include <vector>

#include "uprop/taylor.hpp"

namespace uprop {

/// m x n matrix of first-order polynomials: the constant part is the plain
/// Jacobian, the linear part carries its first-order variation over the
/// domain.
struct JacobianPolyMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<TaylorPoly> entries;  // row-major

    const TaylorPoly& at(int i, int j) const { return entries[i * cols + j]; }
};

/// Jacobian of a polynomial map with respect to the physical deviations
/// beta ⊙ dx, truncated to first order. Requires beta > 0 component-wise.
JacobianPolyMatrix map_jacobian(const std::vector<TaylorPoly>& map,
                                const Eigen::VectorXd& beta);

struct NliBreakdown {
    double nu = 0.0;
    double jbar_norm = 0.0;   // Frobenius norm of the constant part
    double bound_norm = 0.0;  // Frobenius norm of the coefficient bound
    /// Per-deviation-direction contribution sum_{i,j} |c^p_{i,j}|; the
    /// adaptive splitter attacks the largest entry.
    Eigen::VectorXd direction_scores;
};

/// Nonlinearity index nu = ||B||_F / ||Jbar||_F where B_{ij} bounds the
/// first-order variation of entry (i,j) by the sum of absolute linear
/// coefficients. Zero for linear maps. Most meaningful on nondimensional
/// states; nondimensionalization is the caller's responsibility.
NliBreakdown nli_full(const std::vector<TaylorPoly>& map, const Eigen::VectorXd& beta);

double nli(const std::vector<TaylorPoly>& map, const Eigen::VectorXd& beta);

}  // namespace uprop
