#pragma once

#include <Eigen/Core>
#include <vector>

#include "uprop/taylor.hpp"

namespace uprop {

/// First-order representation of an uncertainty set: the expansion is
/// centered on the mean and the independent variables live in the eigenspace
/// of the covariance, scaled so that dx in [-1,1]^n spans `spread` standard
/// deviations per principal axis.
struct UncertaintyDomain {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::MatrixXd eigvecs;   // columns V_d
    Eigen::VectorXd eigvals;   // lambda_d >= 0
    Eigen::VectorXd scale;     // beta_d = spread * sqrt(lambda_d)
    double spread = 3.0;       // zeta

    static UncertaintyDomain from_moments(const Eigen::VectorXd& mean,
                                          const Eigen::MatrixXd& cov, double spread);

    int dim() const { return static_cast<int>(mean.size()); }

    /// Polynomial vector mean + V (beta ⊙ dx), component-wise first order.
    std::vector<TaylorPoly> to_polys(int order) const;
};

/// Symmetric PSD square root via eigendecomposition, with small negative
/// eigenvalues (>= -tol_scale * trace) clamped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

/// Throws std::invalid_argument when m is not symmetric PSD within
/// 1e-12 * trace.
void require_psd(const Eigen::MatrixXd& m, const char* what);

}  // namespace uprop
