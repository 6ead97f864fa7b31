#include "uprop/domain.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace uprop {

void require_psd(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument(std::string(what) + ": matrix not square");
    }
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
    if (asym > 1e-9 * scale) {
        throw std::invalid_argument(std::string(what) + ": matrix not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double tol = 1e-12 * std::max(1.0, m.trace());
    if (es.eigenvalues().minCoeff() < -tol) {
        throw std::invalid_argument(std::string(what) + ": matrix not PSD");
    }
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    require_psd(m, "psd_sqrt");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

UncertaintyDomain UncertaintyDomain::from_moments(const Eigen::VectorXd& mean,
                                                  const Eigen::MatrixXd& cov, double spread) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
        throw std::invalid_argument("UncertaintyDomain: covariance shape mismatch");
    }
    if (!(spread > 0.0)) {
        throw std::invalid_argument("UncertaintyDomain: spread must be positive");
    }
    require_psd(cov, "UncertaintyDomain");
    UncertaintyDomain d;
    d.mean = mean;
    d.cov = cov;
    d.spread = spread;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    d.eigvals = es.eigenvalues().cwiseMax(0.0);
    d.eigvecs = es.eigenvectors();
    d.scale = spread * d.eigvals.cwiseSqrt();
    return d;
}

std::vector<TaylorPoly> UncertaintyDomain::to_polys(int order) const {
    const int n = dim();
    std::vector<TaylorPoly> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        TaylorPoly p = TaylorPoly::constant(n, order, mean[i]);
        for (int d = 0; d < n; ++d) {
            const double c = eigvecs(i, d) * scale[d];
            if (c != 0.0) p += TaylorPoly::variable(n, order, d, c, 0.0);
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace uprop
