#include "uprop/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "uprop/domain.hpp"

namespace uprop {

EpsMuResult metric_eps_mu_full(const Eigen::VectorXd& est, const Eigen::VectorXd& ref) {
    if (est.size() != ref.size()) {
        throw std::invalid_argument("metric_eps_mu: dimension mismatch");
    }
    EpsMuResult out;
    bool any = false;
    for (int i = 0; i < ref.size(); ++i) {
        if (ref[i] == 0.0) {
            out.excluded.push_back(i);
            continue;
        }
        any = true;
        out.value = std::max(out.value, std::abs((est[i] - ref[i]) / ref[i]));
    }
    if (!any) throw std::domain_error("metric_eps_mu: all-zero reference mean");
    return out;
}

double metric_eps_mu(const Eigen::VectorXd& est, const Eigen::VectorXd& ref) {
    return metric_eps_mu_full(est, ref).value;
}

double metric_eps_lambda(const Eigen::MatrixXd& est, const Eigen::MatrixXd& ref) {
    require_psd(est, "metric_eps_lambda (estimate)");
    require_psd(ref, "metric_eps_lambda (reference)");
    const double le = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(est, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .maxCoeff();
    const double lr = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ref, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .maxCoeff();
    if (lr == 0.0) throw std::domain_error("metric_eps_lambda: zero reference eigenvalue");
    return std::abs(le - lr) / lr;
}

std::vector<double> cartesian_units(double length_unit, double mu, int n_pos, int n_vel) {
    if (!(length_unit > 0.0) || !(mu > 0.0)) {
        throw std::invalid_argument("cartesian_units: require positive length unit and mu");
    }
    const double velocity_unit = std::sqrt(mu / length_unit);
    std::vector<double> scales;
    scales.reserve(n_pos + n_vel);
    for (int i = 0; i < n_pos; ++i) scales.push_back(length_unit);
    for (int i = 0; i < n_vel; ++i) scales.push_back(velocity_unit);
    return scales;
}

double metric_rmse(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& actual,
                   const std::vector<double>& scales) {
    if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols()) {
        throw std::invalid_argument("metric_rmse: sample sets must have matching shape");
    }
    if (static_cast<int>(scales.size()) != predicted.cols()) {
        throw std::invalid_argument("metric_rmse: one scale per state component required");
    }
    const auto n_samples = predicted.rows();
    const auto n = predicted.cols();
    if (n_samples == 0) throw std::invalid_argument("metric_rmse: empty sample sets");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n_samples; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = (actual(i, j) - predicted(i, j)) / scales[j];
            acc += d * d;
        }
    }
    return std::sqrt(acc / (static_cast<double>(n_samples) * n));
}

}  // namespace uprop
