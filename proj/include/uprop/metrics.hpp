#pragma once

#include <Eigen/Core>
#include <vector>

namespace uprop {

struct EpsMuResult {
    double value = 0.0;
    std::vector<int> excluded;  // components skipped for zero reference
};

/// Largest component of the element-wise relative error between estimated
/// and reference means. Exactly-zero reference components are excluded (and
/// reported); an all-zero reference is an error.
EpsMuResult metric_eps_mu_full(const Eigen::VectorXd& est, const Eigen::VectorXd& ref);
double metric_eps_mu(const Eigen::VectorXd& est, const Eigen::VectorXd& ref);

/// Relative error in the largest covariance eigenvalue.
double metric_eps_lambda(const Eigen::MatrixXd& est, const Eigen::MatrixXd& ref);

/// Nondimensionalization scales for Cartesian states: positions by the
/// length unit, velocities by length/time with the time unit chosen so the
/// gravitational parameter is one.
std::vector<double> cartesian_units(double length_unit, double mu, int n_pos, int n_vel);

/// Nondimensional average RMSE between matched sample sets (rows are paired
/// by index); each column j is divided by scales[j] before accumulation.
double metric_rmse(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& actual,
                   const std::vector<double>& scales);

}  // namespace uprop
