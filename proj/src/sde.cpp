#include "uprop/sde.hpp"

#include <algorithm>

namespace uprop {

DenseOutput::DenseOutput(std::vector<double> ts, std::vector<Eigen::VectorXd> xs,
                         std::vector<Eigen::VectorXd> fs)
    : ts_(std::move(ts)), xs_(std::move(xs)), fs_(std::move(fs)) {
    if (ts_.size() < 2 || ts_.size() != xs_.size() || ts_.size() != fs_.size()) {
        throw std::invalid_argument("DenseOutput: need matching node arrays with >= 2 nodes");
    }
}

int DenseOutput::segment(double t) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(ts_.back() - ts_.front()));
    if (t < ts_.front() - tol || t > ts_.back() + tol) {
        throw std::out_of_range("DenseOutput: evaluation outside stored span");
    }
    auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
    int k = static_cast<int>(it - ts_.begin()) - 1;
    return std::clamp(k, 0, static_cast<int>(ts_.size()) - 2);
}

Eigen::VectorXd DenseOutput::eval(double t) const {
    const int k = segment(t);
    if (t == ts_[k]) return xs_[k];
    if (t == ts_[k + 1]) return xs_[k + 1];
    const double h = ts_[k + 1] - ts_[k];
    const double s = (t - ts_[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * xs_[k] + (h10 * h) * fs_[k] + h01 * xs_[k + 1] + (h11 * h) * fs_[k + 1];
}

Eigen::VectorXd DenseOutput::eval_derivative(double t) const {
    const int k = segment(t);
    const double h = ts_[k + 1] - ts_[k];
    const double s = (t - ts_[k]) / h;
    const double s2 = s * s;
    const double d00 = (6 * s2 - 6 * s) / h;
    const double d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / h;
    const double d11 = 3 * s2 - 2 * s;
    return d00 * xs_[k] + d10 * fs_[k] + d01 * xs_[k + 1] + d11 * fs_[k + 1];
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

DenseOutput integrate_dense(const OdeModel& model, const Eigen::VectorXd& x0, double t0,
                            double tf, double h) {
    if (!(h > 0.0) || !(tf > t0)) {
        throw std::invalid_argument("integrate_dense: require h > 0 and tf > t0");
    }
    std::vector<double> ts;
    std::vector<Eigen::VectorXd> xs, fs;
    std::vector<double> x = to_std(x0);
    double t = t0;
    ts.push_back(t);
    xs.push_back(x0);
    fs.push_back(to_eigen(model.rhs_real(x, t)));
    while (t < tf - 1e-12 * std::max(1.0, std::abs(tf))) {
        const double step = std::min(h, tf - t);
        x = rk4_step(model.rhs_real, x, t, step);
        t += step;
        ts.push_back(t);
        xs.push_back(to_eigen(x));
        fs.push_back(to_eigen(model.rhs_real(x, t)));
    }
    return DenseOutput(std::move(ts), std::move(xs), std::move(fs));
}

Eigen::VectorXd propagate_rk4(const OdeModel& model, const Eigen::VectorXd& x0, double t0,
                              double tf, double h) {
    if (!(h > 0.0) || tf < t0) {
        throw std::invalid_argument("propagate_rk4: require h > 0 and tf >= t0");
    }
    std::vector<double> x = to_std(x0);
    double t = t0;
    while (t < tf - 1e-12 * std::max(1.0, std::abs(tf))) {
        const double step = std::min(h, tf - t);
        x = rk4_step(model.rhs_real, x, t, step);
        t += step;
    }
    return to_eigen(x);
}

std::vector<TaylorPoly> propagate_polys(const OdeModel& model, std::vector<TaylorPoly> x,
                                        double t0, double tf, double h, bool rk4) {
    if (!(h > 0.0) || tf < t0) {
        throw std::invalid_argument("propagate_polys: require h > 0 and tf >= t0");
    }
    double t = t0;
    while (t < tf - 1e-12 * std::max(1.0, std::abs(tf))) {
        const double step = std::min(h, tf - t);
        x = rk4 ? rk4_step(model.rhs_poly, x, t, step) : euler_step(model.rhs_poly, x, t, step);
        t += step;
        for (const auto& p : x) {
            if (!p.all_finite()) {
                throw std::runtime_error("propagate_polys: non-finite expansion at t = " +
                                         std::to_string(t));
            }
        }
    }
    return x;
}

}  // namespace uprop
