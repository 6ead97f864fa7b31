#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "uprop/taylor.hpp"

namespace uprop {

/// Dense rows x cols matrix over an arbitrary scalar (double or TaylorPoly).
template <class T>
struct DynMat {
    int rows = 0;
    int cols = 0;
    std::vector<T> a;

    DynMat() = default;
    DynMat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}

    T& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    const T& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

/// Deterministic first-order model dx/dt = rhs(x, t), evaluable on real and
/// Taylor-polynomial states through the same template body.
struct OdeModel {
    int state_dim = 0;
    std::function<std::vector<double>(const std::vector<double>&, double)> rhs_real;
    std::function<std::vector<TaylorPoly>(const std::vector<TaylorPoly>&, double)> rhs_poly;
};

/// Ito diffusion dX = u(X,t) dt + G(X,t) dW with m independent Wiener
/// channels; both coefficient functions are dual-evaluable.
struct SdeModel {
    int state_dim = 0;
    int noise_dim = 0;
    std::function<std::vector<double>(const std::vector<double>&, double)> drift_real;
    std::function<DynMat<double>(const std::vector<double>&, double)> diffusion_real;
    std::function<std::vector<TaylorPoly>(const std::vector<TaylorPoly>&, double)> drift_poly;
    std::function<DynMat<TaylorPoly>(const std::vector<TaylorPoly>&, double)> diffusion_poly;

    OdeModel drift_model() const {
        return OdeModel{state_dim, drift_real, drift_poly};
    }
};

template <class Rhs>
OdeModel make_ode_model(int n, Rhs rhs) {
    OdeModel m;
    m.state_dim = n;
    m.rhs_real = [rhs](const std::vector<double>& x, double t) { return rhs(x, t); };
    m.rhs_poly = [rhs](const std::vector<TaylorPoly>& x, double t) { return rhs(x, t); };
    return m;
}

template <class Drift, class Diff>
SdeModel make_sde_model(int n, int m, Drift u, Diff g) {
    SdeModel model;
    model.state_dim = n;
    model.noise_dim = m;
    model.drift_real = [u](const std::vector<double>& x, double t) { return u(x, t); };
    model.drift_poly = [u](const std::vector<TaylorPoly>& x, double t) { return u(x, t); };
    model.diffusion_real = [g](const std::vector<double>& x, double t) { return g(x, t); };
    model.diffusion_poly = [g](const std::vector<TaylorPoly>& x, double t) { return g(x, t); };
    return model;
}

inline double zero_like(double) { return 0.0; }
inline TaylorPoly zero_like(const TaylorPoly& ref) { return TaylorPoly(ref.basis()); }

inline bool is_zero_element(double x) { return x == 0.0; }
inline bool is_zero_element(const TaylorPoly& p) { return !p.valid() || p.is_zero(); }

/// Matrix of structural zeros matching the scalar kind of `ref`.
template <class T>
DynMat<T> zero_mat(int rows, int cols, const T& ref) {
    DynMat<T> g(rows, cols);
    for (auto& e : g.a) e = zero_like(ref);
    return g;
}

template <class T>
std::vector<T> axpy(const std::vector<T>& x, double a, const std::vector<T>& y) {
    std::vector<T> out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * y[i];
    return out;
}

/// One explicit Euler step x + h * rhs(x, t).
template <class T, class Rhs>
std::vector<T> euler_step(Rhs&& rhs, const std::vector<T>& x, double t, double h) {
    return axpy(x, h, rhs(x, t));
}

/// One classical fourth-order Runge-Kutta step.
template <class T, class Rhs>
std::vector<T> rk4_step(Rhs&& rhs, const std::vector<T>& x, double t, double h) {
    const std::vector<T> k1 = rhs(x, t);
    const std::vector<T> k2 = rhs(axpy(x, 0.5 * h, k1), t + 0.5 * h);
    const std::vector<T> k3 = rhs(axpy(x, 0.5 * h, k2), t + 0.5 * h);
    const std::vector<T> k4 = rhs(axpy(x, h, k3), t + h);
    std::vector<T> out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

/// Euler-Maruyama increment: x + h * drift + diffusion * noise, where `noise`
/// is the increment argument (a sampled Wiener increment, or h * dw when the
/// noise slots are polynomial identities). The coefficients are evaluated by
/// the caller at the step's start state.
template <class T>
std::vector<T> em_step(const std::vector<T>& x, double h, const std::vector<T>& drift,
                       const DynMat<T>& diffusion, const std::vector<T>& noise) {
    std::vector<T> out = axpy(x, h, drift);
    for (int i = 0; i < diffusion.rows; ++i) {
        for (int j = 0; j < diffusion.cols; ++j) {
            out[i] += diffusion(i, j) * noise[j];
        }
    }
    return out;
}

/// Piecewise cubic Hermite interpolant of a trajectory from stored node
/// states and derivatives; node evaluations reproduce the stored states
/// exactly and the first derivative is continuous across nodes.
class DenseOutput {
public:
    DenseOutput() = default;
    DenseOutput(std::vector<double> ts, std::vector<Eigen::VectorXd> xs,
                std::vector<Eigen::VectorXd> fs);

    double t0() const { return ts_.front(); }
    double tf() const { return ts_.back(); }
    int dim() const { return ts_.empty() ? 0 : static_cast<int>(xs_.front().size()); }

    Eigen::VectorXd eval(double t) const;
    Eigen::VectorXd eval_derivative(double t) const;

    const std::vector<double>& times() const { return ts_; }
    const Eigen::VectorXd& node_state(int k) const { return xs_[k]; }

private:
    int segment(double t) const;

    std::vector<double> ts_;
    std::vector<Eigen::VectorXd> xs_;
    std::vector<Eigen::VectorXd> fs_;
};

/// Fixed-step RK4 integration of an OdeModel storing nodes and drift
/// evaluations for dense output. The final step is shortened when h does not
/// divide tf - t0 exactly.
DenseOutput integrate_dense(const OdeModel& model, const Eigen::VectorXd& x0, double t0,
                            double tf, double h);

/// Plain fixed-step propagation to tf (RK4), real-valued.
Eigen::VectorXd propagate_rk4(const OdeModel& model, const Eigen::VectorXd& x0, double t0,
                              double tf, double h);

/// Fixed-step propagation of a polynomial state through the deterministic
/// model (RK4 when rk4 is set, explicit Euler otherwise).
std::vector<TaylorPoly> propagate_polys(const OdeModel& model, std::vector<TaylorPoly> x,
                                        double t0, double tf, double h, bool rk4 = true);

}  // namespace uprop
