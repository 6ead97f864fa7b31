#include "uprop/dynamics.hpp"

#include <cmath>

namespace uprop {

DaStepFn duffing_map_stepper(const DuffingParams& p) {
    return [p](const std::vector<TaylorPoly>& state, const std::vector<TaylorPoly>& noise,
               double /*t*/, double /*h*/) {
        return duffing_step(state, p, noise.at(0));
    };
}

std::vector<DuffingMomentRecord> duffing_closed_form_moments(const Eigen::Vector2d& ic,
                                                             const DuffingParams& p, int steps) {
    std::vector<DuffingMomentRecord> out;
    out.reserve(steps);
    double xc = ic[0], yc = ic[1];
    double e10 = 0, e01 = 0, e20 = 0, e11 = 0, e02 = 0;
    for (int k = 1; k <= steps; ++k) {
        // Moment recursion uses the central value entering the step.
        const double amod = p.a - 3.0 * yc * yc;
        const double n10 = e01;
        const double n01 = -p.b * e10 + amod * e01 - 3.0 * yc * e02;
        const double n20 = e02;
        const double n11 = -p.b * e11 + amod * e02;
        const double n02 = p.b * p.b * e20 - 2.0 * p.b * amod * e11 + amod * amod * e02 +
                           p.sigma * p.sigma;
        e10 = n10;
        e01 = n01;
        e20 = n20;
        e11 = n11;
        e02 = n02;
        // Noise-free map advances the central sequence.
        const double xn = yc;
        const double yn = -p.b * xc + p.a * yc - yc * yc * yc;
        xc = xn;
        yc = yn;

        DuffingMomentRecord rec;
        rec.step = k;
        rec.central = Eigen::Vector2d(xc, yc);
        rec.e10 = e10;
        rec.e01 = e01;
        rec.e20 = e20;
        rec.e11 = e11;
        rec.e02 = e02;
        rec.raw10 = xc + e10;
        rec.raw01 = yc + e01;
        rec.raw20 = xc * xc + 2.0 * xc * e10 + e20;
        rec.raw11 = xc * yc + yc * e10 + xc * e01 + e11;
        rec.raw02 = yc * yc + 2.0 * yc * e01 + e02;
        rec.p11 = rec.raw20 - rec.raw10 * rec.raw10;
        rec.p12 = rec.raw11 - rec.raw10 * rec.raw01;
        rec.p22 = rec.raw02 - rec.raw01 * rec.raw01;
        out.push_back(rec);
    }
    return out;
}

SdeModel kepler_planar_sde(const KeplerSdeParams& p) {
    return make_sde_model(
        4, 2, [p](const auto& x, double) { return kepler_planar_drift(x, p); },
        [p](const auto& x, double) { return kepler_planar_diffusion(x, p); });
}

OdeModel kepler_planar_ode(const KeplerSdeParams& p) {
    return make_ode_model(4, [p](const auto& x, double) { return kepler_planar_drift(x, p); });
}

Eigen::Vector4d kepler_circular_ic(double mu, double re, double h0) {
    const double r = re + h0;
    return Eigen::Vector4d(r, 0.0, 0.0, std::sqrt(mu / r));
}

SdeModel thrust_sde(const ThrustSdeParams& p) {
    return make_sde_model(
        6, 3, [p](const auto& x, double) { return thrust_drift(x, p); },
        [p](const auto& x, double) { return thrust_diffusion(x, p); });
}

OdeModel thrust_drift_model(const ThrustSdeParams& p) {
    return make_ode_model(6, [p](const auto& x, double) { return thrust_drift(x, p); });
}

OdeModel twobody_ode(double mu) {
    ThrustSdeParams p;
    p.mu = mu;
    p.include_j2 = false;
    p.a_thrust = 0.0;
    return thrust_drift_model(p);
}

double wrap_angle(double x) {
    const double two_pi = 2.0 * M_PI;
    double w = std::fmod(x, two_pi);
    if (w < 0.0) w += two_pi;
    return w;
}

namespace {

/// Solve the equinoctial Kepler equation lambda = F - f sin F + g cos F for
/// the eccentric longitude F, then return the true longitude.
double mean_to_true_longitude(double p_f, double p_g, double lambda) {
    double F = lambda;
    for (int it = 0; it < 64; ++it) {
        const double phi = F - p_f * std::sin(F) + p_g * std::cos(F) - lambda;
        const double dphi = 1.0 - p_f * std::cos(F) - p_g * std::sin(F);
        const double dF = phi / dphi;
        F -= dF;
        if (std::abs(dF) < 1e-14) break;
    }
    // Position in the orbital plane from the eccentric longitude.
    const double e2 = p_f * p_f + p_g * p_g;
    const double b = 1.0 / (1.0 + std::sqrt(1.0 - e2));
    const double sF = std::sin(F), cF = std::cos(F);
    const double x = (1.0 - p_g * p_g * b) * cF + p_f * p_g * b * sF - p_f;
    const double y = (1.0 - p_f * p_f * b) * sF + p_f * p_g * b * cF - p_g;
    return std::atan2(y, x);
}

}  // namespace

std::vector<double> convert(const std::vector<double>& state, CoordSet from, CoordSet to,
                            double mu, FastAngle fa) {
    if (from == to) return state;
    // Route through Cartesian.
    std::vector<double> cart;
    switch (from) {
        case CoordSet::cartesian:
            cart = state;
            break;
        case CoordSet::keplerian:
            cart = keplerian_to_cartesian(state, mu);
            break;
        case CoordSet::mee: {
            std::vector<double> mee = state;
            if (fa == FastAngle::mean_longitude) {
                mee[5] = mean_to_true_longitude(mee[1], mee[2], mee[5]);
            }
            cart = mee_to_cartesian_true(mee, mu);
            break;
        }
    }
    switch (to) {
        case CoordSet::cartesian:
            return cart;
        case CoordSet::keplerian:
            return cartesian_to_keplerian(cart, mu);
        case CoordSet::mee:
            return cartesian_to_mee(cart, mu, fa);
    }
    throw std::invalid_argument("convert: unknown coordinate set");
}

}  // namespace uprop
