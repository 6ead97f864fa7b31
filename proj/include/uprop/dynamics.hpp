#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "uprop/plasma.hpp"
#include "uprop/sde.hpp"
#include "uprop/taylor.hpp"

namespace uprop {

inline double reciprocal(double x) { return 1.0 / x; }
inline double constant_of(double x) { return x; }
inline double constant_of(const TaylorPoly& p) { return p.constant_part(); }

// ---------------------------------------------------------------------------
// Discrete noisy Duffing map and its order-2 closed-form moment recursion.

struct DuffingParams {
    double a = 2.75;
    double b = 0.2;
    double sigma = 0.1;
};

/// (x, y) -> (y, -b x + a y - y^3 + sigma * w).
template <class T>
std::vector<T> duffing_step(const std::vector<T>& s, const DuffingParams& p, const T& noise) {
    if (s.size() != 2) throw std::invalid_argument("duffing_step: state must be 2-D");
    std::vector<T> out;
    out.reserve(2);
    out.push_back(s[1]);
    out.push_back(-p.b * s[0] + p.a * s[1] - s[1] * s[1] * s[1] + p.sigma * noise);
    return out;
}

/// Step function adapter so the map drives the moment recursion directly
/// (one map application per update, unit time step, unit-variance noise).
DaStepFn duffing_map_stepper(const DuffingParams& p);

/// Per-step record of the closed-form recursion: the five effective-noise
/// moments up to second order, the noise-free central sequence, the five raw
/// state moments and the covariance entries.
struct DuffingMomentRecord {
    int step = 0;
    Eigen::Vector2d central;
    double e10 = 0, e01 = 0, e20 = 0, e11 = 0, e02 = 0;
    double raw10 = 0, raw01 = 0, raw20 = 0, raw11 = 0, raw02 = 0;
    double p11 = 0, p12 = 0, p22 = 0;
};

/// Independent oracle for the moment recursion at expansion order 2.
std::vector<DuffingMomentRecord> duffing_closed_form_moments(const Eigen::Vector2d& ic,
                                                             const DuffingParams& p, int steps);

// ---------------------------------------------------------------------------
// Planar Kepler motion with a stochastic acceleration inversely proportional
// to the instantaneous velocity.

struct KeplerSdeParams {
    double mu = 3.986e5;      // km^3/s^2
    double sigma_w = 2e-4;    // km^2/s^2.5
};

template <class T>
std::vector<T> kepler_planar_drift(const std::vector<T>& x, const KeplerSdeParams& p) {
    using std::sqrt;
    if (x.size() != 4) throw std::invalid_argument("kepler drift: state must be (x,y,vx,vy)");
    const T r2 = x[0] * x[0] + x[1] * x[1];
    if (!(constant_of(r2) > 0.0)) throw std::domain_error("kepler drift: singular state, r = 0");
    const T inv_r3 = reciprocal(r2 * sqrt(r2));
    std::vector<T> out;
    out.reserve(4);
    out.push_back(x[2]);
    out.push_back(x[3]);
    out.push_back(-p.mu * x[0] * inv_r3);
    out.push_back(-p.mu * x[1] * inv_r3);
    return out;
}

template <class T>
DynMat<T> kepler_planar_diffusion(const std::vector<T>& x, const KeplerSdeParams& p) {
    using std::sqrt;
    const T v2 = x[2] * x[2] + x[3] * x[3];
    if (!(constant_of(v2) > 0.0)) throw std::domain_error("kepler diffusion: singular state, v = 0");
    const T coeff = -p.sigma_w * reciprocal(sqrt(v2));
    DynMat<T> g = zero_mat(4, 2, x[0]);
    g(2, 0) = coeff;
    g(3, 1) = coeff;
    return g;
}

SdeModel kepler_planar_sde(const KeplerSdeParams& p);
OdeModel kepler_planar_ode(const KeplerSdeParams& p);

/// Periapsis state of a circular orbit at altitude h0 above radius re.
Eigen::Vector4d kepler_circular_ic(double mu, double re, double h0);

// ---------------------------------------------------------------------------
// Low-thrust model: central body, optional J2 zonal term, constant
// tangential thrust, and thrust-dispersion diffusion.

struct ThrustSdeParams {
    double mu = 3.986004418e5;               // km^3/s^2
    double re = 6378.137;                    // km
    double j2 = 1.0826269e-3;
    bool include_j2 = true;
    double a_thrust = 1e-7;                  // km/s^2
    double sigma_at = 5e-9;                  // km/s^1.5
    double sigma_alpha = 5.0 * M_PI / 180.0; // rad*s^0.5
    double sigma_beta = 5.0 * M_PI / 180.0;  // rad*s^0.5
};

template <class T>
std::vector<T> thrust_drift(const std::vector<T>& x, const ThrustSdeParams& p) {
    using std::sqrt;
    if (x.size() != 6) throw std::invalid_argument("thrust drift: state must be 6-D Cartesian");
    const T r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    if (!(constant_of(r2) > 0.0)) throw std::domain_error("thrust drift: singular state, r = 0");
    const T inv_r3 = reciprocal(r2 * sqrt(r2));
    std::array<T, 3> acc{-p.mu * x[0] * inv_r3, -p.mu * x[1] * inv_r3, -p.mu * x[2] * inv_r3};
    if (p.include_j2) {
        const T inv_r2 = reciprocal(r2);
        const T z2_r2 = x[2] * x[2] * inv_r2;
        const T k = (1.5 * p.j2 * p.mu * p.re * p.re) * inv_r3 * inv_r2;
        acc[0] -= k * x[0] * (1.0 - 5.0 * z2_r2);
        acc[1] -= k * x[1] * (1.0 - 5.0 * z2_r2);
        acc[2] -= k * x[2] * (3.0 - 5.0 * z2_r2);
    }
    if (p.a_thrust != 0.0) {
        const T v2 = x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
        if (!(constant_of(v2) > 0.0)) {
            throw std::domain_error("thrust drift: singular thrust direction, v = 0");
        }
        const T a_over_v = p.a_thrust * reciprocal(sqrt(v2));
        acc[0] += a_over_v * x[3];
        acc[1] += a_over_v * x[4];
        acc[2] += a_over_v * x[5];
    }
    std::vector<T> out;
    out.reserve(6);
    out.push_back(x[3]);
    out.push_back(x[4]);
    out.push_back(x[5]);
    for (auto& a : acc) out.push_back(std::move(a));
    return out;
}

/// Diffusion [0; J sqrt(Sigma)] with J the partials of the thrust
/// acceleration with respect to (a_t, alpha, beta) evaluated at the
/// (possibly polynomial) state.
template <class T>
DynMat<T> thrust_diffusion(const std::vector<T>& x, const ThrustSdeParams& p) {
    using std::sqrt;
    const T v2 = x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
    if (!(constant_of(v2) > 0.0)) {
        throw std::domain_error("thrust diffusion: singular thrust direction, v = 0");
    }
    const T vxy2 = x[3] * x[3] + x[4] * x[4];
    if (!(constant_of(vxy2) > 0.0)) {
        throw std::domain_error("thrust diffusion: polar velocity, in-plane speed = 0");
    }
    const T inv_v = reciprocal(sqrt(v2));
    const T vxy = sqrt(vxy2);
    const T inv_vxy_v = reciprocal(vxy) * inv_v;
    DynMat<T> g = zero_mat(6, 3, x[0]);
    // d a_t / d at: unit velocity direction
    g(3, 0) = p.sigma_at * x[3] * inv_v;
    g(4, 0) = p.sigma_at * x[4] * inv_v;
    g(5, 0) = p.sigma_at * x[5] * inv_v;
    // d a_t / d alpha
    g(3, 1) = -(p.a_thrust * p.sigma_alpha) * x[4] * inv_v;
    g(4, 1) = (p.a_thrust * p.sigma_alpha) * x[3] * inv_v;
    // d a_t / d beta
    g(3, 2) = -(p.a_thrust * p.sigma_beta) * x[3] * x[5] * inv_vxy_v;
    g(4, 2) = -(p.a_thrust * p.sigma_beta) * x[4] * x[5] * inv_vxy_v;
    g(5, 2) = (p.a_thrust * p.sigma_beta) * vxy * inv_v;
    return g;
}

SdeModel thrust_sde(const ThrustSdeParams& p);
OdeModel thrust_drift_model(const ThrustSdeParams& p);
/// Two-body point-mass dynamics (thrust and J2 off).
OdeModel twobody_ode(double mu);

// ---------------------------------------------------------------------------
// Coordinate conversions. Keplerian states are (a, e, i, raan, argp, nu) in
// km / radians; equinoctial states are (p, f, g, h, k, L) with L the true or
// mean longitude.

enum class CoordSet { cartesian, keplerian, mee };
enum class FastAngle { true_longitude, mean_longitude };

/// Wrap into [0, 2*pi).
double wrap_angle(double x);
inline TaylorPoly wrap_angle(const TaylorPoly& p) {
    return p + (wrap_angle(p.constant_part()) - p.constant_part());
}

template <class T>
std::array<T, 3> cross3(const std::array<T, 3>& a, const std::array<T, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <class T>
T dot3(const std::array<T, 3>& a, const std::array<T, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

template <class T>
std::vector<T> keplerian_to_cartesian(const std::vector<T>& kep, double mu) {
    using std::cos;
    using std::sin;
    using std::sqrt;
    if (kep.size() != 6) throw std::invalid_argument("keplerian_to_cartesian: need 6 elements");
    const T& a = kep[0];
    const T& e = kep[1];
    const T p = a * (1.0 - e * e);
    if (!(constant_of(p) > 0.0)) {
        throw std::domain_error("keplerian_to_cartesian: singular element: semi-latus rectum");
    }
    const T cnu = cos(kep[5]), snu = sin(kep[5]);
    const T w = 1.0 + e * cnu;
    const T r = p * reciprocal(w);
    // Perifocal position and velocity
    const T xp = r * cnu, yp = r * snu;
    const T vf = sqrt(mu * reciprocal(p));
    const T vxp = -vf * snu, vyp = vf * (e + cnu);
    const T ci = cos(kep[2]), si = sin(kep[2]);
    const T cO = cos(kep[3]), sO = sin(kep[3]);
    const T cw = cos(kep[4]), sw = sin(kep[4]);
    // Rotation perifocal -> inertial
    const T r11 = cO * cw - sO * sw * ci, r12 = -cO * sw - sO * cw * ci;
    const T r21 = sO * cw + cO * sw * ci, r22 = -sO * sw + cO * cw * ci;
    const T r31 = sw * si, r32 = cw * si;
    std::vector<T> out;
    out.reserve(6);
    out.push_back(r11 * xp + r12 * yp);
    out.push_back(r21 * xp + r22 * yp);
    out.push_back(r31 * xp + r32 * yp);
    out.push_back(r11 * vxp + r12 * vyp);
    out.push_back(r21 * vxp + r22 * vyp);
    out.push_back(r31 * vxp + r32 * vyp);
    return out;
}

template <class T>
std::vector<T> cartesian_to_keplerian(const std::vector<T>& rv, double mu) {
    using std::atan2;
    using std::sqrt;
    if (rv.size() != 6) throw std::invalid_argument("cartesian_to_keplerian: need 6 components");
    const std::array<T, 3> r{rv[0], rv[1], rv[2]};
    const std::array<T, 3> v{rv[3], rv[4], rv[5]};
    const T rmag = sqrt(dot3(r, r));
    const T v2 = dot3(v, v);
    const std::array<T, 3> hv = cross3(r, v);
    const T hmag = sqrt(dot3(hv, hv));
    const T a = reciprocal(2.0 * reciprocal(rmag) - v2 / mu);
    const T rv_dot = dot3(r, v);
    std::array<T, 3> ev;
    for (int i = 0; i < 3; ++i) {
        ev[i] = ((v2 - mu * reciprocal(rmag)) * r[i] - rv_dot * v[i]) / mu;
    }
    const T e2 = dot3(ev, ev);
    if (constant_of(e2) < 1e-16) {
        throw std::domain_error("cartesian_to_keplerian: singular element: eccentricity");
    }
    const T e = sqrt(e2);
    const T hxy = sqrt(hv[0] * hv[0] + hv[1] * hv[1]);
    if (constant_of(hxy) < 1e-12 * constant_of(hmag)) {
        throw std::domain_error("cartesian_to_keplerian: singular element: inclination");
    }
    const T inc = atan2(hxy, hv[2]);
    const T raan = atan2(hv[0], -hv[1]);
    const std::array<T, 3> node{-hv[1], hv[0], zero_like(hv[0])};
    const T argp = atan2(dot3(cross3(node, ev), hv), dot3(node, ev) * hmag);
    const T nu = atan2(dot3(cross3(ev, r), hv), dot3(ev, r) * hmag);
    std::vector<T> out;
    out.reserve(6);
    out.push_back(a);
    out.push_back(e);
    out.push_back(inc);
    out.push_back(wrap_angle(raan));
    out.push_back(wrap_angle(argp));
    out.push_back(wrap_angle(nu));
    return out;
}

template <class T>
std::vector<T> cartesian_to_mee(const std::vector<T>& rv, double mu, FastAngle fa) {
    using std::atan2;
    using std::cos;
    using std::sin;
    using std::sqrt;
    if (rv.size() != 6) throw std::invalid_argument("cartesian_to_mee: need 6 components");
    const std::array<T, 3> r{rv[0], rv[1], rv[2]};
    const std::array<T, 3> v{rv[3], rv[4], rv[5]};
    const T rmag = sqrt(dot3(r, r));
    const std::array<T, 3> hv = cross3(r, v);
    const T h2 = dot3(hv, hv);
    const T hmag = sqrt(h2);
    const T p = h2 / mu;
    const T inv_h = reciprocal(hmag);
    const std::array<T, 3> khat{hv[0] * inv_h, hv[1] * inv_h, hv[2] * inv_h};
    const T denom = 1.0 + khat[2];
    if (!(constant_of(denom) > 1e-12)) {
        throw std::domain_error("cartesian_to_mee: singular element: retrograde inclination");
    }
    const T he = -khat[1] * reciprocal(denom);
    const T ke = khat[0] * reciprocal(denom);
    const std::array<T, 3> vxh = cross3(v, hv);
    const T inv_r = reciprocal(rmag);
    std::array<T, 3> ev;
    for (int i = 0; i < 3; ++i) ev[i] = vxh[i] / mu - r[i] * inv_r;
    const T s2 = 1.0 + he * he + ke * ke;
    const T inv_s2 = reciprocal(s2);
    // In-plane equinoctial basis; together with hv/|hv| it is orthonormal.
    const std::array<T, 3> fhat{(1.0 + he * he - ke * ke) * inv_s2, (2.0 * he * ke) * inv_s2,
                                (-2.0 * ke) * inv_s2};
    const std::array<T, 3> ghat{(2.0 * he * ke) * inv_s2, (1.0 - he * he + ke * ke) * inv_s2,
                                (2.0 * he) * inv_s2};
    const T fe = dot3(ev, fhat);
    const T ge = dot3(ev, ghat);
    const T xx = dot3(r, fhat);
    const T yy = dot3(r, ghat);
    T lon = atan2(yy, xx);
    if (fa == FastAngle::mean_longitude) {
        const T ecc2 = fe * fe + ge * ge;
        if (constant_of(ecc2) > 1e-16) {
            // lambda = omega_tilde + M with M from the eccentric anomaly.
            const T omega_t = atan2(ge, fe);
            const T nu = lon - omega_t;
            const T ecc = sqrt(ecc2);
            const T half = 0.5 * nu;
            const T ea = 2.0 * atan2(sqrt(1.0 - ecc) * sin(half), sqrt(1.0 + ecc) * cos(half));
            const T ma = ea - ecc * sin(ea);
            lon = omega_t + ma;
        }
    }
    std::vector<T> out;
    out.reserve(6);
    out.push_back(p);
    out.push_back(fe);
    out.push_back(ge);
    out.push_back(he);
    out.push_back(ke);
    out.push_back(wrap_angle(lon));
    return out;
}

template <class T>
std::vector<T> mee_to_cartesian_true(const std::vector<T>& mee, double mu) {
    using std::cos;
    using std::sin;
    using std::sqrt;
    if (mee.size() != 6) throw std::invalid_argument("mee_to_cartesian: need 6 elements");
    const T& p = mee[0];
    const T& f = mee[1];
    const T& g = mee[2];
    const T& h = mee[3];
    const T& k = mee[4];
    const T& lon = mee[5];
    if (!(constant_of(p) > 0.0)) {
        throw std::domain_error("mee_to_cartesian: singular element: semi-latus rectum");
    }
    const T cl = cos(lon), sl = sin(lon);
    const T alpha2 = h * h - k * k;
    const T s2 = 1.0 + h * h + k * k;
    const T inv_s2 = reciprocal(s2);
    const T w = 1.0 + f * cl + g * sl;
    const T r = p * reciprocal(w);
    const T sqmup = sqrt(mu * reciprocal(p));
    std::vector<T> out;
    out.reserve(6);
    out.push_back(r * inv_s2 * (cl + alpha2 * cl + 2.0 * h * k * sl));
    out.push_back(r * inv_s2 * (sl - alpha2 * sl + 2.0 * h * k * cl));
    out.push_back(2.0 * r * inv_s2 * (h * sl - k * cl));
    out.push_back(-inv_s2 * sqmup * (sl + alpha2 * sl - 2.0 * h * k * cl + g - 2.0 * f * h * k + alpha2 * g));
    out.push_back(-inv_s2 * sqmup * (-cl + alpha2 * cl + 2.0 * h * k * sl - f + 2.0 * g * h * k + alpha2 * f));
    out.push_back(2.0 * inv_s2 * sqmup * (h * cl + k * sl + f * h + g * k));
    return out;
}

/// Real-state conversion between the supported coordinate sets; the MEE fast
/// angle applies whenever `mee` is the source or target (the mean-longitude
/// inverse solves the equinoctial Kepler equation by Newton iteration).
std::vector<double> convert(const std::vector<double>& state, CoordSet from, CoordSet to,
                            double mu, FastAngle fa = FastAngle::true_longitude);

}  // namespace uprop
