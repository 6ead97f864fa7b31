#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "oracles.hpp"
#include "uprop/dynamics.hpp"
#include "uprop/mf.hpp"
#include "uprop/sde.hpp"

using namespace uprop;

namespace {

Manifold single_kernel(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    Manifold m;
    GaussKernel k;
    k.id = 1;
    k.weight = 1.0;
    k.mean = mean;
    k.cov = cov;
    m.kernels.push_back(k);
    return m;
}

MapFn flow_map(const OdeModel& ode, double t0, double tf, double h) {
    return [=](const std::vector<TaylorPoly>& x) {
        return propagate_polys(ode, x, t0, tf, h);
    };
}

SdeModel ou_sde(double rate, double sigma) {
    return make_sde_model(
        1, 1,
        [rate](const auto& x, double) {
            using VecT = std::decay_t<decltype(x)>;
            return VecT{-rate * x[0]};
        },
        [sigma](const auto& x, double) {
            auto g = zero_mat(1, 1, x[0]);
            g(0, 0) = zero_like(x[0]) + sigma;
            return g;
        });
}

}  // namespace

TEST_CASE("deterministic correction with matching fidelities is the identity") {
    const KeplerSdeParams p;
    const OdeModel ode = kepler_planar_ode(p);
    const Eigen::VectorXd ic = kepler_circular_ic(p.mu, 6378.0, 200.0);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(4, 4);
    cov(0, 0) = cov(1, 1) = 0.1;
    cov(2, 2) = cov(3, 3) = 1e-4;
    const Manifold init = single_kernel(ic, cov);
    AdaptConfig cfg;
    cfg.eps_nu = 1e9;  // single kernel
    const double tf = 900.0, h = 10.0;
    const MapFn lf = flow_map(ode, 0.0, tf, h);
    const FlowFn hf = [&](const Eigen::VectorXd& x) {
        return propagate_rk4(ode, x, 0.0, tf, h);
    };
    const MfResult res = mf_deterministic(lf, hf, init, cfg);
    REQUIRE(res.corrected.kernels.size() == 1);
    // The pointwise flow and the expansion's constant part coincide, so the
    // correction shifts nothing.
    CHECK(res.records[0].shift_norm / res.records[0].mu_ref_tf.norm() < 1e-12);
    const GaussKernel& lf_kernel = res.adapt.propagated.kernels[0];
    const GaussKernel& mf_kernel = res.corrected.kernels[0];
    CHECK((lf_kernel.mean - mf_kernel.mean).norm() / lf_kernel.mean.norm() < 1e-12);
    CHECK((lf_kernel.cov - mf_kernel.cov).norm() / lf_kernel.cov.norm() < 1e-12);
}

TEST_CASE("deterministic correction fixes the cheap model's mean drift") {
    // Cheap: two-body. Expensive: the same field plus the zonal term.
    ThrustSdeParams hf_params;
    hf_params.a_thrust = 0.0;
    hf_params.sigma_at = hf_params.sigma_alpha = hf_params.sigma_beta = 0.0;
    const OdeModel hf_ode = thrust_drift_model(hf_params);
    const OdeModel lf_ode = twobody_ode(hf_params.mu);
    std::vector<double> kep{12000.0, 0.1, 10.0 * M_PI / 180.0, 0.0, 0.0, 0.0};
    const auto cart = keplerian_to_cartesian(kep, hf_params.mu);
    const Eigen::VectorXd ic = Eigen::Map<const Eigen::VectorXd>(cart.data(), 6);
    Eigen::VectorXd diag(6);
    diag << 1e-2, 1e-2, 1e-2, 1e-8, 1e-8, 1e-8;
    const Manifold init = single_kernel(ic, diag.asDiagonal());
    AdaptConfig cfg;
    cfg.eps_nu = 1e9;
    const double tf = 8000.0, h = 30.0;
    const MfResult res = mf_deterministic(
        flow_map(lf_ode, 0.0, tf, h),
        [&](const Eigen::VectorXd& x) { return propagate_rk4(hf_ode, x, 0.0, tf, h); }, init,
        cfg);
    const Eigen::VectorXd truth = propagate_rk4(hf_ode, ic, 0.0, tf, h);
    const Eigen::VectorXd lf_mean = res.adapt.propagated.kernels[0].mean;
    const Eigen::VectorXd mf_mean = res.corrected.kernels[0].mean;
    // The corrected mean lands on the expensive trajectory; the cheap one is
    // dozens of kilometers off.
    CHECK(res.records[0].shift_norm > 1.0);
    CHECK((mf_mean - truth).norm() < 0.02 * (lf_mean - truth).norm());
    // Weights and the nilpotent parts are untouched by the correction.
    CHECK(res.corrected.kernels[0].weight == res.adapt.propagated.kernels[0].weight);
    const auto& plf = res.adapt.propagated.kernels[0].polys;
    const auto& pmf = res.corrected.kernels[0].polys;
    for (std::size_t c = 0; c < plf.size(); ++c) {
        for (int q = 1; q < plf[c].basis()->size(); ++q) {
            CHECK(pmf[c].coeff(q) == plf[c].coeff(q));
        }
    }
}

TEST_CASE("stochastic correction without diffusion equals the deterministic one") {
    KeplerSdeParams params;
    params.sigma_w = 0.0;  // G == 0
    const SdeModel sde = kepler_planar_sde(params);
    const OdeModel ode = kepler_planar_ode(params);
    const Eigen::VectorXd ic = kepler_circular_ic(params.mu, 6378.0, 200.0);
    Eigen::VectorXd diag(4);
    diag << 0.1, 0.1, 1e-4, 1e-4;
    const Manifold init = single_kernel(ic, diag.asDiagonal());
    AdaptConfig cfg;
    cfg.eps_nu = 0.05;
    const double tf = 1200.0, h = 5.0;
    const MapFn lf = flow_map(ode, 0.0, tf, h);
    PlasmaConfig pc;
    pc.h = h;
    pc.scheme = DaScheme::rk4;
    const MfResult stoch = mf_stochastic(lf, sde, init, cfg, pc, 0.0, tf);
    const MfResult det = mf_deterministic(
        lf, [&](const Eigen::VectorXd& x) { return propagate_rk4(ode, x, 0.0, tf, h); }, init,
        cfg);
    REQUIRE(stoch.corrected.kernels.size() == det.corrected.kernels.size());
    for (std::size_t l = 0; l < stoch.corrected.kernels.size(); ++l) {
        const auto& a = stoch.corrected.kernels[l];
        const auto& b = det.corrected.kernels[l];
        CHECK(a.weight == b.weight);
        CHECK((a.mean - b.mean).norm() / b.mean.norm() < 1e-10);
        CHECK((a.cov - b.cov).norm() / b.cov.norm() < 1e-10);
        CHECK(stoch.records[l].p_pn.norm() == 0.0);
    }
}

TEST_CASE("stochastic correction: inflation accounting and weight identity") {
    KeplerSdeParams params;  // nonzero diffusion
    const SdeModel sde = kepler_planar_sde(params);
    const OdeModel ode = kepler_planar_ode(params);
    const Eigen::VectorXd ic = kepler_circular_ic(params.mu, 6378.0, 200.0);
    Eigen::VectorXd diag(4);
    diag << 0.1, 0.1, 1e-4, 1e-4;
    const Manifold init = single_kernel(ic, diag.asDiagonal());
    AdaptConfig cfg;
    cfg.eps_nu = 0.02;
    const double tf = 1500.0, h = 5.0;
    PlasmaConfig pc;
    pc.h = h;
    pc.scheme = DaScheme::rk4;
    const MfResult res = mf_stochastic(flow_map(ode, 0.0, tf, h), sde, init, cfg, pc, 0.0, tf);
    REQUIRE(!res.corrected.kernels.empty());
    for (std::size_t l = 0; l < res.corrected.kernels.size(); ++l) {
        const auto& out = res.corrected.kernels[l];
        const auto& lf_k = res.adapt.propagated.kernels[l];
        CHECK(out.weight == lf_k.weight);  // bit-identical weights
        // Recompute the uninflated statistics from the corrected polynomial:
        // the difference must be exactly the process-noise covariance.
        const auto& init_k = res.adapt.initial.kernels[l];
        auto [mu, p_mf] = ut_transform(out.polys, init_k, cfg.kappa_for(4));
        const Eigen::MatrixXd back = out.cov - p_mf;
        CHECK((back - res.records[l].p_pn).norm() / res.records[l].p_pn.norm() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(res.records[l].p_pn,
                                                          Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * res.records[l].p_pn.trace());
    }
    // Mixture covariance grows in the Loewner order under inflation.
    Manifold uninflated = res.corrected;
    for (std::size_t l = 0; l < uninflated.kernels.size(); ++l) {
        uninflated.kernels[l].cov -= res.records[l].p_pn;
    }
    auto [m_in, p_in] = mixture_moments(res.corrected);
    auto [m_un, p_un] = mixture_moments(uninflated);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p_in - p_un, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * p_in.trace());
}

TEST_CASE("stochastic pipeline reproduces linear closed forms") {
    const double rate = 1.0, sigma = 0.5, tf = 1.0, h = 1e-3;
    const SdeModel sde = ou_sde(rate, sigma);
    const OdeModel drift = sde.drift_model();
    Eigen::VectorXd mu0(1);
    mu0 << 2.0;
    Eigen::MatrixXd p0(1, 1);
    p0 << 0.09;
    const Manifold init = single_kernel(mu0, p0);
    AdaptConfig cfg;
    PlasmaConfig pc;
    pc.h = h;
    pc.scheme = DaScheme::rk4;
    const MfResult res =
        mf_stochastic(flow_map(drift, 0.0, tf, h), sde, init, cfg, pc, 0.0, tf);
    auto [mean, cov] = mixture_moments(res.corrected);
    const double decay = std::exp(-rate * tf);
    const double want_mean = decay * mu0[0];
    const double want_var = decay * decay * p0(0, 0) + oracles::ou_var(sigma, rate, tf);
    CHECK(mean[0] == doctest::Approx(want_mean).epsilon(1e-7));
    CHECK(cov(0, 0) == doctest::Approx(want_var).epsilon(1e-5));
}

TEST_CASE("pointwise-stage failures carry the kernel id") {
    const KeplerSdeParams p;
    const OdeModel ode = kepler_planar_ode(p);
    const Eigen::VectorXd ic = kepler_circular_ic(p.mu, 6378.0, 200.0);
    const Manifold init = single_kernel(ic, 0.01 * Eigen::MatrixXd::Identity(4, 4));
    AdaptConfig cfg;
    cfg.eps_nu = 1e9;
    const MapFn lf = flow_map(ode, 0.0, 100.0, 10.0);
    const FlowFn broken = [](const Eigen::VectorXd&) -> Eigen::VectorXd {
        throw std::runtime_error("propagator exploded");
    };
    try {
        mf_deterministic(lf, broken, init, cfg);
        CHECK(false);
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("kernel 1") != std::string::npos);
    }
}
