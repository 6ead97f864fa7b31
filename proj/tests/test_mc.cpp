#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "uprop/mc.hpp"

using namespace uprop;

namespace {

SdeModel ou_model(double rate, double sigma) {
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

SdeModel brownian() { return ou_model(0.0, 1.0); }

Eigen::VectorXd scalar_ic(double v) {
    Eigen::VectorXd x(1);
    x << v;
    return x;
}

}  // namespace

TEST_CASE("philox known-answer vectors") {
    // Reference test vectors for the 10-round 4x32 configuration.
    const auto zero = philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(zero[0] == 0x6627e8d5u);
    CHECK(zero[1] == 0xe169c58du);
    CHECK(zero[2] == 0xbc57ac4cu);
    CHECK(zero[3] == 0x9b00dbd8u);
    const auto ones = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                 {0xffffffffu, 0xffffffffu});
    CHECK(ones[0] == 0x408f276du);
    CHECK(ones[1] == 0x41c83b0eu);
    CHECK(ones[2] == 0xa20bc7c6u);
    CHECK(ones[3] == 0x6d5451fdu);
}

TEST_CASE("counter stream statistics") {
    // Mean, variance and fourth moment of a large keyed sample.
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = counter_normal(12345, i, 17, i % 2);
        s1 += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    CHECK(std::abs(s1 / n) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.05));
    // Distinct keys decorrelate.
    double cross = 0.0;
    for (int i = 0; i < n / 10; ++i) {
        cross += counter_normal(1, i, 3, 0) * counter_normal(2, i, 3, 0);
    }
    CHECK(std::abs(cross / (n / 10)) < 0.03);
}

TEST_CASE("bit reproducibility across thread counts") {
    const SdeModel model = ou_model(1.0, 0.5);
    McConfig cfg;
    cfg.n_paths = 512;
    cfg.base_seed = 999;
    cfg.step = 0.01;
    cfg.threads = 1;
    const auto one = simulate_paths(model, IcSampler::fixed(scalar_ic(1.0)), 0.0, 1.0, cfg);
    cfg.threads = 8;
    const auto eight = simulate_paths(model, IcSampler::fixed(scalar_ic(1.0)), 0.0, 1.0, cfg);
    CHECK(one.states == eight.states);
    // And a different seed changes the draw.
    cfg.base_seed = 1000;
    const auto other = simulate_paths(model, IcSampler::fixed(scalar_ic(1.0)), 0.0, 1.0, cfg);
    CHECK(one.states != other.states);
}

TEST_CASE("noise-free paths reproduce the deterministic integration") {
    const SdeModel det = ou_model(0.8, 0.0);
    McConfig cfg;
    cfg.n_paths = 16;
    cfg.step = 0.01;
    const auto set = simulate_paths(det, IcSampler::fixed(scalar_ic(2.0)), 0.0, 1.0, cfg);
    const double want = 2.0 * std::pow(1.0 - 0.8 * 0.01, 100);
    for (int i = 0; i < 16; ++i) CHECK(set.states(i, 0) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("brownian terminal variance") {
    McConfig cfg;
    cfg.n_paths = 4000;
    cfg.base_seed = 7;
    cfg.step = 0.01;
    const auto set = simulate_paths(brownian(), IcSampler::fixed(scalar_ic(0.0)), 0.0, 1.0, cfg);
    const auto table = sample_moments(set, 2);
    const double band = 3.0 / std::sqrt(2.0 * cfg.n_paths);
    CHECK(std::abs(table.cov(0, 0) - 1.0) < band);
    CHECK(std::abs(table.mean[0]) < 4.0 / std::sqrt(static_cast<double>(cfg.n_paths)));
}

TEST_CASE("ou sample moments against the closed forms") {
    const double rate = 1.0, sigma = 0.5, tf = 1.0;
    McConfig cfg;
    cfg.n_paths = 20000;
    cfg.base_seed = 11;
    cfg.step = 5e-3;
    const auto set =
        simulate_paths(ou_model(rate, sigma), IcSampler::fixed(scalar_ic(1.0)), 0.0, tf, cfg);
    const auto table = sample_moments(set, 2);
    const double want_mean = oracles::ou_mean(1.0, rate, tf);
    const double want_var = oracles::ou_var(sigma, rate, tf);
    const double mean_band = 4.0 * std::sqrt(want_var / cfg.n_paths);
    const double var_band = 4.0 * want_var * std::sqrt(2.0 / (cfg.n_paths - 1.0));
    CHECK(std::abs(table.mean[0] - want_mean) < mean_band + 1e-3 * want_mean);
    CHECK(std::abs(table.cov(0, 0) - want_var) < var_band + 2e-3 * want_var);
}

TEST_CASE("weak convergence of the chain mean at first order") {
    // Small diffusion keeps the sampling noise below the chain error.
    const double rate = 1.0, sigma = 0.05, tf = 1.0;
    McConfig cfg;
    cfg.n_paths = 20000;
    cfg.base_seed = 23;
    auto mean_err = [&](double h) {
        cfg.step = h;
        const auto set = simulate_paths(ou_model(rate, sigma), IcSampler::fixed(scalar_ic(1.0)),
                                        0.0, tf, cfg);
        return std::abs(sample_moments(set, 1).mean[0] - oracles::ou_mean(1.0, rate, tf));
    };
    const double e1 = mean_err(0.04);
    const double e2 = mean_err(0.02);
    const double e3 = mean_err(0.01);
    CHECK(e1 / e2 > 1.5);
    CHECK(e1 / e2 < 2.6);
    CHECK(e2 / e3 > 1.5);
    CHECK(e2 / e3 < 2.6);
}

TEST_CASE("gaussian initial sampler hits the requested moments") {
    Eigen::VectorXd mu(2);
    mu << 1.0, -2.0;
    Eigen::MatrixXd p(2, 2);
    p << 0.5, 0.2, 0.2, 0.3;
    const auto sampler = IcSampler::gaussian(mu, p);
    const int n = 20000;
    Eigen::MatrixXd draws(n, 2);
    for (int i = 0; i < n; ++i) draws.row(i) = sampler.draw(3, i).transpose();
    const Eigen::VectorXd m = draws.colwise().mean();
    CHECK((m - mu).norm() < 0.03);
    Eigen::MatrixXd centered = draws.rowwise() - m.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1.0);
    CHECK((cov - p).norm() < 0.02);
}

TEST_CASE("rk4 additive-noise scheme without noise is plain rk4") {
    const SdeModel det = ou_model(0.8, 0.0);
    McConfig cfg;
    cfg.n_paths = 4;
    cfg.step = 0.05;
    cfg.scheme = McScheme::rk4_additive_noise;
    const auto set = simulate_paths(det, IcSampler::fixed(scalar_ic(1.0)), 0.0, 1.0, cfg);
    CHECK(set.states(0, 0) == doctest::Approx(std::exp(-0.8)).epsilon(1e-6));
}

TEST_CASE("diverging paths are flagged and excluded") {
    // Unstable cubic growth x' = x^3 blows up to inf within a few steps.
    const SdeModel unstable = make_sde_model(
        1, 1,
        [](const auto& x, double) {
            using VecT = std::decay_t<decltype(x)>;
            return VecT{x[0] * x[0] * x[0]};
        },
        [](const auto& x, double) {
            auto g = zero_mat(1, 1, x[0]);
            g(0, 0) = zero_like(x[0]) + 1.0;
            return g;
        });
    McConfig cfg;
    cfg.n_paths = 8;
    cfg.step = 10.0;
    const auto set = simulate_paths(unstable, IcSampler::fixed(scalar_ic(5.0)), 0.0, 100.0, cfg);
    CHECK(set.excluded == 8);
    CHECK_THROWS_AS(sample_moments(set, 2), std::invalid_argument);
}

TEST_CASE("sample_moments closed cases") {
    SampleSet set;
    set.states.resize(2, 1);
    set.states << -1.0, 1.0;
    set.valid = {1, 1};
    const auto table = sample_moments(set, 2);
    CHECK(table.mean[0] == 0.0);
    CHECK(table.cov(0, 0) == doctest::Approx(2.0));  // 1/(N-1) normalization
    const std::vector<int> r2{2};
    CHECK(table.raw[table.basis->index_of(r2)] == doctest::Approx(1.0));

    SampleSet rep;
    rep.states.resize(3, 2);
    rep.states << 2.0, -1.0, 2.0, -1.0, 2.0, -1.0;
    rep.valid = {1, 1, 1};
    const auto tr = sample_moments(rep, 2);
    CHECK(tr.cov.norm() == 0.0);
}

TEST_CASE("standard normal fourth raw moment") {
    McConfig cfg;
    cfg.n_paths = 100000;
    cfg.base_seed = 31;
    cfg.step = 1.0;
    // One Brownian step of unit variance gives standard normal terminals.
    const auto set = simulate_paths(brownian(), IcSampler::fixed(scalar_ic(0.0)), 0.0, 1.0, cfg);
    const auto table = sample_moments(set, 4);
    const std::vector<int> r4{4};
    CHECK(table.raw[table.basis->index_of(r4)] == doctest::Approx(3.0).epsilon(0.05));
}
