#include "uprop/runner.hpp"

namespace uprop {

// Bundled scenario presets. These are ordinary config files embedded in the
// binary; `run <name>` falls back to this table when no file matches.
const std::map<std::string, std::string>& bundled_scenarios() {
    static const std::map<std::string, std::string> presets{
        {"duffing_oracle", R"JSON(
{
  // Discrete noisy map driven through the moment recursion, checked against
  // the closed-form order-2 recursion at machine precision.
  "name": "duffing_oracle",
  "model": { "id": "duffing", "a": 2.75, "b": 0.2, "sigma": 0.1 },
  "initial": { "kind": "deterministic", "mean": [0.5, 0.3] },
  "time": { "t0_s": 0.0, "tf_s": 50.0 },
  "method": "plasma",
  "plasma": { "order": 2 },
  "duffing_check": { "tol": 1e-12 }
}
)JSON"},
        {"ou_linear", R"JSON(
{
  // Linear mean-reverting diffusion; moments are exact for the discrete
  // chain, so this is a quick end-to-end smoke run.
  "name": "ou_linear",
  "model": { "id": "ou", "rate": 1.0, "sigma": 0.5 },
  "initial": { "kind": "deterministic", "mean": [1.0] },
  "time": { "t0_s": 0.0, "tf_s": 2.0 },
  "method": "plasma",
  "plasma": { "order": 2, "scheme": "euler_maruyama", "step_s": 1e-3 }
}
)JSON"},
        {"kepler_desk", R"JSON(
{
  // Planar Kepler motion with a velocity-scaled stochastic acceleration,
  // desk scale: 0.15 day, 1 s steps, co-run Monte Carlo reference.
  "name": "kepler_desk",
  "model": { "id": "kepler_planar_sde", "mu_km3_s2": 3.986e5, "sigma_w_km2_s2p5": 2e-4 },
  "initial": {
    "kind": "deterministic",
    "state_kind": "circular_periapsis",
    "re_km": 6378.0,
    "h0_km": 200.0
  },
  "time": { "t0_s": 0.0, "tf_s": 12960.0 },
  "method": "plasma",
  "plasma": { "order": 2, "scheme": "euler_maruyama", "step_s": 1.0 },
  "mc": { "n_paths": 2000, "seed": 20260810, "scheme": "euler_maruyama", "step_s": 1.0 }
}
)JSON"},
        {"kepler_table5", R"JSON(
{
  // Long-running reference case: 1.51 day, 0.1 s steps (~1.3e6 updates).
  // The reference block pins the expected terminal mean of the moment run;
  // no Monte Carlo co-run (that alone takes hours at this resolution).
  "name": "kepler_table5",
  "model": { "id": "kepler_planar_sde", "mu_km3_s2": 3.986e5, "sigma_w_km2_s2p5": 2e-4 },
  "initial": {
    "kind": "deterministic",
    "state_kind": "circular_periapsis",
    "re_km": 6378.0,
    "h0_km": 200.0
  },
  "time": { "t0_s": 0.0, "tf_s": 130464.0 },
  "method": "plasma",
  "plasma": { "order": 2, "scheme": "euler_maruyama", "step_s": 0.1 },
  "reference": {
    "frame": "cartesian",
    "mean": [5935.7143264343895, -2661.641732752862, 2.983302274246626, 6.669976955926232],
    "tol_mean_rel": 0.01
  }
}
)JSON"},
        {"kepler_gmm_desk", R"JSON(
{
  // Random initial conditions: adaptive mixture refinement on the
  // deterministic dynamics plus per-kernel moment runs for the process
  // noise, desk scale with a Monte Carlo reference.
  "name": "kepler_gmm_desk",
  "model": { "id": "kepler_planar_sde", "mu_km3_s2": 3.986e5, "sigma_w_km2_s2p5": 2e-4 },
  "initial": {
    "kind": "gaussian",
    "state_kind": "circular_periapsis",
    "re_km": 6378.0,
    "h0_km": 200.0,
    "cov_diag": [0.1, 0.1, 1e-4, 1e-4]
  },
  "time": { "t0_s": 0.0, "tf_s": 12960.0 },
  "method": "mf_stochastic",
  "lf_model": { "id": "kepler_planar_sde", "mu_km3_s2": 3.986e5 },
  "hf_model": { "id": "kepler_planar_sde", "mu_km3_s2": 3.986e5, "sigma_w_km2_s2p5": 2e-4 },
  "gmm": { "eps_nu": 0.05, "zeta": 3.0, "n_max": 4, "alpha_min": 1e-3, "step_s": 10.0 },
  "plasma": { "order": 2, "scheme": "euler_maruyama", "step_s": 1.0 },
  "threads": 4,
  "mc": { "n_paths": 2000, "seed": 20260810, "scheme": "euler_maruyama", "step_s": 1.0 }
}
)JSON"},
        {"kepler_gmm_table7", R"JSON(
{
  // Long-running variant of kepler_gmm_desk over the full 1.51 day arc.
  // The refinement saturates the split cap and yields 81 kernels.
  "name": "kepler_gmm_table7",
  "model": { "id": "kepler_planar_sde", "mu_km3_s2": 3.986e5, "sigma_w_km2_s2p5": 2e-4 },
  "initial": {
    "kind": "gaussian",
    "state_kind": "circular_periapsis",
    "re_km": 6378.0,
    "h0_km": 200.0,
    "cov_diag": [0.1, 0.1, 1e-4, 1e-4]
  },
  "time": { "t0_s": 0.0, "tf_s": 130464.0 },
  "method": "mf_stochastic",
  "lf_model": { "id": "kepler_planar_sde", "mu_km3_s2": 3.986e5 },
  "hf_model": { "id": "kepler_planar_sde", "mu_km3_s2": 3.986e5, "sigma_w_km2_s2p5": 2e-4 },
  "gmm": { "eps_nu": 0.05, "zeta": 3.0, "n_max": 4, "alpha_min": 1e-3, "step_s": 30.0 },
  // The update step matters here: the first-order scheme's secular energy
  // drift over 1.3e6 steps is part of the discretized chain being matched.
  "plasma": { "order": 2, "scheme": "euler_maruyama", "step_s": 0.1 },
  "threads": 8
}
)JSON"},
        {"thrust_bifid_desk", R"JSON(
{
  // Low-thrust orbit raising with thrust-dispersion noise: relative moment
  // run around the precomputed reference (cheap drift drops the zonal term),
  // reported in equinoctial elements with the mean longitude.
  "name": "thrust_bifid_desk",
  "model": {
    "id": "thrust_sde",
    "mu_km3_s2": 3.986004418e5,
    "re_km": 6378.137,
    "j2": 1.0826269e-3,
    "a_t_m_s2": 1e-4,
    "sigma_at_m_s1p5": 5e-6,
    "sigma_alpha_deg_sqrt_s": 5.0,
    "sigma_beta_deg_sqrt_s": 5.0
  },
  "initial": {
    "kind": "deterministic",
    "state_kind": "keplerian_deg",
    "mean": [24000.0, 0.72, 5.0, 0.0, 0.0, 0.0]
  },
  "time": { "t0_s": 0.0, "tf_s": 43200.0 },
  "method": "plasma_bifidelity",
  "plasma": { "order": 2, "scheme": "rk4", "step_s": 60.0 },
  "bifidelity_lf_model": { "id": "thrust_sde", "include_j2": false, "a_t_m_s2": 1e-4 },
  "report_mee": true
}
)JSON"},
        {"heo_mf_desk", R"JSON(
{
  // Highly eccentric orbit, deterministic dynamics: cheap two-body mixture
  // refinement corrected by pointwise propagation in the zonal-perturbed
  // field, against a Monte Carlo reference in the same field.
  "name": "heo_mf_desk",
  "model": {
    "id": "thrust_sde",
    "a_t_m_s2": 0.0, "sigma_at_m_s1p5": 0.0,
    "sigma_alpha_deg_sqrt_s": 0.0, "sigma_beta_deg_sqrt_s": 0.0
  },
  "initial": {
    "kind": "gaussian",
    "state_kind": "keplerian_deg",
    "mean": [35000.0, 0.2, 5.0, 0.0, 0.0, 0.0],
    "cov_diag": [1.0, 1.0, 1.0, 1e-8, 1e-8, 1e-8]
  },
  "time": { "t0_s": 0.0, "tf_s": 78200.0 },
  "method": "mf_deterministic",
  "lf_model": { "id": "twobody", "mu_km3_s2": 3.986004418e5 },
  "hf_model": {
    "id": "thrust_sde",
    "a_t_m_s2": 0.0, "sigma_at_m_s1p5": 0.0,
    "sigma_alpha_deg_sqrt_s": 0.0, "sigma_beta_deg_sqrt_s": 0.0
  },
  "gmm": { "eps_nu": 0.02, "zeta": 3.0, "step_s": 60.0 },
  "hf": { "step_s": 60.0 },
  "threads": 4,
  "mc": { "n_paths": 5000, "seed": 42, "scheme": "rk4_additive_noise", "step_s": 60.0 }
}
)JSON"},
    };
    return presets;
}

}  // namespace uprop
