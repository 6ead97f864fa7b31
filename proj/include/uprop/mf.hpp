#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>

#include "uprop/gmm.hpp"
#include "uprop/plasma.hpp"
#include "uprop/sde.hpp"

namespace uprop {

/// Pointwise flow from the initial to the target epoch.
using FlowFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct MfKernelRecord {
    std::uint64_t id = 0;
    Eigen::VectorXd mu_lf_t0;    // kernel mean fed to the pointwise stage
    Eigen::VectorXd mu_lf_tf;    // constant part of the cheap expansion
    Eigen::VectorXd mu_ref_tf;   // pointwise / moment-stage replacement
    Eigen::MatrixXd p_pn;        // process-noise covariance (stochastic only)
    double shift_norm = 0.0;     // |mu_ref_tf - mu_lf_tf|
};

struct MfResult {
    AdaptResult adapt;        // refinement stage output (initial + cheap propagated)
    Manifold corrected;       // mixture after the constant-part correction
    std::vector<MfKernelRecord> records;
};

/// Deterministic correction: refine and propagate with the cheap map, push
/// each refined kernel mean through the expensive flow, replace the constant
/// part of every propagated polynomial with that state, and recompute the
/// kernel statistics from sigma points. Weights and nilpotent parts are
/// untouched.
MfResult mf_deterministic(const MapFn& lf_map, const FlowFn& hf_prop, const Manifold& initial,
                          const AdaptConfig& cfg, int threads = 1);

struct PlasmaConfig {
    double h = 1.0;
    int order = 2;
    DaScheme scheme = DaScheme::rk4;
    int substeps = 1;
};

/// Stochastic correction: as above, but the per-kernel pointwise stage is a
/// moment run from the deterministic kernel mean with delta-initialized
/// noise moments. The polynomial constant parts are re-centered on the
/// moment-stage means and every kernel covariance is inflated by the
/// process-noise covariance; the two contributions are treated as
/// independent, and weights are unchanged. When `bifi_lf_drift` is given the
/// moment stage runs in its relative bi-fidelity form.
MfResult mf_stochastic(const MapFn& lf_map, const SdeModel& hf_sde, const Manifold& initial,
                       const AdaptConfig& cfg, const PlasmaConfig& pcfg, double t0, double tf,
                       const std::optional<OdeModel>& bifi_lf_drift = {}, int threads = 1);

}  // namespace uprop
