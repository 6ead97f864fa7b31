#pragma once

#include <Eigen/Core>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "uprop/multi_index.hpp"
#include "uprop/sde.hpp"
#include "uprop/taylor.hpp"

namespace uprop {

/// Raw moments E[dWhat^r] of the effective noise for all |r| <= order,
/// together with the central (noise-free) sequence value they are attached
/// to. moments[0] is the normalization and equals 1.
struct NoiseMomentSet {
    int order = 0;
    int state_dim = 0;
    std::shared_ptr<const MonomialBasis> basis;  // (state_dim, order)
    std::vector<double> moments;                 // dense in basis ordering
    Eigen::VectorXd central;
    double time = 0.0;

    double moment(std::span<const int> r) const;
    double moment(int index) const { return moments[index]; }
};

/// Delta-initialized moment set: 1 at r = 0, 0 otherwise.
NoiseMomentSet delta_moments(const Eigen::VectorXd& ic, int order, double t0);

/// E[dW^s] for dW ~ N(0, h I): product over channels of (s_j - 1)!! h^{s_j/2}
/// for even s_j, zero when any s_j is odd.
double gaussian_increment_moments(std::span<const int> s, double h);

enum class DaScheme { euler_maruyama, rk4 };

/// One-step map acting on the polynomial state with attached noise
/// identities; used to drive the recursion with custom discrete maps.
using DaStepFn = std::function<std::vector<TaylorPoly>(
    const std::vector<TaylorPoly>& state, const std::vector<TaylorPoly>& noise, double t,
    double h)>;

/// Advance the moment set over one update interval h_k with a custom step.
/// When `central_override` is set (relative formulation around a reference
/// trajectory) the stepped polynomials are taken as the effective-noise
/// expansion directly and the central value is replaced by the override.
NoiseMomentSet plasma_step_custom(const DaStepFn& step, const NoiseMomentSet& ms, int noise_dim,
                                  double h_k,
                                  const std::optional<Eigen::VectorXd>& central_override = {});

/// Advance the moment set through the model's discretized dynamics: expand
/// one integration interval in state deviations and noise increments,
/// rescale the noise monomials by 1/h_k, subtract the new central part, and
/// update every E[dWhat^r] from the expansion coefficients, the Gaussian
/// increment moments and the previous-step moments.
NoiseMomentSet plasma_step(const SdeModel& model, const NoiseMomentSet& ms, double h_k,
                           DaScheme scheme, int substeps = 1);

/// Raw state moment E[Xhat^r] from the binomial expansion about the central
/// sequence. Throws std::out_of_range for |r| > order.
double state_moment(const NoiseMomentSet& ms, std::span<const int> r);

Eigen::VectorXd state_mean(const NoiseMomentSet& ms);

/// Second-order moments about the mean; requires order >= 2.
Eigen::MatrixXd state_covariance(const NoiseMomentSet& ms);

struct PlasmaOutput {
    std::vector<NoiseMomentSet> samples;  // requested intermediate sets, final included

    const NoiseMomentSet& final_set() const { return samples.back(); }
};

/// Repeated plasma_step over a fixed grid; the final step is shortened when
/// h does not divide tf - t0. store_every = 0 keeps only the final set.
PlasmaOutput plasma_run(const SdeModel& model, const NoiseMomentSet& initial, double tf,
                        double h, DaScheme scheme, int substeps = 1, int store_every = 0);

PlasmaOutput plasma_run(const SdeModel& model, const Eigen::VectorXd& ic, double t0, double tf,
                        double h, int order, DaScheme scheme, int substeps = 1,
                        int store_every = 0);

/// Bi-fidelity variant: the reference trajectory is integrated once with the
/// expensive drift and stored as dense output; the per-step expansion then
/// integrates only the nilpotent part of the cheap drift (plus the full
/// diffusion) relative to the reference, and the central sequence is read
/// from the reference.
PlasmaOutput plasma_run_bifidelity(const SdeModel& hf, const OdeModel& lf_drift,
                                   const Eigen::VectorXd& ic, double t0, double tf, double h,
                                   int order, DaScheme scheme, int substeps = 1,
                                   int store_every = 0);

/// Structured-text export: one "time  r_1 ... r_n  value" row per moment.
void write_moments(std::ostream& os, const PlasmaOutput& out);

}  // namespace uprop
