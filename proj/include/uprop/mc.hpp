#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "uprop/multi_index.hpp"
#include "uprop/sde.hpp"

namespace uprop {

/// Philox4x32-10 counter-based block cipher (Salmon et al. constants).
/// Stateless: the output depends only on (counter, key), so any draw in a
/// simulation is addressable and the stream is independent of scheduling.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key);

/// Standard normal draw keyed by (seed, path, step, channel); channels 2c and
/// 2c+1 share one Philox block through the Box-Muller pair.
double counter_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                      std::uint32_t channel);

enum class McScheme { euler_maruyama, rk4_additive_noise };

struct McConfig {
    int n_paths = 1000;
    std::uint64_t base_seed = 0;
    double step = 1e-2;
    McScheme scheme = McScheme::euler_maruyama;
    int threads = 1;
};

/// Initial-condition sampler: deterministic point or Gaussian draws keyed to
/// the same counter stream as the path noise.
struct IcSampler {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;  // empty -> deterministic
    bool deterministic() const { return cov.size() == 0; }

    static IcSampler fixed(const Eigen::VectorXd& x0);
    static IcSampler gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

    Eigen::VectorXd draw(std::uint64_t seed, std::uint64_t path) const;
};

struct SampleSet {
    Eigen::MatrixXd states;       // n_paths x state_dim, terminal states
    std::vector<char> valid;      // per-path finite flag
    int excluded = 0;             // non-finite paths, reported and skipped
    double tf = 0.0;

    int n_valid() const { return static_cast<int>(states.rows()) - excluded; }
};

/// Independent paths of the SDE over [t0, tf]; Wiener increments are
/// N(0, h) per channel per step and bit-reproducible for a fixed seed
/// independent of the thread count. The rk4_additive_noise scheme applies a
/// deterministic RK4 update and adds G(x_k, t_k) dW once per step; it is a
/// weak-order-limited stand-in used only alongside RK4-driven moment runs.
SampleSet simulate_paths(const SdeModel& model, const IcSampler& ic, double t0, double tf,
                         const McConfig& cfg);

struct MomentTable {
    Eigen::VectorXd mean;                        // unbiased
    Eigen::MatrixXd cov;                         // 1/(N-1) normalization
    std::shared_ptr<const MonomialBasis> basis;  // raw moments up to `order`
    std::vector<double> raw;                     // plain averages of products
};

/// Sample statistics; raw moments are plain averages, accumulated pairwise.
MomentTable sample_moments(const SampleSet& samples, int order);

/// One row per path: path index, validity, terminal components.
void write_samples(std::ostream& os, const SampleSet& samples);

}  // namespace uprop
