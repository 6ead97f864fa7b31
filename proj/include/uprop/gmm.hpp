#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include "uprop/domain.hpp"
#include "uprop/taylor.hpp"

namespace uprop {

/// One weighted Gaussian component of a mixture. `polys` carries the
/// attached Taylor expansions (domain polynomials on the initial side, image
/// polynomials on the propagated side); `zeta` is the domain spread the
/// polynomials were built with, needed to interpret their normalized
/// deviation variables.
struct GaussKernel {
    std::uint64_t id = 1;
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    double zeta = 3.0;
    std::vector<TaylorPoly> polys;
};

enum class ManifoldSide { initial, propagated };

struct Manifold {
    ManifoldSide side = ManifoldSide::initial;
    std::vector<GaussKernel> kernels;

    double total_weight() const;
};

/// Symmetric three-component univariate split of N(0,1): weights
/// [w, w0, w], means [-m, 0, m], common standard deviation sigma < 1.
struct SplitLibrary3 {
    double weight_side = 0.0;    // w
    double weight_center = 1.0;  // w0 = 1 - 2w
    double offset = 0.0;         // m
    double sigma = 1.0;          // common component std
    double lambda_penalty = 0.0;
    double l2_distance_sq = 0.0;  // residual of the fit

    double mixture_variance() const {
        return 2.0 * weight_side * (offset * offset + sigma * sigma) +
               weight_center * sigma * sigma;
    }
};

/// Solves the univariate fit min_{w,m,sigma} L2^2(N(0,1), mixture)
/// + lambda * sigma^2 by coarse grid seeding plus Nelder-Mead refinement.
/// Results are cached per lambda. Throws std::runtime_error (with the
/// residual) when the optimizer fails to produce a valid library.
SplitLibrary3 build_split_library(double lambda_penalty);

/// Closed-form squared L2 distance between N(0,1) and the library mixture.
double split_library_l2_sq(double w, double m, double sigma);

/// Split a kernel into three along the covariance square-root image of a
/// unit direction. Total weight and mixture mean are preserved exactly; the
/// variance along the direction contracts per the library.
std::array<GaussKernel, 3> split_kernel(const GaussKernel& k,
                                        const Eigen::VectorXd& direction,
                                        const SplitLibrary3& lib);

struct SigmaPoints {
    Eigen::MatrixXd points;   // n x (2n+1), column 0 is the mean
    Eigen::VectorXd weights;  // 2n+1
};

/// Symmetric sigma points of N(mean, cov): mean and mean +- columns of the
/// eigen square root of (n+kappa) cov; W0 = kappa/(n+kappa),
/// Wi = 1/(2(n+kappa)). Requires n + kappa > 0 and cov PSD.
SigmaPoints ut_sigma(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, double kappa);

/// Julier heuristic kappa = 3 - n, with a fallback to 0 if n + kappa <= 0.
double default_ut_kappa(int n);

/// Mean and covariance of the kernel's Gaussian pushed through the attached
/// polynomials, which are functions of the kernel's normalized deviations
/// (distributed as N(0, I/zeta^2)). Exact for linear polynomials.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> ut_transform(const std::vector<TaylorPoly>& polys,
                                                         const GaussKernel& kernel,
                                                         double kappa);

struct AdaptConfig {
    double eps_nu = 0.02;      // nonlinearity threshold
    int n_max = 20;            // maximum splits along any lineage
    double alpha_min = 1e-6;   // minimum component weight for further splits
    double zeta = 3.0;         // domain spread
    int order = 2;             // expansion order of the domain polynomials
    double split_lambda = 1e-3;
    double ut_kappa = std::numeric_limits<double>::quiet_NaN();  // NaN -> Julier

    double kappa_for(int n) const;
};

using MapFn = std::function<std::vector<TaylorPoly>(const std::vector<TaylorPoly>&)>;

struct KernelDiag {
    std::uint64_t id = 0;
    double nu = 0.0;
    int depth = 0;
};

struct AdaptResult {
    Manifold initial;     // refined mixture with domain polynomials
    Manifold propagated;  // aligned mixture with image polynomials and UT moments
    std::vector<KernelDiag> diags;
    int splits = 0;
};

/// Split-until-linear recursion: map each kernel's domain polynomials, gate
/// on the nonlinearity index, split along the dominant deviation direction
/// when above threshold, and re-enqueue the children. Kernel weights are
/// never updated. Output manifolds are aligned and ordered by kernel id.
AdaptResult adaptive_propagate(const Manifold& initial, const MapFn& map_fn,
                               const AdaptConfig& cfg);

std::pair<Eigen::VectorXd, Eigen::MatrixXd> mixture_moments(const Manifold& m);

/// Manifold export/import: kernel metadata plus the structured-text
/// polynomial form.
void write_manifold(std::ostream& os, const Manifold& m);
Manifold read_manifold(std::istream& is);

}  // namespace uprop
