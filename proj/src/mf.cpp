#include "uprop/mf.hpp"

#include <stdexcept>

#include "uprop/parallel.hpp"

namespace uprop {

namespace {

/// Shared correction tail: replace constant parts, redo the sigma-point
/// statistics against the matching initial kernel, optionally inflate.
void correct_kernels(const AdaptResult& adapt, const AdaptConfig& cfg,
                     const std::vector<Eigen::VectorXd>& centers,
                     const std::vector<Eigen::MatrixXd>* inflation, MfResult& out) {
    const std::size_t nk = adapt.propagated.kernels.size();
    out.corrected.side = ManifoldSide::propagated;
    out.corrected.kernels.resize(nk);
    for (std::size_t l = 0; l < nk; ++l) {
        const GaussKernel& lf = adapt.propagated.kernels[l];
        const GaussKernel& init = adapt.initial.kernels[l];
        GaussKernel k;
        k.id = lf.id;
        k.weight = lf.weight;
        k.zeta = lf.zeta;
        k.polys.reserve(lf.polys.size());
        for (std::size_t c = 0; c < lf.polys.size(); ++c) {
            k.polys.push_back(lf.polys[c].with_constant(centers[l][c]));
        }
        auto [mu, p] = ut_transform(k.polys, init, cfg.kappa_for(init.mean.size()));
        if (inflation) p += (*inflation)[l];
        k.mean = std::move(mu);
        k.cov = std::move(p);
        out.corrected.kernels[l] = std::move(k);
    }
}

Eigen::VectorXd constant_parts(const std::vector<TaylorPoly>& polys) {
    Eigen::VectorXd c(polys.size());
    for (std::size_t i = 0; i < polys.size(); ++i) c[i] = polys[i].constant_part();
    return c;
}

}  // namespace

MfResult mf_deterministic(const MapFn& lf_map, const FlowFn& hf_prop, const Manifold& initial,
                          const AdaptConfig& cfg, int threads) {
    MfResult out;
    out.adapt = adaptive_propagate(initial, lf_map, cfg);
    const std::size_t nk = out.adapt.propagated.kernels.size();
    std::vector<Eigen::VectorXd> centers(nk);
    out.records.resize(nk);
    parallel_for(static_cast<int>(nk), threads, [&](int l) {
        const GaussKernel& init = out.adapt.initial.kernels[l];
        const GaussKernel& lf = out.adapt.propagated.kernels[l];
        Eigen::VectorXd mu_hf;
        try {
            mu_hf = hf_prop(init.mean);
        } catch (const std::exception& e) {
            throw std::runtime_error("mf_deterministic: pointwise stage failed on kernel " +
                                     std::to_string(init.id) + ": " + e.what());
        }
        MfKernelRecord rec;
        rec.id = init.id;
        rec.mu_lf_t0 = init.mean;
        rec.mu_lf_tf = constant_parts(lf.polys);
        rec.mu_ref_tf = mu_hf;
        rec.p_pn = Eigen::MatrixXd::Zero(mu_hf.size(), mu_hf.size());
        rec.shift_norm = (mu_hf - rec.mu_lf_tf).norm();
        centers[l] = std::move(mu_hf);
        out.records[l] = std::move(rec);
    });
    correct_kernels(out.adapt, cfg, centers, nullptr, out);
    return out;
}

MfResult mf_stochastic(const MapFn& lf_map, const SdeModel& hf_sde, const Manifold& initial,
                       const AdaptConfig& cfg, const PlasmaConfig& pcfg, double t0, double tf,
                       const std::optional<OdeModel>& bifi_lf_drift, int threads) {
    MfResult out;
    out.adapt = adaptive_propagate(initial, lf_map, cfg);
    const std::size_t nk = out.adapt.propagated.kernels.size();
    std::vector<Eigen::VectorXd> centers(nk);
    std::vector<Eigen::MatrixXd> inflation(nk);
    out.records.resize(nk);
    parallel_for(static_cast<int>(nk), threads, [&](int l) {
        const GaussKernel& init = out.adapt.initial.kernels[l];
        const GaussKernel& lf = out.adapt.propagated.kernels[l];
        PlasmaOutput run;
        try {
            run = bifi_lf_drift
                      ? plasma_run_bifidelity(hf_sde, *bifi_lf_drift, init.mean, t0, tf, pcfg.h,
                                              pcfg.order, pcfg.scheme, pcfg.substeps)
                      : plasma_run(hf_sde, init.mean, t0, tf, pcfg.h, pcfg.order, pcfg.scheme,
                                   pcfg.substeps);
        } catch (const std::exception& e) {
            throw std::runtime_error("mf_stochastic: moment stage failed on kernel " +
                                     std::to_string(init.id) + ": " + e.what());
        }
        const NoiseMomentSet& fin = run.final_set();
        MfKernelRecord rec;
        rec.id = init.id;
        rec.mu_lf_t0 = init.mean;
        rec.mu_lf_tf = constant_parts(lf.polys);
        rec.mu_ref_tf = state_mean(fin);
        rec.p_pn = state_covariance(fin);
        rec.shift_norm = (rec.mu_ref_tf - rec.mu_lf_tf).norm();
        centers[l] = rec.mu_ref_tf;
        inflation[l] = rec.p_pn;
        out.records[l] = std::move(rec);
    });
    correct_kernels(out.adapt, cfg, centers, &inflation, out);
    return out;
}

}  // namespace uprop
