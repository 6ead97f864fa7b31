#include "uprop/plasma.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace uprop {

double NoiseMomentSet::moment(std::span<const int> r) const {
    const int idx = basis->index_of(r);
    if (idx < 0) throw std::out_of_range("NoiseMomentSet::moment: |r| exceeds order");
    return moments[idx];
}

NoiseMomentSet delta_moments(const Eigen::VectorXd& ic, int order, double t0) {
    NoiseMomentSet ms;
    ms.order = order;
    ms.state_dim = static_cast<int>(ic.size());
    ms.basis = MonomialBasis::get(ms.state_dim, order);
    ms.moments.assign(ms.basis->size(), 0.0);
    ms.moments[0] = 1.0;
    ms.central = ic;
    ms.time = t0;
    return ms;
}

double gaussian_increment_moments(std::span<const int> s, double h) {
    double prod = 1.0;
    for (int sj : s) {
        if (sj < 0) throw std::invalid_argument("gaussian_increment_moments: negative exponent");
        if (sj % 2 == 1) return 0.0;
        for (int q = sj - 1; q >= 1; q -= 2) prod *= q;  // (sj-1)!!
        for (int q = 0; q < sj / 2; ++q) prod *= h;
    }
    return prod;
}

namespace {

std::vector<TaylorPoly> noise_identities(int n, int m, int order) {
    std::vector<TaylorPoly> w;
    w.reserve(m);
    for (int j = 0; j < m; ++j) {
        w.push_back(TaylorPoly::variable(n + m, order, n + j, 1.0, 0.0));
    }
    return w;
}

std::vector<TaylorPoly> state_identities(const Eigen::VectorXd& central, int m, int order) {
    const int n = static_cast<int>(central.size());
    std::vector<TaylorPoly> x;
    x.reserve(n);
    for (int i = 0; i < n; ++i) {
        x.push_back(TaylorPoly::variable(n + m, order, i, 1.0, central[i]));
    }
    return x;
}

/// Common tail of a moment update: kappa-rescale the stepped polynomials,
/// extract the effective-noise expansion, and fold its coefficients with the
/// Gaussian increment moments and the previous moments.
NoiseMomentSet finish_step(const std::vector<TaylorPoly>& stepped, const NoiseMomentSet& prev,
                           int noise_dim, double h_k,
                           const std::optional<Eigen::VectorXd>& central_override) {
    const int n = prev.state_dim;
    const int m = noise_dim;
    const int order = prev.order;

    for (const auto& p : stepped) {
        if (!p.all_finite()) {
            throw std::runtime_error("plasma_step: non-finite expansion at t = " +
                                     std::to_string(prev.time + h_k));
        }
    }

    std::vector<double> factors(n + m, 1.0);
    for (int j = 0; j < m; ++j) factors[n + j] = 1.0 / h_k;

    NoiseMomentSet next;
    next.order = order;
    next.state_dim = n;
    next.basis = prev.basis;
    next.moments.assign(prev.moments.size(), 0.0);
    next.central.resize(n);
    next.time = prev.time + h_k;

    std::vector<TaylorPoly> dw;
    dw.reserve(n);
    for (int i = 0; i < n; ++i) {
        TaylorPoly scaled = (m > 0) ? stepped[i].rescale_vars(factors) : stepped[i];
        if (central_override) {
            next.central[i] = (*central_override)[i];
            dw.push_back(std::move(scaled));
        } else {
            next.central[i] = scaled.constant_part();
            dw.push_back(scaled.nilpotent_part());
        }
    }

    // Memoized powers of each effective-noise component up to the order.
    std::vector<std::vector<TaylorPoly>> pw(n);
    for (int i = 0; i < n; ++i) {
        pw[i].reserve(order + 1);
        pw[i].push_back(TaylorPoly::constant(n + m, order, 1.0));
        for (int p = 1; p <= order; ++p) pw[i].push_back(pw[i][p - 1] * dw[i]);
    }

    const MonomialBasis& mb = *prev.basis;
    std::vector<int> rprime(n);
    for (int ridx = 1; ridx < mb.size(); ++ridx) {
        const auto r = mb.exponents(ridx);
        // Product polynomial for this moment target.
        TaylorPoly a;
        bool have = false;
        for (int i = 0; i < n; ++i) {
            if (r[i] == 0) continue;
            a = have ? a * pw[i][r[i]] : pw[i][r[i]];
            have = true;
        }
        // Fold coefficients with E[dW^s] and previous moments E[dWhat^r'].
        double acc = 0.0;
        const auto& da = *a.basis();
        for (int q = 0; q < da.size(); ++q) {
            const double c = a.coeff(q);
            if (c == 0.0) continue;
            const auto e = da.exponents(q);
            const double g = gaussian_increment_moments(e.subspan(n, m), h_k);
            if (g == 0.0) continue;
            for (int v = 0; v < n; ++v) rprime[v] = e[v];
            acc += c * g * prev.moments[mb.index_of(rprime)];
        }
        next.moments[ridx] = acc;
    }
    next.moments[0] = 1.0;
    return next;
}

std::vector<TaylorPoly> integrate_pseudo_ode(const SdeModel& model,
                                             std::vector<TaylorPoly> x,
                                             const std::vector<TaylorPoly>& w, double t,
                                             double h_k, DaScheme scheme, int substeps) {
    auto rhs = [&model, &w](const std::vector<TaylorPoly>& state, double time) {
        std::vector<TaylorPoly> r = model.drift_poly(state, time);
        if (model.noise_dim > 0) {
            const DynMat<TaylorPoly> g = model.diffusion_poly(state, time);
            for (int i = 0; i < g.rows; ++i) {
                for (int j = 0; j < g.cols; ++j) {
                    if (is_zero_element(g(i, j))) continue;
                    r[i] += g(i, j) * w[j];
                }
            }
        }
        return r;
    };
    const double h_sub = h_k / substeps;
    for (int s = 0; s < substeps; ++s) {
        const double ts = t + s * h_sub;
        x = (scheme == DaScheme::euler_maruyama) ? euler_step(rhs, x, ts, h_sub)
                                                 : rk4_step(rhs, x, ts, h_sub);
    }
    return x;
}

}  // namespace

NoiseMomentSet plasma_step_custom(const DaStepFn& step, const NoiseMomentSet& ms, int noise_dim,
                                  double h_k,
                                  const std::optional<Eigen::VectorXd>& central_override) {
    if (!(h_k > 0.0)) throw std::invalid_argument("plasma_step: require h_k > 0");
    if (std::abs(ms.moments[0] - 1.0) > 1e-12) {
        throw std::invalid_argument("plasma_step: moment set not normalized");
    }
    const auto x = state_identities(ms.central, noise_dim, ms.order);
    const auto w = noise_identities(ms.state_dim, noise_dim, ms.order);
    const auto stepped = step(x, w, ms.time, h_k);
    if (static_cast<int>(stepped.size()) != ms.state_dim) {
        throw std::runtime_error("plasma_step: step function returned wrong dimension");
    }
    return finish_step(stepped, ms, noise_dim, h_k, central_override);
}

NoiseMomentSet plasma_step(const SdeModel& model, const NoiseMomentSet& ms, double h_k,
                           DaScheme scheme, int substeps) {
    if (!(h_k > 0.0)) throw std::invalid_argument("plasma_step: require h_k > 0");
    if (substeps < 1) throw std::invalid_argument("plasma_step: require substeps >= 1");
    if (model.state_dim != ms.state_dim) {
        throw std::invalid_argument("plasma_step: model/moment dimension mismatch");
    }
    if (std::abs(ms.moments[0] - 1.0) > 1e-12) {
        throw std::invalid_argument("plasma_step: moment set not normalized");
    }
    const auto x = state_identities(ms.central, model.noise_dim, ms.order);
    const auto w = noise_identities(ms.state_dim, model.noise_dim, ms.order);
    const auto stepped = integrate_pseudo_ode(model, x, w, ms.time, h_k, scheme, substeps);
    return finish_step(stepped, ms, model.noise_dim, h_k, std::nullopt);
}

double state_moment(const NoiseMomentSet& ms, std::span<const int> r) {
    const int idx = ms.basis->index_of(r);
    if (idx < 0) throw std::out_of_range("state_moment: |r| exceeds order");
    const MonomialBasis& mb = *ms.basis;
    const int n = ms.state_dim;
    double acc = 0.0;
    std::vector<int> rp(n);
    // Sum over r' <= r component-wise; iterate the full basis and filter.
    for (int q = 0; q < mb.size(); ++q) {
        const auto e = mb.exponents(q);
        bool ok = true;
        for (int v = 0; v < n; ++v) {
            if (e[v] > r[v]) { ok = false; break; }
        }
        if (!ok) continue;
        double term = binomial(r, e) * ms.moments[q];
        if (term == 0.0) continue;
        for (int v = 0; v < n; ++v) {
            for (int p = 0; p < r[v] - e[v]; ++p) term *= ms.central[v];
        }
        acc += term;
    }
    return acc;
}

Eigen::VectorXd state_mean(const NoiseMomentSet& ms) {
    const int n = ms.state_dim;
    Eigen::VectorXd mu(n);
    std::vector<int> r(n, 0);
    for (int i = 0; i < n; ++i) {
        r.assign(n, 0);
        r[i] = 1;
        mu[i] = state_moment(ms, r);
    }
    return mu;
}

Eigen::MatrixXd state_covariance(const NoiseMomentSet& ms) {
    if (ms.order < 2) throw std::invalid_argument("state_covariance: requires order >= 2");
    const int n = ms.state_dim;
    Eigen::VectorXd first(n);
    std::vector<int> r(n, 0);
    for (int i = 0; i < n; ++i) {
        r.assign(n, 0);
        r[i] = 1;
        first[i] = ms.moment(r);
    }
    Eigen::MatrixXd p(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            r.assign(n, 0);
            r[i] += 1;
            r[j] += 1;
            const double second = ms.moment(r);
            p(i, j) = p(j, i) = second - first[i] * first[j];
        }
    }
    return p;
}

namespace {

PlasmaOutput run_grid(const NoiseMomentSet& initial, double tf, double h, int store_every,
                      const std::function<NoiseMomentSet(const NoiseMomentSet&, double)>& step) {
    if (!(h > 0.0)) throw std::invalid_argument("plasma_run: require h > 0");
    if (tf < initial.time) throw std::invalid_argument("plasma_run: require tf >= t0");
    PlasmaOutput out;
    NoiseMomentSet ms = initial;
    const double span = tf - initial.time;
    if (span <= 1e-15 * std::max(1.0, std::abs(tf))) {
        out.samples.push_back(std::move(ms));
        return out;
    }
    const long nsteps = static_cast<long>(std::ceil(span / h - 1e-9));
    for (long k = 0; k < nsteps; ++k) {
        const double h_k = std::min(h, tf - ms.time);
        ms = step(ms, h_k);
        if (store_every > 0 && (k + 1) % store_every == 0 && k + 1 < nsteps) {
            out.samples.push_back(ms);
        }
    }
    out.samples.push_back(std::move(ms));
    return out;
}

}  // namespace

PlasmaOutput plasma_run(const SdeModel& model, const NoiseMomentSet& initial, double tf,
                        double h, DaScheme scheme, int substeps, int store_every) {
    return run_grid(initial, tf, h, store_every,
                    [&](const NoiseMomentSet& ms, double h_k) {
                        return plasma_step(model, ms, h_k, scheme, substeps);
                    });
}

PlasmaOutput plasma_run(const SdeModel& model, const Eigen::VectorXd& ic, double t0, double tf,
                        double h, int order, DaScheme scheme, int substeps, int store_every) {
    return plasma_run(model, delta_moments(ic, order, t0), tf, h, scheme, substeps, store_every);
}

PlasmaOutput plasma_run_bifidelity(const SdeModel& hf, const OdeModel& lf_drift,
                                   const Eigen::VectorXd& ic, double t0, double tf, double h,
                                   int order, DaScheme scheme, int substeps, int store_every) {
    if (hf.state_dim != lf_drift.state_dim) {
        throw std::invalid_argument("plasma_run_bifidelity: model dimension mismatch");
    }
    const DenseOutput ref = integrate_dense(hf.drift_model(), ic, t0, tf, h);
    const int n = hf.state_dim;
    const int m = hf.noise_dim;

    auto step = [&](const NoiseMomentSet& ms, double h_k) {
        // Relative pseudo-ODE: the nilpotent part of the cheap drift around
        // the stored reference, plus the full diffusion.
        auto rhs = [&](const std::vector<TaylorPoly>& dx, double t) {
            const Eigen::VectorXd xi = ref.eval(t);
            std::vector<TaylorPoly> full = dx;
            for (int i = 0; i < n; ++i) full[i] += xi[i];
            std::vector<TaylorPoly> r = lf_drift.rhs_poly(full, t);
            const std::vector<double> xi_std(xi.data(), xi.data() + n);
            const std::vector<double> u_ref = lf_drift.rhs_real(xi_std, t);
            for (int i = 0; i < n; ++i) r[i] -= u_ref[i];
            if (m > 0) {
                const auto w = noise_identities(n, m, ms.order);
                const DynMat<TaylorPoly> g = hf.diffusion_poly(full, t);
                for (int i = 0; i < g.rows; ++i) {
                    for (int j = 0; j < g.cols; ++j) {
                        if (is_zero_element(g(i, j))) continue;
                        r[i] += g(i, j) * w[j];
                    }
                }
            }
            return r;
        };
        // Relative state starts as the pure identity deviation.
        std::vector<TaylorPoly> dx;
        dx.reserve(n);
        for (int i = 0; i < n; ++i) dx.push_back(TaylorPoly::variable(n + m, ms.order, i));
        const double h_sub = h_k / substeps;
        for (int s = 0; s < substeps; ++s) {
            const double ts = ms.time + s * h_sub;
            dx = (scheme == DaScheme::euler_maruyama) ? euler_step(rhs, dx, ts, h_sub)
                                                      : rk4_step(rhs, dx, ts, h_sub);
        }
        return finish_step(dx, ms, m, h_k,
                           std::optional<Eigen::VectorXd>(ref.eval(ms.time + h_k)));
    };

    NoiseMomentSet initial = delta_moments(ic, order, t0);
    initial.central = ref.eval(t0);
    return run_grid(initial, tf, h, store_every, step);
}

void write_moments(std::ostream& os, const PlasmaOutput& out) {
    os.precision(17);
    for (const auto& ms : out.samples) {
        const MonomialBasis& mb = *ms.basis;
        for (int i = 0; i < ms.state_dim; ++i) {
            os << "# central[" << i << "] = " << ms.central[i] << " at t = " << ms.time << '\n';
        }
        for (int q = 0; q < mb.size(); ++q) {
            os << ms.time;
            for (int e : mb.exponents(q)) os << ' ' << e;
            os << ' ' << ms.moments[q] << '\n';
        }
    }
}

}  // namespace uprop
