#include "uprop/gmm.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>

#include "uprop/nonlinearity.hpp"

namespace uprop {

namespace {

constexpr double kPi = 3.14159265358979323846;

// int N(x; m1, v1) N(x; m2, v2) dx = N(m1 - m2; 0, v1 + v2)
double gauss_overlap(double dmean, double var_sum) {
    return std::exp(-dmean * dmean / (2.0 * var_sum)) / std::sqrt(2.0 * kPi * var_sum);
}

struct SimplexPoint {
    std::array<double, 3> x;  // (w, m, sigma)
    double f;
};

}  // namespace

double Manifold::total_weight() const {
    double s = 0.0;
    for (const auto& k : kernels) s += k.weight;
    return s;
}

double split_library_l2_sq(double w, double m, double sigma) {
    const double w0 = 1.0 - 2.0 * w;
    const double s2 = sigma * sigma;
    const double t_pp = 1.0 / (2.0 * std::sqrt(kPi));
    const double t_pq = 2.0 * w * gauss_overlap(m, 1.0 + s2) + w0 * gauss_overlap(0.0, 1.0 + s2);
    const std::array<double, 3> ws{w, w0, w};
    const std::array<double, 3> mus{-m, 0.0, m};
    double t_qq = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            t_qq += ws[i] * ws[j] * gauss_overlap(mus[i] - mus[j], 2.0 * s2);
        }
    }
    return t_pp - 2.0 * t_pq + t_qq;
}

namespace {

double split_objective(double lambda, const std::array<double, 3>& p) {
    const double w = p[0], m = p[1], s = p[2];
    if (w <= 0.0 || w >= 0.5 || m <= 0.0 || s <= 1e-3 || s >= 1.5) {
        return 1e6 + w * w + m * m + s * s;  // out-of-box penalty, keeps the simplex moving
    }
    return split_library_l2_sq(w, m, s) + lambda * s * s;
}

// Minimal Nelder-Mead on the 3-parameter box.
SimplexPoint nelder_mead(double lambda, std::array<double, 3> start) {
    auto eval = [&](const std::array<double, 3>& x) {
        return SimplexPoint{x, split_objective(lambda, x)};
    };
    std::array<SimplexPoint, 4> simplex;
    simplex[0] = eval(start);
    for (int i = 0; i < 3; ++i) {
        auto x = start;
        x[i] += (x[i] != 0.0 ? 0.05 * x[i] : 0.01);
        simplex[i + 1] = eval(x);
    }
    for (int iter = 0; iter < 2000; ++iter) {
        std::sort(simplex.begin(), simplex.end(),
                  [](const SimplexPoint& a, const SimplexPoint& b) { return a.f < b.f; });
        if (std::abs(simplex[3].f - simplex[0].f) < 1e-16) break;
        std::array<double, 3> centroid{0, 0, 0};
        for (int i = 0; i < 3; ++i) {
            for (int d = 0; d < 3; ++d) centroid[d] += simplex[i].x[d] / 3.0;
        }
        auto blend = [&](double t) {
            std::array<double, 3> x;
            for (int d = 0; d < 3; ++d) x[d] = centroid[d] + t * (centroid[d] - simplex[3].x[d]);
            return x;
        };
        SimplexPoint refl = eval(blend(1.0));
        if (refl.f < simplex[0].f) {
            SimplexPoint expd = eval(blend(2.0));
            simplex[3] = expd.f < refl.f ? expd : refl;
        } else if (refl.f < simplex[2].f) {
            simplex[3] = refl;
        } else {
            SimplexPoint contr = eval(blend(refl.f < simplex[3].f ? 0.5 : -0.5));
            if (contr.f < std::min(refl.f, simplex[3].f)) {
                simplex[3] = contr;
            } else {
                for (int i = 1; i < 4; ++i) {
                    for (int d = 0; d < 3; ++d) {
                        simplex[i].x[d] = 0.5 * (simplex[i].x[d] + simplex[0].x[d]);
                    }
                    simplex[i] = eval(simplex[i].x);
                }
            }
        }
    }
    std::sort(simplex.begin(), simplex.end(),
              [](const SimplexPoint& a, const SimplexPoint& b) { return a.f < b.f; });
    return simplex[0];
}

}  // namespace

SplitLibrary3 build_split_library(double lambda_penalty) {
    if (lambda_penalty < 0.0) {
        throw std::invalid_argument("build_split_library: negative penalty");
    }
    static std::mutex mtx;
    static std::map<double, SplitLibrary3> cache;
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(lambda_penalty);
        if (it != cache.end()) return it->second;
    }
    SimplexPoint best{{0, 0, 0}, std::numeric_limits<double>::infinity()};
    for (double w : {0.1, 0.2, 0.3, 0.4}) {
        for (double m : {0.4, 0.8, 1.1, 1.5}) {
            for (double s : {0.4, 0.6, 0.8, 0.95}) {
                SimplexPoint cand = nelder_mead(lambda_penalty, {w, m, s});
                if (cand.f < best.f) best = cand;
            }
        }
    }
    SplitLibrary3 lib;
    lib.weight_side = best.x[0];
    lib.weight_center = 1.0 - 2.0 * best.x[0];
    lib.offset = best.x[1];
    lib.sigma = best.x[2];
    lib.lambda_penalty = lambda_penalty;
    lib.l2_distance_sq = split_library_l2_sq(best.x[0], best.x[1], best.x[2]);
    if (!(lib.weight_side > 0.0) || !(lib.weight_center > 0.0) || !(lib.sigma > 0.0) ||
        !std::isfinite(lib.l2_distance_sq)) {
        throw std::runtime_error("build_split_library: optimizer failed, residual " +
                                 std::to_string(best.f));
    }
    std::lock_guard<std::mutex> lock(mtx);
    cache.emplace(lambda_penalty, lib);
    return lib;
}

std::array<GaussKernel, 3> split_kernel(const GaussKernel& k, const Eigen::VectorXd& direction,
                                        const SplitLibrary3& lib) {
    const int n = static_cast<int>(k.mean.size());
    if (direction.size() != n) {
        throw std::invalid_argument("split_kernel: direction dimension mismatch");
    }
    if (std::abs(direction.norm() - 1.0) > 1e-8) {
        throw std::invalid_argument("split_kernel: direction must be a unit vector");
    }
    require_psd(k.cov, "split_kernel");
    const Eigen::VectorXd a = psd_sqrt(k.cov) * direction;
    const Eigen::MatrixXd child_cov =
        k.cov + (lib.sigma * lib.sigma - 1.0) * (a * a.transpose());
    std::array<GaussKernel, 3> out;
    const std::array<double, 3> offs{-lib.offset, 0.0, lib.offset};
    const std::array<double, 3> ws{lib.weight_side, lib.weight_center, lib.weight_side};
    for (int c = 0; c < 3; ++c) {
        out[c].id = k.id * 4 + 1 + c;
        out[c].weight = k.weight * ws[c];
        out[c].mean = k.mean + offs[c] * a;
        out[c].cov = child_cov;
        out[c].zeta = k.zeta;
    }
    return out;
}

double default_ut_kappa(int n) {
    const double kappa = 3.0 - n;
    return (n + kappa > 0.0) ? kappa : 0.0;
}

double AdaptConfig::kappa_for(int n) const {
    if (std::isnan(ut_kappa)) return default_ut_kappa(n);
    return (n + ut_kappa > 0.0) ? ut_kappa : 0.0;
}

SigmaPoints ut_sigma(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, double kappa) {
    const int n = static_cast<int>(mean.size());
    if (!(n + kappa > 0.0)) throw std::invalid_argument("ut_sigma: require n + kappa > 0");
    require_psd(cov, "ut_sigma");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("ut_sigma: eigendecomposition failed");
    }
    const Eigen::MatrixXd s =
        es.eigenvectors() * ((n + kappa) * es.eigenvalues().cwiseMax(0.0)).cwiseSqrt().asDiagonal();
    SigmaPoints sp;
    sp.points.resize(n, 2 * n + 1);
    sp.weights.resize(2 * n + 1);
    sp.points.col(0) = mean;
    sp.weights[0] = kappa / (n + kappa);
    for (int d = 0; d < n; ++d) {
        sp.points.col(1 + 2 * d) = mean + s.col(d);
        sp.points.col(2 + 2 * d) = mean - s.col(d);
        sp.weights[1 + 2 * d] = sp.weights[2 + 2 * d] = 0.5 / (n + kappa);
    }
    return sp;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> ut_transform(const std::vector<TaylorPoly>& polys,
                                                         const GaussKernel& kernel,
                                                         double kappa) {
    if (polys.empty()) throw std::invalid_argument("ut_transform: empty polynomial vector");
    const int n = polys[0].nvars();
    if (kernel.mean.size() != n) {
        throw std::invalid_argument("ut_transform: kernel/polynomial dimension mismatch");
    }
    // The kernel's Gaussian in normalized deviation coordinates is
    // N(0, I / zeta^2); sigma points are axis-aligned there.
    const int m = static_cast<int>(polys.size());
    const int npts = 2 * n + 1;
    const double w0 = kappa / (n + kappa);
    const double wi = 0.5 / (n + kappa);
    const double step = std::sqrt(n + kappa) / kernel.zeta;

    Eigen::MatrixXd values(m, npts);
    std::vector<double> pt(n, 0.0);
    for (int c = 0; c < m; ++c) values(c, 0) = polys[c].eval(pt);
    for (int d = 0; d < n; ++d) {
        pt.assign(n, 0.0);
        pt[d] = step;
        for (int c = 0; c < m; ++c) values(c, 1 + 2 * d) = polys[c].eval(pt);
        pt[d] = -step;
        for (int c = 0; c < m; ++c) values(c, 2 + 2 * d) = polys[c].eval(pt);
    }
    Eigen::VectorXd wts(npts);
    wts[0] = w0;
    for (int i = 1; i < npts; ++i) wts[i] = wi;
    const Eigen::VectorXd mean = values * wts;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < npts; ++i) {
        const Eigen::VectorXd d = values.col(i) - mean;
        cov.noalias() += wts[i] * (d * d.transpose());
    }
    return {mean, 0.5 * (cov + cov.transpose())};
}

AdaptResult adaptive_propagate(const Manifold& initial, const MapFn& map_fn,
                               const AdaptConfig& cfg) {
    const double wsum = initial.total_weight();
    if (std::abs(wsum - 1.0) > 1e-9) {
        throw std::invalid_argument("adaptive_propagate: initial weights must sum to 1");
    }
    const SplitLibrary3 lib = build_split_library(cfg.split_lambda);

    struct WorkItem {
        GaussKernel kernel;
        int depth = 0;
    };
    std::deque<WorkItem> queue;
    for (std::size_t i = 0; i < initial.kernels.size(); ++i) {
        WorkItem item{initial.kernels[i], 0};
        if (item.kernel.id == 0) item.kernel.id = i + 1;
        item.kernel.zeta = cfg.zeta;
        queue.push_back(std::move(item));
    }

    AdaptResult res;
    res.initial.side = ManifoldSide::initial;
    res.propagated.side = ManifoldSide::propagated;

    while (!queue.empty()) {
        WorkItem item = std::move(queue.front());
        queue.pop_front();
        GaussKernel& k = item.kernel;

        const UncertaintyDomain dom = UncertaintyDomain::from_moments(k.mean, k.cov, cfg.zeta);
        const std::vector<TaylorPoly> xpolys = dom.to_polys(cfg.order);
        std::vector<TaylorPoly> ypolys;
        try {
            ypolys = map_fn(xpolys);
        } catch (const std::exception& e) {
            throw std::runtime_error("adaptive_propagate: map failed on kernel " +
                                     std::to_string(k.id) + ": " + e.what());
        }
        const NliBreakdown nl = nli_full(ypolys, dom.scale);

        const bool accept = nl.nu <= cfg.eps_nu || item.depth >= cfg.n_max ||
                            k.weight < cfg.alpha_min;
        if (accept) {
            res.diags.push_back({k.id, nl.nu, item.depth});

            GaussKernel init_k = k;
            init_k.polys = xpolys;
            res.initial.kernels.push_back(std::move(init_k));

            GaussKernel prop_k;
            prop_k.id = k.id;
            prop_k.weight = k.weight;
            prop_k.zeta = cfg.zeta;
            auto [mu_y, p_y] = ut_transform(ypolys, k, cfg.kappa_for(dom.dim()));
            prop_k.mean = std::move(mu_y);
            prop_k.cov = std::move(p_y);
            prop_k.polys = std::move(ypolys);
            res.propagated.kernels.push_back(std::move(prop_k));
            continue;
        }

        int pstar = 0;
        nl.direction_scores.maxCoeff(&pstar);
        auto children = split_kernel(k, dom.eigvecs.col(pstar), lib);
        ++res.splits;
        for (auto& child : children) {
            queue.push_back({std::move(child), item.depth + 1});
        }
    }

    auto by_id = [](const GaussKernel& a, const GaussKernel& b) { return a.id < b.id; };
    std::sort(res.initial.kernels.begin(), res.initial.kernels.end(), by_id);
    std::sort(res.propagated.kernels.begin(), res.propagated.kernels.end(), by_id);
    std::sort(res.diags.begin(), res.diags.end(),
              [](const KernelDiag& a, const KernelDiag& b) { return a.id < b.id; });
    return res;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> mixture_moments(const Manifold& m) {
    if (m.kernels.empty()) throw std::invalid_argument("mixture_moments: empty mixture");
    const int n = static_cast<int>(m.kernels[0].mean.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (const auto& k : m.kernels) mean += k.weight * k.mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (const auto& k : m.kernels) {
        const Eigen::VectorXd d = k.mean - mean;
        cov += k.weight * (k.cov + d * d.transpose());
    }
    return {mean, cov};
}

void write_manifold(std::ostream& os, const Manifold& m) {
    os << "manifold " << (m.side == ManifoldSide::initial ? "initial" : "propagated") << ' '
       << m.kernels.size() << '\n';
    os.precision(17);
    for (const auto& k : m.kernels) {
        const int n = static_cast<int>(k.mean.size());
        os << "kernel " << k.id << ' ' << k.weight << ' ' << k.zeta << ' ' << n << ' '
           << k.polys.size() << '\n';
        for (int i = 0; i < n; ++i) os << k.mean[i] << (i + 1 == n ? '\n' : ' ');
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) os << k.cov(i, j) << (j + 1 == n ? '\n' : ' ');
        }
        for (const auto& p : k.polys) p.write(os);
    }
}

Manifold read_manifold(std::istream& is) {
    std::string tag, side;
    std::size_t nk = 0;
    if (!(is >> tag >> side >> nk) || tag != "manifold") {
        throw std::runtime_error("read_manifold: bad header");
    }
    Manifold m;
    m.side = side == "initial" ? ManifoldSide::initial : ManifoldSide::propagated;
    m.kernels.resize(nk);
    for (auto& k : m.kernels) {
        int n = 0;
        std::size_t npolys = 0;
        if (!(is >> tag >> k.id >> k.weight >> k.zeta >> n >> npolys) || tag != "kernel") {
            throw std::runtime_error("read_manifold: bad kernel header");
        }
        k.mean.resize(n);
        for (int i = 0; i < n; ++i) is >> k.mean[i];
        k.cov.resize(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) is >> k.cov(i, j);
        }
        if (!is) throw std::runtime_error("read_manifold: truncated kernel");
        k.polys.reserve(npolys);
        for (std::size_t p = 0; p < npolys; ++p) k.polys.push_back(TaylorPoly::read(is));
    }
    return m;
}

}  // namespace uprop
