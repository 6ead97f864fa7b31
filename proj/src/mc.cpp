#include "uprop/mc.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "uprop/domain.hpp"
#include "uprop/parallel.hpp"

namespace uprop {

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    std::array<std::uint32_t, 4> c = counter;
    std::array<std::uint32_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

double counter_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                      std::uint32_t channel) {
    const std::uint32_t block = channel >> 1;
    const std::array<std::uint32_t, 4> counter{
        static_cast<std::uint32_t>(step),
        static_cast<std::uint32_t>((step >> 32) & 0xFFFFu) | (block << 16),
        static_cast<std::uint32_t>(path),
        static_cast<std::uint32_t>(path >> 32)};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed),
                                           static_cast<std::uint32_t>(seed >> 32)};
    const auto r = philox4x32(counter, key);
    // Two uniforms in (0, 1], two normals via Box-Muller.
    const double u1 = (static_cast<double>(r[0]) + 1.0) * 0x1p-32;
    const double u2 = (static_cast<double>(r[1]) + 1.0) * 0x1p-32;
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    return (channel & 1) ? mag * std::sin(ang) : mag * std::cos(ang);
}

IcSampler IcSampler::fixed(const Eigen::VectorXd& x0) {
    IcSampler s;
    s.mean = x0;
    return s;
}

IcSampler IcSampler::gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    IcSampler s;
    s.mean = mean;
    s.cov = cov;
    require_psd(cov, "IcSampler");
    return s;
}

Eigen::VectorXd IcSampler::draw(std::uint64_t seed, std::uint64_t path) const {
    if (deterministic()) return mean;
    // IC draws live at a reserved step index outside any integration grid.
    constexpr std::uint64_t kIcStep = 1ull << 47;
    const int n = static_cast<int>(mean.size());
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = counter_normal(seed, path, kIcStep, i);
    return mean + psd_sqrt(cov) * z;
}

namespace {

bool finite(const std::vector<double>& x) {
    for (double v : x) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace

SampleSet simulate_paths(const SdeModel& model, const IcSampler& ic, double t0, double tf,
                         const McConfig& cfg) {
    if (cfg.n_paths < 1) throw std::invalid_argument("simulate_paths: n_paths must be >= 1");
    if (!(cfg.step > 0.0) || tf < t0) {
        throw std::invalid_argument("simulate_paths: require step > 0 and tf >= t0");
    }
    const int n = model.state_dim;
    const int m = model.noise_dim;
    const long nsteps =
        static_cast<long>(std::ceil((tf - t0) / cfg.step - 1e-9));

    SampleSet out;
    out.states.resize(cfg.n_paths, n);
    out.valid.assign(cfg.n_paths, 1);
    out.tf = tf;

    parallel_for(cfg.n_paths, cfg.threads, [&](int path) {
        const Eigen::VectorXd x0 = ic.draw(cfg.base_seed, path);
        std::vector<double> x(x0.data(), x0.data() + n);
        std::vector<double> dw(m, 0.0);
        double t = t0;
        bool ok = true;
        for (long k = 0; k < nsteps; ++k) {
            const double h = std::min(cfg.step, tf - t);
            const double sqh = std::sqrt(h);
            for (int j = 0; j < m; ++j) {
                dw[j] = sqh * counter_normal(cfg.base_seed, path, static_cast<std::uint64_t>(k), j);
            }
            if (cfg.scheme == McScheme::euler_maruyama) {
                const std::vector<double> u = model.drift_real(x, t);
                const DynMat<double> g = model.diffusion_real(x, t);
                x = em_step(x, h, u, g, dw);
            } else {
                const DynMat<double> g = model.diffusion_real(x, t);
                x = rk4_step(model.drift_real, x, t, h);
                for (int i = 0; i < g.rows; ++i) {
                    for (int j = 0; j < g.cols; ++j) x[i] += g(i, j) * dw[j];
                }
            }
            t += h;
            if (!finite(x)) {
                ok = false;
                break;
            }
        }
        for (int i = 0; i < n; ++i) {
            out.states(path, i) = ok ? x[i] : std::numeric_limits<double>::quiet_NaN();
        }
        out.valid[path] = ok ? 1 : 0;
    });
    for (char v : out.valid) {
        if (!v) ++out.excluded;
    }
    return out;
}

namespace {

/// Pairwise reduction over valid rows; f maps a row index to a value.
double pairwise_sum(const std::vector<int>& rows, std::size_t lo, std::size_t hi,
                    const std::function<double(int)>& f) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += f(rows[i]);
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(rows, lo, mid, f) + pairwise_sum(rows, mid, hi, f);
}

}  // namespace

MomentTable sample_moments(const SampleSet& samples, int order) {
    std::vector<int> rows;
    rows.reserve(samples.states.rows());
    for (int i = 0; i < samples.states.rows(); ++i) {
        if (samples.valid[i]) rows.push_back(i);
    }
    const int nv = static_cast<int>(rows.size());
    if (nv < 2) throw std::invalid_argument("sample_moments: need at least 2 valid samples");
    const int n = static_cast<int>(samples.states.cols());

    MomentTable table;
    table.mean.resize(n);
    for (int c = 0; c < n; ++c) {
        table.mean[c] = pairwise_sum(rows, 0, rows.size(),
                                     [&](int r) { return samples.states(r, c); }) /
                        nv;
    }
    table.cov.resize(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
            const double s = pairwise_sum(rows, 0, rows.size(), [&](int r) {
                return (samples.states(r, a) - table.mean[a]) *
                       (samples.states(r, b) - table.mean[b]);
            });
            table.cov(a, b) = table.cov(b, a) = s / (nv - 1);
        }
    }
    table.basis = MonomialBasis::get(n, order);
    table.raw.resize(table.basis->size());
    for (int q = 0; q < table.basis->size(); ++q) {
        const auto e = table.basis->exponents(q);
        table.raw[q] = pairwise_sum(rows, 0, rows.size(), [&](int r) {
                           double prod = 1.0;
                           for (int v = 0; v < n; ++v) {
                               for (int p = 0; p < e[v]; ++p) prod *= samples.states(r, v);
                           }
                           return prod;
                       }) /
                       nv;
    }
    return table;
}

void write_samples(std::ostream& os, const SampleSet& samples) {
    os << "path,valid";
    for (int c = 0; c < samples.states.cols(); ++c) os << ",x" << c;
    os << '\n';
    os.precision(17);
    for (int r = 0; r < samples.states.rows(); ++r) {
        os << r << ',' << static_cast<int>(samples.valid[r]);
        for (int c = 0; c < samples.states.cols(); ++c) os << ',' << samples.states(r, c);
        os << '\n';
    }
}

}  // namespace uprop
