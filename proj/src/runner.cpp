#include "uprop/runner.hpp"

#include <Eigen/LU>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "uprop/dynamics.hpp"
#include "uprop/gmm.hpp"
#include "uprop/mc.hpp"
#include "uprop/metrics.hpp"
#include "uprop/mf.hpp"
#include "uprop/plasma.hpp"

namespace uprop {

using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr double kDeg = M_PI / 180.0;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

double stage_seconds(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- schema helpers ---------------------------------------------------------

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path, msg);
}

const json& need(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.is_object() || !obj.contains(key)) fail(path + "." + key, "missing required field");
    return obj.at(key);
}

double need_num(const json& obj, const std::string& path, const std::string& key) {
    const json& v = need(obj, path, key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

double opt_num(const json& obj, const std::string& path, const std::string& key, double dflt) {
    if (!obj.is_object() || !obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

std::string need_str(const json& obj, const std::string& path, const std::string& key) {
    const json& v = need(obj, path, key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::string opt_str(const json& obj, const std::string& key, const std::string& dflt) {
    if (!obj.is_object() || !obj.contains(key)) return dflt;
    return obj.at(key).get<std::string>();
}

std::vector<double> num_array(const json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) fail(path, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

DaScheme parse_da_scheme(const std::string& s, const std::string& path) {
    if (s == "euler_maruyama") return DaScheme::euler_maruyama;
    if (s == "rk4") return DaScheme::rk4;
    fail(path, "unknown scheme '" + s + "' (euler_maruyama | rk4)");
}

McScheme parse_mc_scheme(const std::string& s, const std::string& path) {
    if (s == "euler_maruyama") return McScheme::euler_maruyama;
    if (s == "rk4_additive_noise") return McScheme::rk4_additive_noise;
    fail(path, "unknown scheme '" + s + "' (euler_maruyama | rk4_additive_noise)");
}

// --- model construction -----------------------------------------------------

struct BuiltModel {
    std::string id;
    int state_dim = 0;
    bool has_sde = false;
    SdeModel sde;
    OdeModel ode;
    double mu = 0.0;               // gravitational parameter when orbital
    DuffingParams duffing;         // valid when id == "duffing"
};

BuiltModel build_model(const json& m, const std::string& path) {
    BuiltModel out;
    out.id = need_str(m, path, "id");
    if (out.id == "duffing") {
        out.duffing.a = opt_num(m, path, "a", 2.75);
        out.duffing.b = opt_num(m, path, "b", 0.2);
        out.duffing.sigma = opt_num(m, path, "sigma", 0.1);
        out.state_dim = 2;
        return out;
    }
    if (out.id == "ou") {
        const double rate = opt_num(m, path, "rate", 1.0);
        const double sigma = opt_num(m, path, "sigma", 0.5);
        out.state_dim = 1;
        out.has_sde = true;
        out.sde = make_sde_model(
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
        out.ode = out.sde.drift_model();
        return out;
    }
    if (out.id == "kepler_planar_sde") {
        KeplerSdeParams p;
        p.mu = opt_num(m, path, "mu_km3_s2", 3.986e5);
        p.sigma_w = opt_num(m, path, "sigma_w_km2_s2p5", 2e-4);
        out.state_dim = 4;
        out.has_sde = true;
        out.mu = p.mu;
        out.sde = kepler_planar_sde(p);
        out.ode = kepler_planar_ode(p);
        return out;
    }
    if (out.id == "thrust_sde" || out.id == "twobody") {
        ThrustSdeParams p;
        p.mu = opt_num(m, path, "mu_km3_s2", 3.986004418e5);
        p.re = opt_num(m, path, "re_km", 6378.137);
        p.j2 = opt_num(m, path, "j2", 1.0826269e-3);
        if (out.id == "twobody") {
            p.include_j2 = false;
            p.a_thrust = 0.0;
            p.sigma_at = p.sigma_alpha = p.sigma_beta = 0.0;
        } else {
            p.include_j2 = !m.contains("include_j2") || m.at("include_j2").get<bool>();
            p.a_thrust = opt_num(m, path, "a_t_m_s2", 1e-4) * 1e-3;        // m -> km
            p.sigma_at = opt_num(m, path, "sigma_at_m_s1p5", 5e-6) * 1e-3;  // m -> km
            p.sigma_alpha = opt_num(m, path, "sigma_alpha_deg_sqrt_s", 5.0) * kDeg;
            p.sigma_beta = opt_num(m, path, "sigma_beta_deg_sqrt_s", 5.0) * kDeg;
        }
        out.state_dim = 6;
        out.has_sde = out.id == "thrust_sde";
        out.mu = p.mu;
        if (out.has_sde) out.sde = thrust_sde(p);
        out.ode = thrust_drift_model(p);
        return out;
    }
    fail(path + ".id", "unknown model '" + out.id + "'");
}

// --- initial state ----------------------------------------------------------

struct InitialState {
    bool gaussian = false;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

InitialState build_initial(const json& ic, const BuiltModel& model, const std::string& path) {
    InitialState out;
    const std::string kind = opt_str(ic, "kind", "deterministic");
    if (kind != "deterministic" && kind != "gaussian") {
        fail(path + ".kind", "expected deterministic | gaussian");
    }
    out.gaussian = kind == "gaussian";
    const std::string state_kind = opt_str(ic, "state_kind", "cartesian");
    if (state_kind == "cartesian") {
        const auto v = num_array(need(ic, path, "mean"), path + ".mean");
        if (static_cast<int>(v.size()) != model.state_dim) {
            fail(path + ".mean", "expected " + std::to_string(model.state_dim) + " components");
        }
        out.mean = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    } else if (state_kind == "keplerian_deg") {
        auto v = num_array(need(ic, path, "mean"), path + ".mean");
        if (v.size() != 6) fail(path + ".mean", "expected [a_km, e, i, raan, argp, nu] (deg)");
        for (int i = 2; i < 6; ++i) v[i] *= kDeg;
        if (model.mu <= 0.0) fail(path, "keplerian input needs an orbital model");
        const auto cart = keplerian_to_cartesian(v, model.mu);
        out.mean = Eigen::Map<const Eigen::VectorXd>(cart.data(), cart.size());
    } else if (state_kind == "circular_periapsis") {
        if (model.state_dim != 4) fail(path, "circular_periapsis is for the planar model");
        const double re = need_num(ic, path, "re_km");
        const double h0 = need_num(ic, path, "h0_km");
        out.mean = kepler_circular_ic(model.mu, re, h0);
    } else {
        fail(path + ".state_kind", "expected cartesian | keplerian_deg | circular_periapsis");
    }
    if (out.gaussian) {
        const auto d = num_array(need(ic, path, "cov_diag"), path + ".cov_diag");
        if (static_cast<int>(d.size()) != model.state_dim) {
            fail(path + ".cov_diag", "expected " + std::to_string(model.state_dim) + " entries");
        }
        out.cov = Eigen::Map<const Eigen::VectorXd>(d.data(), d.size()).asDiagonal();
    }
    return out;
}

// --- artifact writers -------------------------------------------------------

void write_vector_csv(const std::filesystem::path& file, const Eigen::VectorXd& v,
                      const std::string& what) {
    std::ofstream os(file);
    os.precision(17);
    os << "component," << what << '\n';
    for (int i = 0; i < v.size(); ++i) os << i << ',' << v[i] << '\n';
}

void write_matrix_csv(const std::filesystem::path& file, const Eigen::MatrixXd& m) {
    std::ofstream os(file);
    os.precision(17);
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) os << m(i, j) << (j + 1 == m.cols() ? '\n' : ',');
    }
}

void write_mixture_csv(const std::filesystem::path& file, const Manifold& m) {
    std::ofstream os(file);
    os.precision(17);
    const int n = m.kernels.empty() ? 0 : static_cast<int>(m.kernels[0].mean.size());
    os << "kernel,weight";
    for (int i = 0; i < n; ++i) os << ",mean" << i;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) os << ",cov" << i << j;
    }
    os << '\n';
    for (const auto& k : m.kernels) {
        os << k.id << ',' << k.weight;
        for (int i = 0; i < n; ++i) os << ',' << k.mean[i];
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) os << ',' << k.cov(i, j);
        }
        os << '\n';
    }
}

void write_metrics_csv(const std::filesystem::path& file,
                       const std::vector<std::pair<std::string, double>>& rows) {
    std::ofstream os(file);
    os.precision(17);
    os << "metric,value\n";
    for (const auto& [k, v] : rows) os << k << ',' << v << '\n';
}

// Pericenter radius of the orbit through a Cartesian state (planar 4-D or
// full 6-D), used as the nondimensional length unit of the sample RMSE.
double pericenter_radius(const Eigen::VectorXd& state, double mu) {
    if (state.size() == 6) {
        const std::vector<double> cart(state.data(), state.data() + 6);
        const auto kep = cartesian_to_keplerian(cart, mu);
        return kep[0] * (1.0 - kep[1]);
    }
    const double r = std::hypot(state[0], state[1]);
    const double v2 = state[2] * state[2] + state[3] * state[3];
    const double hmom = state[0] * state[3] - state[1] * state[2];
    const double a = 1.0 / (2.0 / r - v2 / mu);
    const double e2 = std::max(0.0, 1.0 - hmom * hmom / (mu * a));
    return a * (1.0 - std::sqrt(e2));
}

// Nondimensional average RMSE between the manifold's polynomial predictions
// and the matched-path terminal samples. Each sampled initial condition is
// attributed to the refined kernel with the highest Gaussian log-density and
// evaluated through that kernel's image polynomials.
double manifold_sample_rmse(const Manifold& initial, const Manifold& propagated,
                            const IcSampler& sampler, const SampleSet& samples,
                            std::uint64_t seed, double mu) {
    const int n = static_cast<int>(samples.states.cols());
    std::vector<UncertaintyDomain> domains;
    std::vector<Eigen::MatrixXd> info;  // inverse covariances for the density
    std::vector<double> logdet;
    domains.reserve(initial.kernels.size());
    for (const auto& k : initial.kernels) {
        domains.push_back(UncertaintyDomain::from_moments(k.mean, k.cov, k.zeta));
        const Eigen::MatrixXd inv = k.cov.inverse();
        info.push_back(inv);
        logdet.push_back(std::log(std::max(1e-300, k.cov.determinant())));
    }
    std::vector<int> rows;
    for (int p = 0; p < samples.states.rows(); ++p) {
        if (samples.valid[p]) rows.push_back(p);
    }
    Eigen::MatrixXd predicted(rows.size(), n);
    Eigen::MatrixXd actual(rows.size(), n);
    for (std::size_t idx = 0; idx < rows.size(); ++idx) {
        const int p = rows[idx];
        const Eigen::VectorXd x0 = sampler.draw(seed, p);
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < initial.kernels.size(); ++l) {
            const Eigen::VectorXd d = x0 - initial.kernels[l].mean;
            const double score = std::log(initial.kernels[l].weight) -
                                 0.5 * d.dot(info[l] * d) - 0.5 * logdet[l];
            if (score > best_score) {
                best_score = score;
                best = static_cast<int>(l);
            }
        }
        // Normalized deviation coordinates of the sampled initial condition.
        const UncertaintyDomain& dom = domains[best];
        Eigen::VectorXd dx = dom.eigvecs.transpose() * (x0 - dom.mean);
        for (int d = 0; d < n; ++d) dx[d] = dom.scale[d] > 0.0 ? dx[d] / dom.scale[d] : 0.0;
        const std::vector<double> pt(dx.data(), dx.data() + n);
        for (int c = 0; c < n; ++c) {
            predicted(idx, c) = propagated.kernels[best].polys[c].eval(pt);
            actual(idx, c) = samples.states(p, c);
        }
    }
    const double r_p = pericenter_radius(initial.kernels[0].mean, mu);
    const auto scales = cartesian_units(r_p, mu, n / 2, n / 2);
    return metric_rmse(predicted, actual, scales);
}

// Mean/covariance push-through from Cartesian to equinoctial elements via
// sigma points (real evaluations).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> moments_to_mee(const Eigen::VectorXd& mean,
                                                           const Eigen::MatrixXd& cov,
                                                           double mu) {
    const SigmaPoints sp = ut_sigma(mean, cov, default_ut_kappa(static_cast<int>(mean.size())));
    const int npts = static_cast<int>(sp.weights.size());
    Eigen::MatrixXd vals(6, npts);
    for (int i = 0; i < npts; ++i) {
        const Eigen::VectorXd& c = sp.points.col(i);
        const std::vector<double> cart(c.data(), c.data() + c.size());
        const auto mee = cartesian_to_mee(cart, mu, FastAngle::mean_longitude);
        for (int j = 0; j < 6; ++j) vals(j, i) = mee[j];
    }
    // Keep the longitude branch consistent across points.
    const double l0 = vals(5, 0);
    for (int i = 0; i < npts; ++i) {
        double l = vals(5, i);
        while (l - l0 > M_PI) l -= 2.0 * M_PI;
        while (l - l0 < -M_PI) l += 2.0 * M_PI;
        vals(5, i) = l;
    }
    const Eigen::VectorXd mee_mean = vals * sp.weights;
    Eigen::MatrixXd mee_cov = Eigen::MatrixXd::Zero(6, 6);
    for (int i = 0; i < npts; ++i) {
        const Eigen::VectorXd d = vals.col(i) - mee_mean;
        mee_cov.noalias() += sp.weights[i] * (d * d.transpose());
    }
    return {mee_mean, 0.5 * (mee_cov + mee_cov.transpose())};
}

}  // namespace

// --- config -----------------------------------------------------------------


json parse_config(const std::string& text) {
    json raw = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    validate_config(raw);
    // Canonical form: defaults made explicit.
    json cfg = raw;
    cfg["schema_version"] = 1;
    if (!cfg.contains("threads")) cfg["threads"] = 1;
    if (!cfg.contains("output")) cfg["output"] = json::object();
    if (!cfg["output"].contains("dir")) cfg["output"]["dir"] = "out/" + cfg["name"].get<std::string>();
    auto fill = [&cfg](const char* block, const char* key, const json& v) {
        if (cfg.contains(block) && !cfg[block].contains(key)) cfg[block][key] = v;
    };
    fill("plasma", "order", 2);
    fill("plasma", "scheme", "rk4");
    fill("plasma", "substeps", 1);
    fill("plasma", "store_every", 0);
    fill("gmm", "eps_nu", 0.02);
    fill("gmm", "zeta", 3.0);
    fill("gmm", "n_max", 20);
    fill("gmm", "alpha_min", 1e-6);
    fill("gmm", "split_lambda", 1e-3);
    fill("gmm", "order", 2);
    fill("gmm", "scheme", "rk4");
    fill("mc", "scheme", "euler_maruyama");
    fill("mc", "seed", 0);
    return cfg;
}

std::string serialize_config(const json& config) { return config.dump(2); }

void validate_config(const json& cfg) {
    if (!cfg.is_object()) fail("$", "config must be a JSON object");
    if (cfg.contains("schema_version") && cfg["schema_version"].get<int>() != 1) {
        fail("schema_version", "unsupported schema version");
    }
    const std::string name = need_str(cfg, "$", "name");
    (void)name;
    const std::string method = need_str(cfg, "$", "method");
    const BuiltModel model = build_model(need(cfg, "$", "model"), "model");

    const json& time = need(cfg, "$", "time");
    const double t0 = need_num(time, "time", "t0_s");
    const double tf = need_num(time, "time", "tf_s");
    if (!(tf > t0)) fail("time.tf_s", "final time must exceed t0_s");

    const InitialState ic = build_initial(need(cfg, "$", "initial"), model, "initial");

    auto need_block = [&](const char* key) -> const json& { return need(cfg, "$", key); };
    auto require_sde = [&](const BuiltModel& m, const std::string& path) {
        if (!m.has_sde && m.id != "duffing") fail(path, "method needs a stochastic model");
    };

    if (method == "plasma") {
        require_sde(model, "model");
        const json& pl = need_block("plasma");
        if (model.id != "duffing" && !(need_num(pl, "plasma", "step_s") > 0.0)) {
            fail("plasma.step_s", "step must be positive");
        }
        if (ic.gaussian) fail("initial.kind", "plasma runs from a deterministic initial state");
        parse_da_scheme(opt_str(pl, "scheme", "rk4"), "plasma.scheme");
    } else if (method == "plasma_bifidelity") {
        require_sde(model, "model");
        const json& pl = need_block("plasma");
        (void)need_num(pl, "plasma", "step_s");
        build_model(need_block("bifidelity_lf_model"), "bifidelity_lf_model");
        if (ic.gaussian) fail("initial.kind", "plasma runs from a deterministic initial state");
    } else if (method == "gmm_adaptive") {
        if (!ic.gaussian) fail("initial.kind", "gmm_adaptive needs a gaussian initial state");
        const json& g = need_block("gmm");
        (void)need_num(g, "gmm", "step_s");
    } else if (method == "mf_deterministic") {
        if (!ic.gaussian) fail("initial.kind", "mf methods need a gaussian initial state");
        build_model(need_block("lf_model"), "lf_model");
        build_model(need_block("hf_model"), "hf_model");
        (void)need_num(need_block("gmm"), "gmm", "step_s");
        (void)need_num(need_block("hf"), "hf", "step_s");
    } else if (method == "mf_stochastic") {
        if (!ic.gaussian) fail("initial.kind", "mf methods need a gaussian initial state");
        build_model(need_block("lf_model"), "lf_model");
        const BuiltModel hf = build_model(need_block("hf_model"), "hf_model");
        require_sde(hf, "hf_model");
        (void)need_num(need_block("gmm"), "gmm", "step_s");
        (void)need_num(need_block("plasma"), "plasma", "step_s");
        if (cfg.contains("bifidelity_lf_model")) {
            build_model(cfg["bifidelity_lf_model"], "bifidelity_lf_model");
        }
    } else if (method == "mc") {
        require_sde(model, "model");
        const json& mc = need_block("mc");
        if (need_num(mc, "mc", "n_paths") < 1) fail("mc.n_paths", "need at least one path");
        (void)need_num(mc, "mc", "step_s");
        parse_mc_scheme(opt_str(mc, "scheme", "euler_maruyama"), "mc.scheme");
    } else {
        fail("method",
             "unknown method '" + method +
                 "' (plasma | plasma_bifidelity | gmm_adaptive | mf_deterministic | "
                 "mf_stochastic | mc)");
    }
    if (cfg.contains("mc") && method != "mc") {
        const json& mc = cfg["mc"];
        if (need_num(mc, "mc", "n_paths") < 1) fail("mc.n_paths", "need at least one path");
        (void)need_num(mc, "mc", "step_s");
    }
}


json load_config(const std::string& path_or_name) {
    std::ifstream f(path_or_name);
    if (f) {
        std::stringstream ss;
        ss << f.rdbuf();
        return parse_config(ss.str());
    }
    const auto& presets = bundled_scenarios();
    auto it = presets.find(path_or_name);
    if (it == presets.end()) {
        throw ConfigError("$", "no such file or bundled scenario: " + path_or_name);
    }
    return parse_config(it->second);
}

// --- execution --------------------------------------------------------------

namespace {

struct RunContext {
    json cfg;
    std::filesystem::path out;
    int threads = 1;
    std::uint64_t seed = 0;
    RunSummary* summary = nullptr;
    json manifest_times = json::object();

    void note(const std::string& line) const { summary->lines.push_back(line); }
    void artifact(const std::string& name) const { summary->artifacts.push_back(name); }
    std::filesystem::path file(const std::string& name) const {
        summary->artifacts.push_back(name);
        return out / name;
    }
};

PlasmaConfig plasma_config_of(const json& pl) {
    PlasmaConfig pc;
    pc.h = pl.value("step_s", 1.0);
    pc.order = pl.value("order", 2);
    pc.scheme = parse_da_scheme(pl.value("scheme", std::string("rk4")), "plasma.scheme");
    pc.substeps = pl.value("substeps", 1);
    return pc;
}

McConfig mc_config_of(const json& mc, const RunContext& ctx) {
    McConfig c;
    c.n_paths = static_cast<int>(mc.value("n_paths", 1000));
    c.base_seed = ctx.seed;
    c.step = mc.value("step_s", 1.0);
    c.scheme = parse_mc_scheme(mc.value("scheme", std::string("euler_maruyama")), "mc.scheme");
    c.threads = ctx.threads;
    return c;
}

MapFn gmm_map_of(const OdeModel& ode, double t0, double tf, const json& g) {
    const double h = g.value("step_s", 60.0);
    const bool rk4 = g.value("scheme", std::string("rk4")) == "rk4";
    return [ode, t0, tf, h, rk4](const std::vector<TaylorPoly>& x) {
        return propagate_polys(ode, x, t0, tf, h, rk4);
    };
}

AdaptConfig adapt_config_of(const json& g) {
    AdaptConfig cfg;
    cfg.eps_nu = g.value("eps_nu", 0.02);
    cfg.n_max = static_cast<int>(g.value("n_max", 20));
    cfg.alpha_min = g.value("alpha_min", 1e-6);
    cfg.zeta = g.value("zeta", 3.0);
    cfg.order = static_cast<int>(g.value("order", 2));
    cfg.split_lambda = g.value("split_lambda", 1e-3);
    return cfg;
}

void report_against_reference(RunContext& ctx, const Eigen::VectorXd& mean,
                              const std::string& frame_used) {
    if (!ctx.cfg.contains("reference")) return;
    const json& ref = ctx.cfg["reference"];
    const auto ref_mean = num_array(ref.at("mean"), "reference.mean");
    const double tol = ref.value("tol_mean_rel", 0.01);
    const std::string frame = ref.value("frame", std::string("cartesian"));
    if (frame != frame_used) return;
    bool pass = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < ref_mean.size() && i < static_cast<std::size_t>(mean.size());
         ++i) {
        const double err = std::abs((mean[static_cast<int>(i)] - ref_mean[i]) / ref_mean[i]);
        worst = std::max(worst, err);
        if (err > tol) pass = false;
    }
    std::ostringstream os;
    os << (pass ? "PASS" : "FAIL") << " reference mean check (" << frame
       << "): max relative difference " << worst << " vs tolerance " << tol;
    ctx.note(os.str());
    if (!pass) ctx.summary->checks_passed = false;
}

void run_plasma_method(RunContext& ctx, const BuiltModel& model, const InitialState& ic,
                       double t0, double tf) {
    const json& pl = ctx.cfg["plasma"];
    const auto t_start = std::chrono::steady_clock::now();
    PlasmaOutput out;
    if (model.id == "duffing") {
        // Discrete map: one update per unit time.
        const int steps = static_cast<int>(std::lround(tf - t0));
        NoiseMomentSet ms = delta_moments(ic.mean, pl.value("order", 2), t0);
        const DaStepFn stepper = duffing_map_stepper(model.duffing);
        for (int k = 0; k < steps; ++k) ms = plasma_step_custom(stepper, ms, 1, 1.0);
        out.samples.push_back(std::move(ms));
    } else if (ctx.cfg["method"] == "plasma_bifidelity") {
        const BuiltModel lf = build_model(ctx.cfg["bifidelity_lf_model"], "bifidelity_lf_model");
        const PlasmaConfig pc = plasma_config_of(pl);
        out = plasma_run_bifidelity(model.sde, lf.ode, ic.mean, t0, tf, pc.h, pc.order, pc.scheme,
                                    pc.substeps, pl.value("store_every", 0));
    } else {
        const PlasmaConfig pc = plasma_config_of(pl);
        out = plasma_run(model.sde, ic.mean, t0, tf, pc.h, pc.order, pc.scheme, pc.substeps,
                         pl.value("store_every", 0));
    }
    const double t_plasma = stage_seconds(t_start);
    ctx.manifest_times["plasma_s"] = t_plasma;

    const NoiseMomentSet& fin = out.final_set();
    const Eigen::VectorXd mean = state_mean(fin);
    const Eigen::MatrixXd cov = state_covariance(fin);
    {
        std::ofstream os(ctx.file("moments.txt"));
        write_moments(os, out);
    }
    write_vector_csv(ctx.file("mean.csv"), mean, "mean");
    write_matrix_csv(ctx.file("cov.csv"), cov);
    ctx.note("final mean: " + [&] {
        std::ostringstream os;
        os.precision(10);
        os << mean.transpose();
        return os.str();
    }());
    report_against_reference(ctx, mean, "cartesian");

    if (ctx.cfg.value("report_mee", false)) {
        auto [mee_mean, mee_cov] = moments_to_mee(mean, cov, model.mu);
        write_vector_csv(ctx.file("mee_mean.csv"), mee_mean, "mean");
        write_matrix_csv(ctx.file("mee_cov.csv"), mee_cov);
        report_against_reference(ctx, mee_mean, "mee_mean");
    }

    if (ctx.cfg.contains("duffing_check")) {
        const json& dc = ctx.cfg["duffing_check"];
        const int steps = static_cast<int>(std::lround(tf - t0));
        const double tol = dc.value("tol", 1e-12);
        const auto oracle =
            duffing_closed_form_moments(Eigen::Vector2d(ic.mean[0], ic.mean[1]), model.duffing,
                                        steps);
        const auto& last = oracle.back();
        double worst = 0.0;
        auto rel = [&](double a, double b) {
            const double s = std::max({std::abs(a), std::abs(b), 1e-30});
            return std::abs(a - b) / s;
        };
        const std::vector<int> r10{1, 0}, r01{0, 1}, r20{2, 0}, r11{1, 1}, r02{0, 2};
        worst = std::max(worst, rel(fin.moment(r10), last.e10));
        worst = std::max(worst, rel(fin.moment(r01), last.e01));
        worst = std::max(worst, rel(fin.moment(r20), last.e20));
        worst = std::max(worst, rel(fin.moment(r11), last.e11));
        worst = std::max(worst, rel(fin.moment(r02), last.e02));
        worst = std::max(worst, rel(state_moment(fin, r10), last.raw10));
        worst = std::max(worst, rel(state_moment(fin, r02), last.raw02));
        const bool pass = worst <= tol;
        std::ostringstream os;
        os << (pass ? "PASS" : "FAIL") << " closed-form moment check: max relative difference "
           << worst << " vs tolerance " << tol;
        ctx.note(os.str());
        if (!pass) ctx.summary->checks_passed = false;
    }

    if (ctx.cfg.contains("mc") && model.has_sde) {
        const auto t_mc0 = std::chrono::steady_clock::now();
        const McConfig mcc = mc_config_of(ctx.cfg["mc"], ctx);
        const SampleSet samples =
            simulate_paths(model.sde, IcSampler::fixed(ic.mean), t0, tf, mcc);
        const MomentTable table = sample_moments(samples, 2);
        const double t_mc = stage_seconds(t_mc0);
        ctx.manifest_times["mc_s"] = t_mc;
        std::vector<std::pair<std::string, double>> rows;
        rows.emplace_back("eps_mu", metric_eps_mu(mean, table.mean));
        rows.emplace_back("eps_lambda", metric_eps_lambda(cov, table.cov));
        for (int i = 0; i < mean.size(); ++i) {
            rows.emplace_back("mean_rel_err_" + std::to_string(i),
                              std::abs((mean[i] - table.mean[i]) / table.mean[i]));
        }
        for (int i = 0; i < mean.size(); ++i) {
            rows.emplace_back("cov_diag_rel_err_" + std::to_string(i),
                              std::abs((cov(i, i) - table.cov(i, i)) / table.cov(i, i)));
        }
        rows.emplace_back("mc_excluded_paths", samples.excluded);
        rows.emplace_back("plasma_wall_s", t_plasma);
        rows.emplace_back("mc_wall_s", t_mc);
        rows.emplace_back("speedup_vs_mc", t_mc / std::max(1e-12, t_plasma));
        write_metrics_csv(ctx.file("metrics.csv"), rows);
        write_vector_csv(ctx.file("mc_mean.csv"), table.mean, "mean");
        write_matrix_csv(ctx.file("mc_cov.csv"), table.cov);
        std::ostringstream os;
        os.precision(4);
        os << "vs MC: eps_mu " << rows[0].second << ", eps_lambda " << rows[1].second
           << ", speedup " << t_mc / std::max(1e-12, t_plasma) << "x";
        ctx.note(os.str());
    }
}

void run_gmm_family(RunContext& ctx, const BuiltModel& model, const InitialState& ic, double t0,
                    double tf) {
    const std::string method = ctx.cfg["method"];
    const AdaptConfig acfg = adapt_config_of(ctx.cfg["gmm"]);
    Manifold initial;
    initial.side = ManifoldSide::initial;
    GaussKernel k0;
    k0.id = 1;
    k0.weight = 1.0;
    k0.mean = ic.mean;
    k0.cov = ic.cov;
    initial.kernels.push_back(k0);

    const auto t_start = std::chrono::steady_clock::now();
    Manifold result;
    AdaptResult adapt;
    std::vector<MfKernelRecord> records;
    if (method == "gmm_adaptive") {
        const MapFn map = gmm_map_of(model.ode, t0, tf, ctx.cfg["gmm"]);
        adapt = adaptive_propagate(initial, map, acfg);
        result = adapt.propagated;
    } else if (method == "mf_deterministic") {
        const BuiltModel lf = build_model(ctx.cfg["lf_model"], "lf_model");
        const BuiltModel hf = build_model(ctx.cfg["hf_model"], "hf_model");
        const MapFn map = gmm_map_of(lf.ode, t0, tf, ctx.cfg["gmm"]);
        const double hf_h = ctx.cfg["hf"].value("step_s", 60.0);
        const FlowFn flow = [hf, t0, tf, hf_h](const Eigen::VectorXd& x) {
            return propagate_rk4(hf.ode, x, t0, tf, hf_h);
        };
        MfResult mf = mf_deterministic(map, flow, initial, acfg, ctx.threads);
        adapt = std::move(mf.adapt);
        result = std::move(mf.corrected);
        records = std::move(mf.records);
    } else {  // mf_stochastic
        const BuiltModel lf = build_model(ctx.cfg["lf_model"], "lf_model");
        const BuiltModel hf = build_model(ctx.cfg["hf_model"], "hf_model");
        const MapFn map = gmm_map_of(lf.ode, t0, tf, ctx.cfg["gmm"]);
        const PlasmaConfig pc = plasma_config_of(ctx.cfg["plasma"]);
        std::optional<OdeModel> bifi;
        if (ctx.cfg.contains("bifidelity_lf_model")) {
            bifi = build_model(ctx.cfg["bifidelity_lf_model"], "bifidelity_lf_model").ode;
        }
        MfResult mf =
            mf_stochastic(map, hf.sde, initial, acfg, pc, t0, tf, bifi, ctx.threads);
        adapt = std::move(mf.adapt);
        result = std::move(mf.corrected);
        records = std::move(mf.records);
    }
    ctx.manifest_times["gmm_s"] = stage_seconds(t_start);

    auto [mean, cov] = mixture_moments(result);
    write_mixture_csv(ctx.file("mixture.csv"), result);
    {
        std::ofstream os(ctx.file("manifold.txt"));
        write_manifold(os, result);
    }
    write_vector_csv(ctx.file("mean.csv"), mean, "mean");
    write_matrix_csv(ctx.file("cov.csv"), cov);
    if (!records.empty()) {
        std::ofstream os(ctx.file("records.csv"));
        os.precision(17);
        os << "kernel,shift_norm\n";
        for (const auto& r : records) os << r.id << ',' << r.shift_norm << '\n';
    }
    {
        std::ostringstream os;
        os << "kernels: " << result.kernels.size() << ", splits: " << adapt.splits;
        if (!adapt.diags.empty()) {
            double numax = 0.0;
            for (const auto& d : adapt.diags) numax = std::max(numax, d.nu);
            os << ", max nu: " << numax;
        }
        ctx.note(os.str());
    }
    report_against_reference(ctx, mean, "cartesian");

    if (ctx.cfg.contains("mc")) {
        const BuiltModel* mc_model = &model;
        BuiltModel hf_built;
        if (ctx.cfg.contains("hf_model")) {
            hf_built = build_model(ctx.cfg["hf_model"], "hf_model");
            mc_model = &hf_built;
        }
        SdeModel sde;
        if (mc_model->has_sde) {
            sde = mc_model->sde;
        } else {
            sde.state_dim = mc_model->state_dim;
            sde.noise_dim = 0;
            sde.drift_real = mc_model->ode.rhs_real;
            sde.drift_poly = mc_model->ode.rhs_poly;
            sde.diffusion_real = [n = mc_model->state_dim](const std::vector<double>&, double) {
                return DynMat<double>(n, 0);
            };
            sde.diffusion_poly = [](const std::vector<TaylorPoly>& x, double) {
                return zero_mat(static_cast<int>(x.size()), 0, x[0]);
            };
        }
        const auto t_mc0 = std::chrono::steady_clock::now();
        const McConfig mcc = mc_config_of(ctx.cfg["mc"], ctx);
        const IcSampler sampler = ic.gaussian ? IcSampler::gaussian(ic.mean, ic.cov)
                                              : IcSampler::fixed(ic.mean);
        const SampleSet samples = simulate_paths(sde, sampler, t0, tf, mcc);
        const MomentTable table = sample_moments(samples, 2);
        ctx.manifest_times["mc_s"] = stage_seconds(t_mc0);
        std::vector<std::pair<std::string, double>> rows;
        rows.emplace_back("eps_mu", metric_eps_mu(mean, table.mean));
        rows.emplace_back("eps_lambda", metric_eps_lambda(cov, table.cov));
        rows.emplace_back("mc_excluded_paths", samples.excluded);
        if (method != "mf_stochastic" && mc_model->mu > 0.0) {
            // Sample RMSE of the polynomial predictions, before and after the
            // constant-part correction (deterministic methods only: the paths
            // carry no process noise to confound the manifold evaluation).
            rows.emplace_back("rmse_corrected",
                              manifold_sample_rmse(adapt.initial, result, sampler, samples,
                                                   mcc.base_seed, mc_model->mu));
            if (method == "mf_deterministic") {
                rows.emplace_back("rmse_lf",
                                  manifold_sample_rmse(adapt.initial, adapt.propagated, sampler,
                                                       samples, mcc.base_seed, mc_model->mu));
            }
        }
        write_metrics_csv(ctx.file("metrics.csv"), rows);
        write_vector_csv(ctx.file("mc_mean.csv"), table.mean, "mean");
        write_matrix_csv(ctx.file("mc_cov.csv"), table.cov);
        std::ostringstream os;
        os.precision(4);
        os << "vs MC: eps_mu " << rows[0].second << ", eps_lambda " << rows[1].second;
        ctx.note(os.str());
    }
}

void run_mc_method(RunContext& ctx, const BuiltModel& model, const InitialState& ic, double t0,
                   double tf) {
    const auto t_start = std::chrono::steady_clock::now();
    const McConfig mcc = mc_config_of(ctx.cfg["mc"], ctx);
    const IcSampler sampler =
        ic.gaussian ? IcSampler::gaussian(ic.mean, ic.cov) : IcSampler::fixed(ic.mean);
    const SampleSet samples = simulate_paths(model.sde, sampler, t0, tf, mcc);
    ctx.manifest_times["mc_s"] = stage_seconds(t_start);
    const MomentTable table = sample_moments(samples, 2);
    {
        std::ofstream os(ctx.file("samples.csv"));
        write_samples(os, samples);
    }
    write_vector_csv(ctx.file("mean.csv"), table.mean, "mean");
    write_matrix_csv(ctx.file("cov.csv"), table.cov);
    std::ostringstream os;
    os << "paths: " << mcc.n_paths << ", excluded: " << samples.excluded;
    ctx.note(os.str());
    report_against_reference(ctx, table.mean, "cartesian");
}

}  // namespace

RunSummary run_scenario(const json& config, const RunOptions& opts) {
    RunSummary summary;
    RunContext ctx;
    ctx.cfg = config;
    ctx.summary = &summary;
    summary.name = config.at("name").get<std::string>();

    // Output directory: flag > environment > config.
    std::string dir = config["output"]["dir"].get<std::string>();
    if (const char* env = std::getenv("UPROP_OUT_DIR"); env && *env) dir = env;
    if (!opts.out_dir.empty()) dir = opts.out_dir;
    ctx.out = dir;
    std::filesystem::create_directories(ctx.out);
    summary.out_dir = ctx.out.string();

    ctx.threads = opts.threads > 0 ? opts.threads : config.value("threads", 1);
    std::uint64_t seed = 0;
    if (config.contains("mc")) seed = config["mc"].value("seed", 0ull);
    if (opts.seed >= 0) seed = static_cast<std::uint64_t>(opts.seed);
    ctx.seed = seed;
    ctx.cfg["threads"] = ctx.threads;
    if (ctx.cfg.contains("mc")) ctx.cfg["mc"]["seed"] = seed;

    const auto t_run0 = std::chrono::steady_clock::now();
    const BuiltModel model = build_model(ctx.cfg.at("model"), "model");
    const InitialState ic = build_initial(ctx.cfg.at("initial"), model, "initial");
    const double t0 = ctx.cfg["time"]["t0_s"].get<double>();
    const double tf = ctx.cfg["time"]["tf_s"].get<double>();
    const std::string method = ctx.cfg["method"].get<std::string>();

    if (method == "plasma" || method == "plasma_bifidelity") {
        run_plasma_method(ctx, model, ic, t0, tf);
    } else if (method == "gmm_adaptive" || method == "mf_deterministic" ||
               method == "mf_stochastic") {
        run_gmm_family(ctx, model, ic, t0, tf);
    } else if (method == "mc") {
        run_mc_method(ctx, model, ic, t0, tf);
    } else {
        fail("method", "unknown method");
    }

    // Run manifest: enough to reproduce any stochastic output bit-for-bit.
    json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["config"] = ctx.cfg;
    manifest["config_hash"] = fnv1a(serialize_config(ctx.cfg));
    manifest["seed"] = seed;
    manifest["threads"] = ctx.threads;
    manifest["wall_times_s"] = ctx.manifest_times;
    manifest["wall_times_s"]["total"] = stage_seconds(t_run0);
    manifest["artifacts"] = summary.artifacts;
    {
        std::ofstream os(ctx.out / "manifest.json");
        os << manifest.dump(2) << '\n';
        summary.artifacts.push_back("manifest.json");
    }
    return summary;
}

}  // namespace uprop
