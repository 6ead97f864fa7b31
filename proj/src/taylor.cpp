#include "uprop/taylor.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace uprop {

TaylorPoly TaylorPoly::constant(int nvars, int order, double value) {
    TaylorPoly p(MonomialBasis::get(nvars, order));
    p.coeffs_[0] = value;
    return p;
}

TaylorPoly TaylorPoly::variable(int nvars, int order, int var, double scale, double center) {
    if (var < 0 || var >= nvars) {
        throw std::invalid_argument("TaylorPoly::variable: var out of range");
    }
    TaylorPoly p(MonomialBasis::get(nvars, order));
    p.coeffs_[0] = center;
    if (order >= 1) {
        std::vector<int> e(nvars, 0);
        e[var] = 1;
        p.coeffs_[p.basis_->index_of(e)] = scale;
    } else if (scale != 0.0) {
        throw std::invalid_argument("TaylorPoly::variable: order 0 cannot carry a linear term");
    }
    return p;
}

std::vector<TaylorPoly> TaylorPoly::identity_vars(int nvars, int order,
                                                  std::span<const double> center,
                                                  std::span<const double> scale) {
    if (static_cast<int>(center.size()) != nvars || static_cast<int>(scale.size()) != nvars) {
        throw std::invalid_argument("identity_vars: center/scale length must equal nvars");
    }
    for (double s : scale) {
        if (s < 0.0) throw std::invalid_argument("identity_vars: negative scale");
    }
    std::vector<TaylorPoly> out;
    out.reserve(nvars);
    for (int i = 0; i < nvars; ++i) {
        out.push_back(variable(nvars, order, i, scale[i], center[i]));
    }
    return out;
}

TaylorPoly TaylorPoly::from_terms(
    int nvars, int order, const std::vector<std::pair<std::vector<int>, double>>& terms) {
    TaylorPoly p(MonomialBasis::get(nvars, order));
    for (const auto& [exps, c] : terms) {
        const int idx = p.basis_->index_of(exps);
        if (idx < 0) throw std::invalid_argument("from_terms: term above truncation order");
        p.coeffs_[idx] += c;
    }
    return p;
}

double TaylorPoly::coeff(std::span<const int> exps) const {
    const int idx = basis_->index_of(exps);
    return idx < 0 ? 0.0 : coeffs_[idx];
}

TaylorPoly TaylorPoly::nilpotent_part() const {
    TaylorPoly p = *this;
    p.coeffs_[0] = 0.0;
    return p;
}

TaylorPoly TaylorPoly::with_constant(double value) const {
    TaylorPoly p = *this;
    p.coeffs_[0] = value;
    return p;
}

TaylorPoly TaylorPoly::truncated(int new_order) const {
    TaylorPoly p = *this;
    if (new_order >= order()) return p;
    if (new_order < 0) new_order = -1;
    const int cut = basis_->degree_offset(new_order + 1);
    for (int i = cut; i < static_cast<int>(p.coeffs_.size()); ++i) p.coeffs_[i] = 0.0;
    return p;
}

TaylorPoly TaylorPoly::partial(int var) const {
    if (var < 0 || var >= nvars()) {
        throw std::invalid_argument("TaylorPoly::partial: var out of range");
    }
    TaylorPoly out(basis_);
    std::vector<int> e(nvars());
    for (int i = 0; i < static_cast<int>(coeffs_.size()); ++i) {
        const double c = coeffs_[i];
        if (c == 0.0) continue;
        auto ei = basis_->exponents(i);
        if (ei[var] == 0) continue;
        for (int v = 0; v < nvars(); ++v) e[v] = ei[v];
        e[var] -= 1;
        out.coeffs_[basis_->index_of(e)] += c * ei[var];
    }
    return out;
}

double TaylorPoly::eval(std::span<const double> point) const {
    if (static_cast<int>(point.size()) != nvars()) {
        throw std::invalid_argument("TaylorPoly::eval: point length must equal nvars");
    }
    // Per-variable power tables, then a monomial sum.
    const int k = order();
    std::vector<double> pows(static_cast<std::size_t>(nvars()) * (k + 1));
    for (int v = 0; v < nvars(); ++v) {
        pows[v * (k + 1)] = 1.0;
        for (int d = 1; d <= k; ++d) pows[v * (k + 1) + d] = pows[v * (k + 1) + d - 1] * point[v];
    }
    double sum = 0.0;
    for (int i = 0; i < static_cast<int>(coeffs_.size()); ++i) {
        const double c = coeffs_[i];
        if (c == 0.0) continue;
        auto e = basis_->exponents(i);
        double mono = 1.0;
        for (int v = 0; v < nvars(); ++v) {
            if (e[v] > 0) mono *= pows[v * (k + 1) + e[v]];
        }
        sum += c * mono;
    }
    return sum;
}

void TaylorPoly::require_same_basis(const TaylorPoly& o) const {
    if (basis_ != o.basis_) {
        throw std::invalid_argument("TaylorPoly: mismatched nvars/order");
    }
}

TaylorPoly TaylorPoly::operator-() const {
    TaylorPoly p = *this;
    for (double& c : p.coeffs_) c = -c;
    return p;
}

TaylorPoly& TaylorPoly::operator+=(const TaylorPoly& o) {
    require_same_basis(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
}

TaylorPoly& TaylorPoly::operator-=(const TaylorPoly& o) {
    require_same_basis(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
}

TaylorPoly& TaylorPoly::operator+=(double c) {
    coeffs_[0] += c;
    return *this;
}

TaylorPoly& TaylorPoly::operator-=(double c) {
    coeffs_[0] -= c;
    return *this;
}

TaylorPoly& TaylorPoly::operator*=(double c) {
    for (double& x : coeffs_) x *= c;
    return *this;
}

TaylorPoly& TaylorPoly::operator/=(double c) {
    for (double& x : coeffs_) x /= c;
    return *this;
}

TaylorPoly operator*(const TaylorPoly& a, const TaylorPoly& b) {
    a.require_same_basis(b);
    const MonomialBasis& basis = *a.basis_;
    TaylorPoly out(a.basis_);
    const double* bc = b.coeffs_.data();
    double* oc = out.coeffs_.data();
    for (int i = 0; i < static_cast<int>(a.coeffs_.size()); ++i) {
        const double ai = a.coeffs_[i];
        if (ai == 0.0) continue;
        for (const auto& e : basis.mul_entries(i)) {
            oc[e.target] += ai * bc[e.rhs];
        }
    }
    return out;
}

TaylorPoly operator/(const TaylorPoly& a, const TaylorPoly& b) { return a * reciprocal(b); }

TaylorPoly operator/(double c, const TaylorPoly& a) { return reciprocal(a) * c; }

TaylorPoly TaylorPoly::rescale_vars(std::span<const double> factors) const {
    if (static_cast<int>(factors.size()) != nvars()) {
        throw std::invalid_argument("rescale_vars: factor length must equal nvars");
    }
    TaylorPoly out = *this;
    for (int i = 0; i < static_cast<int>(coeffs_.size()); ++i) {
        if (out.coeffs_[i] == 0.0) continue;
        auto e = basis_->exponents(i);
        double f = 1.0;
        for (int v = 0; v < nvars(); ++v) {
            for (int j = 0; j < e[v]; ++j) f *= factors[v];
        }
        out.coeffs_[i] *= f;
    }
    return out;
}

TaylorPoly TaylorPoly::compose(const TaylorPoly& f, const std::vector<TaylorPoly>& args) {
    if (static_cast<int>(args.size()) != f.nvars()) {
        throw std::invalid_argument("compose: argument count must equal f.nvars");
    }
    if (args.empty()) throw std::invalid_argument("compose: no arguments");
    const auto& target = args[0].basis();
    for (const auto& g : args) {
        if (g.basis() != target) throw std::invalid_argument("compose: argument bases differ");
    }
    // Memoized powers of each argument up to the maximum exponent used.
    std::vector<int> max_exp(f.nvars(), 0);
    for (int i = 0; i < static_cast<int>(f.coeffs_.size()); ++i) {
        if (f.coeffs_[i] == 0.0) continue;
        auto e = f.basis_->exponents(i);
        for (int v = 0; v < f.nvars(); ++v) max_exp[v] = std::max(max_exp[v], e[v]);
    }
    std::vector<std::vector<TaylorPoly>> pows(f.nvars());
    for (int v = 0; v < f.nvars(); ++v) {
        pows[v].reserve(max_exp[v] + 1);
        pows[v].push_back(TaylorPoly::constant(target->nvars(), target->order(), 1.0));
        for (int d = 1; d <= max_exp[v]; ++d) pows[v].push_back(pows[v][d - 1] * args[v]);
    }
    TaylorPoly out(target);
    for (int i = 0; i < static_cast<int>(f.coeffs_.size()); ++i) {
        const double c = f.coeffs_[i];
        if (c == 0.0) continue;
        auto e = f.basis_->exponents(i);
        int first = -1;
        for (int v = 0; v < f.nvars(); ++v) {
            if (e[v] > 0) { first = v; break; }
        }
        if (first < 0) {
            out += c;
            continue;
        }
        TaylorPoly term = pows[first][e[first]];
        for (int v = first + 1; v < f.nvars(); ++v) {
            if (e[v] > 0) term = term * pows[v][e[v]];
        }
        out += term * c;
    }
    return out;
}

double TaylorPoly::max_abs_coeff() const {
    double m = 0.0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
}

bool TaylorPoly::all_finite() const {
    for (double c : coeffs_) {
        if (!std::isfinite(c)) return false;
    }
    return true;
}

bool TaylorPoly::is_zero() const {
    for (double c : coeffs_) {
        if (c != 0.0) return false;
    }
    return true;
}

namespace {

/// Horner evaluation of a univariate series in the nilpotent part:
/// sum_j series[j] * nil^j, truncated by the algebra.
TaylorPoly compose_series(std::span<const double> series, const TaylorPoly& nil) {
    const int k = nil.order();
    TaylorPoly acc = TaylorPoly::constant(nil.nvars(), k, series[k]);
    for (int j = k - 1; j >= 0; --j) {
        acc = acc * nil;
        acc += series[j];
    }
    return acc;
}

}  // namespace

TaylorPoly reciprocal(const TaylorPoly& a) {
    const double c = a.constant_part();
    if (c == 0.0) throw std::domain_error("reciprocal: zero constant part");
    const int k = a.order();
    std::vector<double> u(k + 1);
    u[0] = 1.0 / c;
    for (int j = 1; j <= k; ++j) u[j] = -u[j - 1] / c;
    return compose_series(u, a.nilpotent_part());
}

TaylorPoly sqrt(const TaylorPoly& a) {
    const double c = a.constant_part();
    if (!(c > 0.0)) throw std::domain_error("sqrt: constant part must be positive");
    const int k = a.order();
    std::vector<double> u(k + 1);
    u[0] = std::sqrt(c);
    for (int j = 1; j <= k; ++j) {
        // d^j/dx^j sqrt(x) / j! at c
        u[j] = u[j - 1] * (0.5 - (j - 1)) / (j * c);
    }
    return compose_series(u, a.nilpotent_part());
}

TaylorPoly pow_int(const TaylorPoly& a, int p) {
    if (p < 0) return pow_int(reciprocal(a), -p);
    TaylorPoly result = TaylorPoly::constant(a.nvars(), a.order(), 1.0);
    TaylorPoly base = a;
    int e = p;
    while (e > 0) {
        if (e & 1) result = result * base;
        e >>= 1;
        if (e > 0) base = base * base;
    }
    return result;
}

TaylorPoly exp(const TaylorPoly& a) {
    const double c = a.constant_part();
    const int k = a.order();
    std::vector<double> u(k + 1);
    u[0] = std::exp(c);
    for (int j = 1; j <= k; ++j) u[j] = u[j - 1] / j;
    return compose_series(u, a.nilpotent_part());
}

TaylorPoly sin(const TaylorPoly& a) {
    const double c = a.constant_part();
    const int k = a.order();
    const double s = std::sin(c), co = std::cos(c);
    std::vector<double> u(k + 1);
    double fact = 1.0;
    for (int j = 0; j <= k; ++j) {
        if (j > 0) fact *= j;
        const double d = (j % 4 == 0) ? s : (j % 4 == 1) ? co : (j % 4 == 2) ? -s : -co;
        u[j] = d / fact;
    }
    return compose_series(u, a.nilpotent_part());
}

TaylorPoly cos(const TaylorPoly& a) {
    const double c = a.constant_part();
    const int k = a.order();
    const double s = std::sin(c), co = std::cos(c);
    std::vector<double> u(k + 1);
    double fact = 1.0;
    for (int j = 0; j <= k; ++j) {
        if (j > 0) fact *= j;
        const double d = (j % 4 == 0) ? co : (j % 4 == 1) ? -s : (j % 4 == 2) ? -co : s;
        u[j] = d / fact;
    }
    return compose_series(u, a.nilpotent_part());
}

TaylorPoly atan2(const TaylorPoly& y, const TaylorPoly& x) {
    const double x0 = x.constant_part();
    const double y0 = y.constant_part();
    if (x0 == 0.0 && y0 == 0.0) {
        throw std::domain_error("atan2: expansion point at the origin");
    }
    // atan2(y, x) = atan2(y0, x0) + atan(u), u = (x0 y - y0 x) / (x0 x + y0 y),
    // where u has zero constant part by construction.
    const double theta0 = std::atan2(y0, x0);
    TaylorPoly num = x0 * y - y0 * x;
    TaylorPoly den = x0 * x + y0 * y;
    TaylorPoly u = num * reciprocal(den);
    const int k = u.order();
    std::vector<double> series(k + 1, 0.0);
    for (int j = 1; j <= k; j += 2) series[j] = (j % 4 == 1) ? 1.0 / j : -1.0 / j;
    TaylorPoly out = compose_series(series, u);
    out += theta0;
    return out;
}

TaylorPoly asin(const TaylorPoly& a) {
    const double c = a.constant_part();
    if (!(std::abs(c) < 1.0)) throw std::domain_error("asin: |constant part| must be < 1");
    return atan2(a, sqrt(1.0 - a * a));
}

void TaylorPoly::write(std::ostream& os) const {
    int nterms = 0;
    for (double c : coeffs_) {
        if (c != 0.0) ++nterms;
    }
    os << "taylor " << nvars() << ' ' << order() << ' ' << nterms << '\n';
    os.precision(17);
    for (int i = 0; i < static_cast<int>(coeffs_.size()); ++i) {
        if (coeffs_[i] == 0.0) continue;
        for (int e : basis_->exponents(i)) os << e << ' ';
        os << coeffs_[i] << '\n';
    }
    os << "end\n";
}

TaylorPoly TaylorPoly::read(std::istream& is) {
    std::string tag;
    int nvars = 0, order = 0, nterms = 0;
    if (!(is >> tag >> nvars >> order >> nterms) || tag != "taylor") {
        throw std::runtime_error("TaylorPoly::read: bad header");
    }
    TaylorPoly p(MonomialBasis::get(nvars, order));
    std::vector<int> e(nvars);
    for (int t = 0; t < nterms; ++t) {
        for (int v = 0; v < nvars; ++v) {
            if (!(is >> e[v])) throw std::runtime_error("TaylorPoly::read: truncated term");
        }
        double c;
        if (!(is >> c)) throw std::runtime_error("TaylorPoly::read: truncated term");
        const int idx = p.basis_->index_of(e);
        if (idx < 0) throw std::runtime_error("TaylorPoly::read: term above order");
        p.coeffs_[idx] = c;
    }
    if (!(is >> tag) || tag != "end") throw std::runtime_error("TaylorPoly::read: missing end");
    return p;
}

std::string TaylorPoly::to_string() const {
    std::ostringstream oss;
    write(oss);
    return oss.str();
}

}  // namespace uprop
