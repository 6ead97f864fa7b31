#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uprop/multi_index.hpp"

namespace uprop {

/// Truncated multivariate Taylor polynomial over a shared MonomialBasis.
///
/// Values are immutable after construction: every operation returns a new
/// polynomial, so instances can be shared freely between threads. The
/// coefficient store is dense in the basis' graded ordering; products and
/// compositions silently discard monomials above the truncation order.
class TaylorPoly {
public:
    TaylorPoly() = default;

    explicit TaylorPoly(std::shared_ptr<const MonomialBasis> basis)
        : basis_(std::move(basis)), coeffs_(basis_->size(), 0.0) {}

    static TaylorPoly constant(int nvars, int order, double value);

    /// First-order polynomial center + scale * dx_var.
    static TaylorPoly variable(int nvars, int order, int var, double scale = 1.0,
                               double center = 0.0);

    /// Component i is center_i + scale_i * dx_i; scales must be >= 0.
    static std::vector<TaylorPoly> identity_vars(int nvars, int order,
                                                 std::span<const double> center,
                                                 std::span<const double> scale);

    /// Build from (exponents, coefficient) terms; |r| > order is rejected.
    static TaylorPoly from_terms(
        int nvars, int order,
        const std::vector<std::pair<std::vector<int>, double>>& terms);

    bool valid() const { return basis_ != nullptr; }
    int nvars() const { return basis_->nvars(); }
    int order() const { return basis_->order(); }
    const std::shared_ptr<const MonomialBasis>& basis() const { return basis_; }
    std::span<const double> coeffs() const { return coeffs_; }

    double coeff(int index) const { return coeffs_[index]; }
    double coeff(std::span<const int> exps) const;

    double constant_part() const { return coeffs_.empty() ? 0.0 : coeffs_[0]; }
    TaylorPoly nilpotent_part() const;
    TaylorPoly with_constant(double value) const;

    /// Copy with every monomial above new_order zeroed (basis unchanged).
    TaylorPoly truncated(int new_order) const;

    /// Formal partial derivative with respect to variable `var`.
    TaylorPoly partial(int var) const;

    /// Exact polynomial evaluation at a real point.
    double eval(std::span<const double> point) const;

    /// Substitute args[v] for variable v of f; result lives in the args'
    /// basis and is truncated at the args' order. Nonzero constant parts in
    /// the args are permitted; validity of the truncation is then the
    /// caller's responsibility.
    static TaylorPoly compose(const TaylorPoly& f, const std::vector<TaylorPoly>& args);

    /// Multiply the coefficient of each monomial by prod factors[v]^r_v.
    /// Equivalent to composing with the scaled identity map.
    TaylorPoly rescale_vars(std::span<const double> factors) const;

    double max_abs_coeff() const;
    bool all_finite() const;
    bool is_zero() const;

    TaylorPoly operator-() const;
    TaylorPoly& operator+=(const TaylorPoly& o);
    TaylorPoly& operator-=(const TaylorPoly& o);
    TaylorPoly& operator+=(double c);
    TaylorPoly& operator-=(double c);
    TaylorPoly& operator*=(double c);
    TaylorPoly& operator/=(double c);

    friend TaylorPoly operator+(TaylorPoly a, const TaylorPoly& b) { return a += b; }
    friend TaylorPoly operator-(TaylorPoly a, const TaylorPoly& b) { return a -= b; }
    friend TaylorPoly operator+(TaylorPoly a, double c) { return a += c; }
    friend TaylorPoly operator+(double c, TaylorPoly a) { return a += c; }
    friend TaylorPoly operator-(TaylorPoly a, double c) { return a -= c; }
    friend TaylorPoly operator-(double c, const TaylorPoly& a) { return -a + c; }
    friend TaylorPoly operator*(TaylorPoly a, double c) { return a *= c; }
    friend TaylorPoly operator*(double c, TaylorPoly a) { return a *= c; }
    friend TaylorPoly operator/(TaylorPoly a, double c) { return a /= c; }

    friend TaylorPoly operator*(const TaylorPoly& a, const TaylorPoly& b);
    friend TaylorPoly operator/(const TaylorPoly& a, const TaylorPoly& b);
    friend TaylorPoly operator/(double c, const TaylorPoly& a);

    /// Structured-text form: "taylor <nvars> <order> <nterms>" followed by
    /// one "e_1 ... e_n coefficient" line per nonzero term and "end".
    void write(std::ostream& os) const;
    static TaylorPoly read(std::istream& is);
    std::string to_string() const;

private:
    void require_same_basis(const TaylorPoly& o) const;

    std::shared_ptr<const MonomialBasis> basis_;
    std::vector<double> coeffs_;
};

/// k-th order expansion of 1/x about the constant part (must be nonzero).
TaylorPoly reciprocal(const TaylorPoly& a);
/// k-th order expansion of sqrt(x) about the constant part (must be > 0).
TaylorPoly sqrt(const TaylorPoly& a);
/// Integer power by repeated truncated multiplication; p < 0 uses reciprocal.
TaylorPoly pow_int(const TaylorPoly& a, int p);
TaylorPoly exp(const TaylorPoly& a);
TaylorPoly sin(const TaylorPoly& a);
TaylorPoly cos(const TaylorPoly& a);
/// Two-argument arctangent pair expansion; (x0, y0) must not be the origin.
TaylorPoly atan2(const TaylorPoly& y, const TaylorPoly& x);
/// asin via the atan2 pair; |constant part| must be < 1.
TaylorPoly asin(const TaylorPoly& a);

}  // namespace uprop
