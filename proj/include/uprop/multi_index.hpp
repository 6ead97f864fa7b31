#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

namespace uprop {

/// Multi-index r = (r_1, ..., r_n) of non-negative integer exponents.
struct MultiIndex {
    std::vector<int> exps;

    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> e) : exps(std::move(e)) {}

    int size() const { return static_cast<int>(exps.size()); }

    /// |r| = sum of exponents.
    int order() const;

    /// r! = prod r_i! (0! = 1).
    double factorial() const;

    /// Component-wise r <= s.
    bool leq(const MultiIndex& s) const;

    bool operator==(const MultiIndex& o) const { return exps == o.exps; }
};

/// Component-wise binomial prod binom(r_i, s_i); zero when any s_i > r_i.
double binomial(const MultiIndex& r, const MultiIndex& s);
double binomial(std::span<const int> r, std::span<const int> s);

/// Number of monomials of order <= k in n variables: (n+k)!/(n! k!).
/// Throws std::overflow_error when the count exceeds uint64 range.
std::uint64_t dimension(int nvars, int order);

/// All multi-indices with |r| <= max_order over nvars variables, in the
/// graded ordering used by MonomialBasis.
std::vector<MultiIndex> enumerate_multi_indices(int nvars, int max_order);

/// Shared, immutable indexing of the monomials of the truncated algebra in
/// `nvars` variables at truncation order `order`. Monomials are stored in
/// graded order (degree 0 first, lexicographic within a degree), so index 0
/// is always the constant monomial.
class MonomialBasis {
public:
    /// Cached accessor; instances are immutable and shared.
    static std::shared_ptr<const MonomialBasis> get(int nvars, int order);

    int nvars() const { return nvars_; }
    int order() const { return order_; }
    int size() const { return static_cast<int>(degrees_.size()); }

    std::span<const int> exponents(int index) const {
        return {exps_.data() + static_cast<std::size_t>(index) * nvars_,
                static_cast<std::size_t>(nvars_)};
    }
    int degree(int index) const { return degrees_[index]; }

    /// Index of a monomial, or -1 when |r| exceeds the truncation order.
    int index_of(std::span<const int> exps) const;

    /// Index of the first monomial of the given degree.
    int degree_offset(int degree) const { return degree_offsets_[degree]; }

    struct MulEntry {
        std::int32_t rhs;
        std::int32_t target;
    };
    /// Truncated-product table: for a left factor index i, the list of
    /// (j, target) pairs with deg(i) + deg(j) <= order. Built lazily.
    const std::vector<MulEntry>& mul_entries(int lhs_index) const;

private:
    MonomialBasis(int nvars, int order);

    void ensure_mul_table() const;

    int nvars_ = 0;
    int order_ = 0;
    std::vector<int> exps_;       // size() * nvars_, row-major
    std::vector<int> degrees_;    // size()
    std::vector<int> degree_offsets_;
    std::unordered_map<std::uint64_t, std::int32_t> lookup_;

    mutable std::vector<std::vector<MulEntry>> mul_table_;
    mutable std::atomic<bool> mul_built_{false};
};

}  // namespace uprop
