#include "uprop/multi_index.hpp"

#include <mutex>
#include <stdexcept>

namespace uprop {

namespace {

// Packed key for exponent lookup: 4 bits per variable. The regimes of
// interest stay well below 16 variables and exponent 15.
std::uint64_t pack_key(std::span<const int> exps) {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < exps.size(); ++i) {
        key |= (static_cast<std::uint64_t>(exps[i]) & 0xF) << (4 * i);
    }
    return key;
}

bool packable(std::span<const int> exps) {
    if (exps.size() > 16) return false;
    for (int e : exps) {
        if (e < 0 || e > 15) return false;
    }
    return true;
}

void enumerate_degree(int nvars, int degree, std::vector<int>& cur, int pos,
                      std::vector<int>& out) {
    if (pos == nvars - 1) {
        cur[pos] = degree;
        out.insert(out.end(), cur.begin(), cur.end());
        return;
    }
    for (int e = degree; e >= 0; --e) {
        cur[pos] = e;
        enumerate_degree(nvars, degree - e, cur, pos + 1, out);
    }
}

}  // namespace

int MultiIndex::order() const {
    int s = 0;
    for (int e : exps) s += e;
    return s;
}

double MultiIndex::factorial() const {
    double f = 1.0;
    for (int e : exps) {
        for (int j = 2; j <= e; ++j) f *= j;
    }
    return f;
}

bool MultiIndex::leq(const MultiIndex& s) const {
    if (exps.size() != s.exps.size()) return false;
    for (std::size_t i = 0; i < exps.size(); ++i) {
        if (exps[i] > s.exps[i]) return false;
    }
    return true;
}

double binomial(std::span<const int> r, std::span<const int> s) {
    if (r.size() != s.size()) {
        throw std::invalid_argument("binomial: multi-index lengths differ");
    }
    double b = 1.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (s[i] > r[i]) return 0.0;
        // binom(r_i, s_i) computed incrementally
        double c = 1.0;
        for (int j = 1; j <= s[i]; ++j) {
            c = c * (r[i] - s[i] + j) / j;
        }
        b *= c;
    }
    return b;
}

double binomial(const MultiIndex& r, const MultiIndex& s) {
    return binomial(std::span<const int>(r.exps), std::span<const int>(s.exps));
}

std::uint64_t dimension(int nvars, int order) {
    if (nvars < 1 || order < 0) {
        throw std::invalid_argument("dimension: require nvars >= 1, order >= 0");
    }
    // C(n+k, k) built as a product of exact integer steps.
    std::uint64_t result = 1;
    for (int j = 1; j <= order; ++j) {
        const std::uint64_t num = static_cast<std::uint64_t>(nvars) + j;
        std::uint64_t prod;
        if (__builtin_mul_overflow(result, num, &prod)) {
            throw std::overflow_error("dimension: binomial overflows uint64");
        }
        result = prod / j;  // exact: C(n+j, j) = C(n+j-1, j-1) * (n+j) / j
    }
    return result;
}

std::vector<MultiIndex> enumerate_multi_indices(int nvars, int max_order) {
    if (nvars < 1 || max_order < 0) {
        throw std::invalid_argument("enumerate_multi_indices: bad arguments");
    }
    std::vector<MultiIndex> out;
    std::vector<int> flat;
    std::vector<int> cur(nvars, 0);
    for (int d = 0; d <= max_order; ++d) {
        flat.clear();
        enumerate_degree(nvars, d, cur, 0, flat);
        for (std::size_t i = 0; i + nvars <= flat.size(); i += nvars) {
            out.emplace_back(std::vector<int>(flat.begin() + i, flat.begin() + i + nvars));
        }
    }
    return out;
}

MonomialBasis::MonomialBasis(int nvars, int order) : nvars_(nvars), order_(order) {
    const std::uint64_t dim = dimension(nvars, order);
    if (dim > (1u << 28)) {
        throw std::invalid_argument("MonomialBasis: dimension too large");
    }
    exps_.reserve(dim * nvars);
    degrees_.reserve(dim);
    degree_offsets_.resize(order + 2, 0);
    std::vector<int> cur(nvars, 0);
    for (int d = 0; d <= order; ++d) {
        degree_offsets_[d] = static_cast<int>(degrees_.size());
        std::vector<int> flat;
        enumerate_degree(nvars, d, cur, 0, flat);
        for (std::size_t i = 0; i + nvars <= flat.size(); i += nvars) {
            exps_.insert(exps_.end(), flat.begin() + i, flat.begin() + i + nvars);
            degrees_.push_back(d);
        }
    }
    degree_offsets_[order + 1] = static_cast<int>(degrees_.size());
    lookup_.reserve(degrees_.size() * 2);
    for (int i = 0; i < static_cast<int>(degrees_.size()); ++i) {
        lookup_.emplace(pack_key(exponents(i)), i);
    }
}

int MonomialBasis::index_of(std::span<const int> exps) const {
    if (static_cast<int>(exps.size()) != nvars_) {
        throw std::invalid_argument("MonomialBasis::index_of: wrong length");
    }
    if (!packable(exps)) return -1;
    auto it = lookup_.find(pack_key(exps));
    return it == lookup_.end() ? -1 : it->second;
}

void MonomialBasis::ensure_mul_table() const {
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    if (mul_built_.load(std::memory_order_acquire)) return;
    const int dim = size();
    std::vector<std::vector<MulEntry>> table(dim);
    std::vector<int> sum(nvars_);
    for (int i = 0; i < dim; ++i) {
        const int di = degrees_[i];
        const auto ei = exponents(i);
        const int jmax = degree_offsets_[order_ - di + 1];
        table[i].reserve(jmax);
        for (int j = 0; j < jmax; ++j) {
            const auto ej = exponents(j);
            for (int v = 0; v < nvars_; ++v) sum[v] = ei[v] + ej[v];
            auto it = lookup_.find(pack_key(sum));
            table[i].push_back({j, it->second});
        }
    }
    mul_table_ = std::move(table);
    mul_built_.store(true, std::memory_order_release);
}

const std::vector<MonomialBasis::MulEntry>& MonomialBasis::mul_entries(int lhs_index) const {
    if (!mul_built_.load(std::memory_order_acquire)) ensure_mul_table();
    return mul_table_[lhs_index];
}

std::shared_ptr<const MonomialBasis> MonomialBasis::get(int nvars, int order) {
    static std::mutex mtx;
    static std::unordered_map<std::uint64_t, std::shared_ptr<const MonomialBasis>> cache;
    const std::uint64_t key =
        (static_cast<std::uint64_t>(nvars) << 32) | static_cast<std::uint32_t>(order);
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto basis = std::shared_ptr<const MonomialBasis>(new MonomialBasis(nvars, order));
    cache.emplace(key, basis);
    return basis;
}

}  // namespace uprop
